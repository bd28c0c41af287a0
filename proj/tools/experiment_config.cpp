#include "experiment_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <string_view>

#include "pdd/error.hpp"

namespace pdd::cli {

namespace {

using json = nlohmann::ordered_json;

// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string scope) : obj_(obj), scope_(std::move(scope)) {
        if (!obj_.is_object()) throw ConfigError(fmt::format("{}: expected an object", scope_));
    }

    bool has(const std::string& key) {
        known_.insert(key);
        return obj_.contains(key);
    }

    template <typename T>
    std::optional<T> get(const std::string& key) {
        if (!has(key)) return std::nullopt;
        try {
            return obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(fmt::format("{}: field '{}' has the wrong type", scope_, path(key)));
        }
    }

    template <typename T>
    T require(const std::string& key) {
        auto v = get<T>(key);
        if (!v) throw ConfigError(fmt::format("{}: missing required field '{}'", scope_, path(key)));
        return *v;
    }

    const json& child(const std::string& key) {
        known_.insert(key);
        return obj_.at(key);
    }

    std::string path(const std::string& key) const { return scope_ == "config" ? key : scope_ + "." + key; }

    void reject_unknown() const {
        for (const auto& [key, _] : obj_.items())
            if (!known_.count(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", scope_, path(key)));
    }

private:
    const json& obj_;
    std::string scope_;
    std::set<std::string> known_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

OptimizerSettings parse_optimizer(const json& obj) {
    ObjectReader r(obj, "optimizer");
    OptimizerSettings s;
    if (auto kind = r.get<std::string>("kind")) {
        if (*kind == "adamw") {
            s.kind = OptimizerKind::adamw;
        } else if (*kind == "sgd") {
            s.kind = OptimizerKind::sgd_momentum;
            s.weight_decay = 0.0;
        } else {
            throw ConfigError(fmt::format("optimizer.kind: unknown optimizer '{}' (adamw | sgd)", *kind));
        }
    }
    s.learning_rate = r.get<double>("lr").value_or(s.learning_rate);
    s.momentum = r.get<double>("momentum").value_or(s.momentum);
    s.beta1 = r.get<double>("beta1").value_or(s.beta1);
    s.beta2 = r.get<double>("beta2").value_or(s.beta2);
    s.epsilon = r.get<double>("eps").value_or(s.epsilon);
    s.weight_decay = r.get<double>("weight_decay").value_or(s.weight_decay);
    s.decay_factor = r.get<double>("decay_factor").value_or(s.decay_factor);
    r.reject_unknown();
    return s;
}

void parse_data(const json& obj, const std::filesystem::path& base, ExperimentConfig& cfg) {
    ObjectReader r(obj, "data");
    const auto source = r.require<std::string>("source");
    if (source == "synthetic") {
        SyntheticSource s;
        s.params.classes = r.get<std::size_t>("classes").value_or(s.params.classes);
        s.params.per_class = r.get<std::size_t>("per_class").value_or(s.params.per_class);
        s.params.dims = r.get<std::size_t>("dims").value_or(s.params.dims);
        s.params.spread = r.get<double>("spread").value_or(s.params.spread);
        s.params.seed = r.get<std::uint64_t>("seed").value_or(s.params.seed);
        s.test_per_class = r.get<std::size_t>("test_per_class").value_or(std::max<std::size_t>(1, s.params.per_class / 4));
        if (s.params.classes == 0 || s.params.per_class == 0 || s.params.dims == 0 || s.test_per_class == 0)
            throw ConfigError("data: classes, per_class, test_per_class and dims must be positive");
        if (s.params.dims < s.params.classes) throw ConfigError("data: dims must be >= classes");
        cfg.synthetic = s;
    } else if (source == "idx") {
        IdxSource s;
        s.train_images = resolve(base, r.require<std::string>("train_images"));
        s.train_labels = resolve(base, r.require<std::string>("train_labels"));
        s.test_images = resolve(base, r.require<std::string>("test_images"));
        s.test_labels = resolve(base, r.require<std::string>("test_labels"));
        cfg.idx = s;
    } else {
        throw ConfigError(fmt::format("data.source: unknown source '{}' (synthetic | idx)", source));
    }
    r.reject_unknown();
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc, const std::filesystem::path& base_dir,
                                         std::optional<std::uint64_t> seed_override) {
    ObjectReader r(doc, "config");
    ExperimentConfig cfg;
    cfg.echo = doc;
    DropoutPolicy& policy = cfg.run.policy;

    policy.variant = parse_variant(r.require<std::string>("variant"));
    policy.tau = r.get<double>("tau");
    policy.gamma = r.get<double>("gamma");
    if (auto fn = r.get<std::string>("decay")) policy.decay = parse_decay_kind(*fn);
    policy.alpha = r.get<double>("alpha");
    policy.loss_threshold = r.get<double>("loss_threshold");
    if (auto g = r.get<std::string>("srd_granularity")) policy.srd_granularity = parse_srd_granularity(*g);
    policy.epochs = r.require<std::size_t>("epochs");
    policy.revision_epochs = r.get<std::size_t>("revision_epochs").value_or(1);
    if (auto sched = r.get<std::string>("schedule")) policy.replay = read_schedule(resolve(base_dir, *sched));

    cfg.run.seed = r.get<std::uint64_t>("seed").value_or(0);
    if (seed_override) {
        cfg.run.seed = *seed_override;
        cfg.echo["seed"] = *seed_override;
    }
    cfg.run.batch_size = r.get<std::size_t>("batch_size").value_or(cfg.run.batch_size);
    if (auto hidden = r.get<std::vector<std::size_t>>("hidden")) cfg.run.hidden = *hidden;
    if (r.has("optimizer")) cfg.run.optimizer = parse_optimizer(r.child("optimizer"));

    if (!r.has("data")) throw ConfigError("config: missing required field 'data'");
    parse_data(r.child("data"), base_dir, cfg);

    if (auto out = r.get<std::string>("output_dir")) cfg.output_dir = resolve(base_dir, *out);

    if (r.has("sweep")) {
        ObjectReader s(r.child("sweep"), "sweep");
        cfg.sweep.tau = s.get<std::vector<double>>("tau").value_or(std::vector<double>{});
        cfg.sweep.epochs = s.get<std::vector<std::size_t>>("epochs").value_or(std::vector<std::size_t>{});
        s.reject_unknown();
        if (cfg.sweep.empty()) throw ConfigError("sweep: needs at least one axis (tau, epochs)");
        if (!cfg.sweep.tau.empty() && policy.variant != Variant::dbpd && policy.variant != Variant::smrd_inline)
            throw ConfigError("sweep.tau: only dbpd and smrd-inline use tau");
    }
    r.reject_unknown();

    // Sweeps override tau and epochs per run; bad individual points fail at run time.
    RunConfig probe = cfg.run;
    if (!cfg.sweep.tau.empty()) probe.policy.tau = cfg.sweep.tau.front();
    if (!cfg.sweep.epochs.empty())
        probe.policy.epochs = *std::max_element(cfg.sweep.epochs.begin(), cfg.sweep.epochs.end());
    if (!(probe.policy.variant == Variant::smrd_replay && !cfg.sweep.epochs.empty())) probe.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("{}: cannot open config file", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
    }
    return parse_experiment_config(doc, path.parent_path(), seed_override);
}

std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg) {
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        Dataset train = gen_synthetic(s.params);
        SyntheticParams test_params = s.params;
        test_params.per_class = s.test_per_class;
        test_params.seed = s.params.seed + 1;
        return {std::move(train), gen_synthetic(test_params)};
    }
    if (!cfg.idx) throw ConfigError("config has no data source");
    Dataset train = load_idx(cfg.idx->train_images, cfg.idx->train_labels);
    Dataset test = load_idx(cfg.idx->test_images, cfg.idx->test_labels, train.classes);
    return {std::move(train), std::move(test)};
}

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv("PDD_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    std::string_view s(raw);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(fmt::format("PDD_SEED: expected an unsigned integer, got '{}'", s));
    return v;
}

}  // namespace pdd::cli
