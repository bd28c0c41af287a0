#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "experiment_config.hpp"
#include "pdd/error.hpp"
#include "pdd/report.hpp"

namespace pdd::cli {

namespace fs = std::filesystem;

namespace {

struct RunOutcome {
    double effective_epochs = 0.0;
    double final_accuracy = 0.0;
};

void prepare_output_dir(const fs::path& dir, bool force) {
    if (dir.empty()) throw ConfigError("no output directory (set output_dir or pass --out)");
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError(fmt::format("{}: exists and is not a directory", dir.string()));
        if (!fs::is_empty(dir) && !force)
            throw ConfigError(fmt::format("{}: output directory is not empty (use --force)", dir.string()));
    }
    fs::create_directories(dir);
}

RunOutcome train_into(const ExperimentConfig& cfg, const fs::path& dir, bool force, std::ostream& out) {
    prepare_output_dir(dir, force);
    auto [train, test] = load_datasets(cfg);
    const RunResult result = run_training(train, test, cfg.run);
    const RunMetrics& m = result.metrics;

    write_text(dir / "metrics.csv", metrics_csv(m));
    write_text(dir / "histogram.csv", histogram_csv(m));
    write_text(dir / "summary.json", summary_json(m, cfg.echo.dump()));
    if (m.variant == Variant::dbpd) write_schedule(record_dbpd_schedule(m), dir / "schedule.csv");

    out << fmt::format("effective_epochs={:.6f} final_accuracy={:.6f} output={}\n", m.effective_epochs,
                       m.final_accuracy(), dir.string());
    return {m.effective_epochs, m.final_accuracy()};
}

int cmd_train(const fs::path& config, const fs::path& out_override, bool force, std::ostream& out) {
    ExperimentConfig cfg = load_experiment_config(config, seed_from_env());
    if (!out_override.empty()) cfg.output_dir = out_override;
    train_into(cfg, cfg.output_dir, force, out);
    return exit_ok;
}

std::string axis_label(const std::optional<double>& tau, const std::optional<std::size_t>& epochs) {
    std::string label;
    if (tau) label += fmt::format("tau-{}", *tau);
    if (epochs) label += fmt::format("{}epochs-{}", label.empty() ? "" : "_", *epochs);
    return label;
}

int report_error(const std::exception& e, std::ostream& err);

int cmd_sweep(const fs::path& config, const fs::path& out_override, bool force, std::ostream& out,
              std::ostream& err) {
    const ExperimentConfig base = load_experiment_config(config, seed_from_env());
    if (base.sweep.empty()) throw ConfigError("sweep: config has no sweep axes");
    const fs::path root = out_override.empty() ? base.output_dir : out_override;
    prepare_output_dir(root, force);

    std::vector<std::optional<double>> taus;
    for (double t : base.sweep.tau) taus.emplace_back(t);
    std::sort(taus.begin(), taus.end());
    if (taus.empty()) taus.emplace_back(std::nullopt);
    std::vector<std::optional<std::size_t>> budgets;
    for (std::size_t e : base.sweep.epochs) budgets.emplace_back(e);
    std::sort(budgets.begin(), budgets.end());
    if (budgets.empty()) budgets.emplace_back(std::nullopt);

    std::string csv = "axis_values,effective_epochs,final_acc\n";
    int status = exit_ok;
    for (const auto& tau : taus) {
        for (const auto& epochs : budgets) {
            ExperimentConfig cfg = base;
            if (tau) {
                cfg.run.policy.tau = *tau;
                cfg.echo["tau"] = *tau;
            }
            if (epochs) {
                cfg.run.policy.epochs = *epochs;
                cfg.echo["epochs"] = *epochs;
            }
            cfg.echo.erase("sweep");
            const std::string label = axis_label(tau, epochs);
            try {
                cfg.run.validate();
                const RunOutcome r = train_into(cfg, root / label, force, out);
                csv += fmt::format("{},{:.6f},{:.6f}\n", label, r.effective_epochs, r.final_accuracy);
            } catch (const std::exception& e) {
                err << label << ": ";
                status = std::max(status, report_error(e, err));
                csv += fmt::format("{},n/a,n/a\n", label);
            }
        }
    }
    write_text(root / "sweep.csv", csv);
    out << fmt::format("sweep: {} runs, results in {}\n", taus.size() * budgets.size(), (root / "sweep.csv").string());
    return status;
}

struct DryRunArgs {
    std::string variant = "srd";
    std::optional<double> gamma;
    std::string fn;
    std::optional<double> alpha;
    std::string schedule;
    std::string granularity = "epoch";
    std::size_t epochs = 0;
    std::size_t revision = 1;
    std::size_t n = 0;
    std::size_t batch = 32;
    std::string out;
};

int cmd_dry_run(const DryRunArgs& a, std::ostream& out) {
    RunConfig cfg;
    cfg.dry_run = true;
    cfg.batch_size = a.batch;
    DropoutPolicy& p = cfg.policy;
    p.variant = parse_variant(a.variant);
    if (!is_model_free(p.variant))
        throw ConfigError(fmt::format("dry-run: variant {} depends on model state; use srd, smrd-replay or analytic",
                                      a.variant));
    p.epochs = a.epochs;
    p.revision_epochs = a.revision;
    p.srd_granularity = parse_srd_granularity(a.granularity);
    if (a.gamma) {
        if (!(*a.gamma > 0.0 && *a.gamma < 1.0)) throw ConfigError("--gamma must be in (0, 1)");
        p.gamma = a.gamma;
    }
    if (!a.fn.empty()) p.decay = parse_decay_kind(a.fn);
    p.alpha = a.alpha;
    if (!a.schedule.empty()) p.replay = read_schedule(a.schedule, a.n == 0 ? std::nullopt : std::optional(a.n));
    std::size_t n = a.n;
    if (n == 0 && p.replay) n = p.replay->dataset_size;
    if (n == 0) throw ConfigError("--n is required");

    const DryRunResult r = dry_run_schedule(cfg, n);
    out << format_schedule(r.schedule);
    out << fmt::format("effective_epochs={:.6f}\n", r.effective_epochs);
    if (!a.out.empty()) write_schedule(r.schedule, a.out);
    return exit_ok;
}

struct GenArgs {
    SyntheticParams params;
    std::size_t test_per_class = 0;
    std::string out;
};

int cmd_gen_data(const GenArgs& a, std::ostream& out) {
    const fs::path dir(a.out);
    fs::create_directories(dir);
    const Dataset train = gen_synthetic(a.params);
    SyntheticParams tp = a.params;
    tp.per_class = a.test_per_class == 0 ? std::max<std::size_t>(1, a.params.per_class / 4) : a.test_per_class;
    tp.seed = a.params.seed + 1;
    const Dataset test = gen_synthetic(tp);
    save_idx(train, dir / "train-images.idx3-ubyte", dir / "train-labels.idx1-ubyte");
    save_idx(test, dir / "test-images.idx3-ubyte", dir / "test-labels.idx1-ubyte");
    out << fmt::format("wrote {} train and {} test samples to {}\n", train.size(), test.size(), dir.string());
    return exit_ok;
}

int cmd_schedule_check(const fs::path& file, std::size_t n, std::ostream& out) {
    const ScheduleRecord rec = read_schedule(file, n == 0 ? std::nullopt : std::optional(n));
    out << fmt::format("ok: {} epochs, N = {}, effective_epochs={:.6f}\n", rec.epochs, rec.dataset_size,
                       rec.effective_epochs());
    return exit_ok;
}

int report_error(const std::exception& e, std::ostream& err) {
    if (dynamic_cast<const NumericalError*>(&e)) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const IngestError*>(&e) || dynamic_cast<const ContractViolation*>(&e)) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    err << "error: " << e.what() << "\n";
    return exit_failure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Progressive data dropout training engine"};
    app.require_subcommand(1);

    fs::path train_config, train_out;
    bool train_force = false;
    auto* train = app.add_subcommand("train", "Train a model from a JSON config");
    train->add_option("config", train_config, "Config file")->required();
    train->add_option("--out", train_out, "Output directory (overrides output_dir)");
    train->add_flag("--force", train_force, "Allow writing into a non-empty output directory");

    fs::path sweep_config, sweep_out;
    bool sweep_force = false;
    auto* sweep = app.add_subcommand("sweep", "Run the cross product of a config's sweep axes");
    sweep->add_option("config", sweep_config, "Config file")->required();
    sweep->add_option("--out", sweep_out, "Output directory (overrides output_dir)");
    sweep->add_flag("--force", sweep_force, "Allow writing into non-empty output directories");

    DryRunArgs dry;
    auto* dry_run = app.add_subcommand("dry-run", "Predict the retained-count schedule and effective epochs");
    dry_run->add_option("--variant", dry.variant, "srd | smrd-replay | analytic");
    dry_run->add_option("--gamma", dry.gamma, "SRD decay factor in (0,1)");
    dry_run->add_option("--fn", dry.fn, "Analytic decay function");
    dry_run->add_option("--alpha", dry.alpha, "Analytic decay rate");
    dry_run->add_option("--schedule", dry.schedule, "Schedule file for smrd-replay");
    dry_run->add_option("--granularity", dry.granularity, "SRD count granularity: epoch | batch");
    dry_run->add_option("--epochs", dry.epochs, "Total epochs")->required();
    dry_run->add_option("--revision", dry.revision, "Revision epochs (default 1)");
    dry_run->add_option("--n", dry.n, "Dataset size");
    dry_run->add_option("--batch", dry.batch, "Batch size (default 32)");
    dry_run->add_option("--out", dry.out, "Write the schedule file here");

    GenArgs gen;
    auto* gen_data = app.add_subcommand("gen-data", "Write synthetic train/test IDX files");
    gen_data->add_option("--classes", gen.params.classes, "Number of classes");
    gen_data->add_option("--per-class", gen.params.per_class, "Training samples per class");
    gen_data->add_option("--test-per-class", gen.test_per_class, "Test samples per class (default per-class/4)");
    gen_data->add_option("--dims", gen.params.dims, "Feature dimension (>= classes)");
    gen_data->add_option("--spread", gen.params.spread, "Gaussian noise standard deviation");
    gen_data->add_option("--seed", gen.params.seed, "Generator seed");
    gen_data->add_option("--out", gen.out, "Output directory")->required();

    fs::path check_file;
    std::size_t check_n = 0;
    auto* schedule = app.add_subcommand("schedule", "Schedule file tools");
    schedule->require_subcommand(1);
    auto* check = schedule->add_subcommand("check", "Validate a schedule file");
    check->add_option("file", check_file, "Schedule file")->required();
    check->add_option("--n", check_n, "Expected dataset size");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }

    try {
        if (train->parsed()) return cmd_train(train_config, train_out, train_force, out);
        if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_out, sweep_force, out, err);
        if (dry_run->parsed()) return cmd_dry_run(dry, out);
        if (gen_data->parsed()) return cmd_gen_data(gen, out);
        if (check->parsed()) return cmd_schedule_check(check_file, check_n, out);
    } catch (const std::exception& e) {
        return report_error(e, err);
    }
    return exit_failure;
}

}  // namespace pdd::cli
