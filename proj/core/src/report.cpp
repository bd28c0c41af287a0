#include "pdd/report.hpp"

#include <fmt/format.h>
#include <fstream>
#include <json.hpp>

#include "pdd/error.hpp"

namespace pdd {

std::string metrics_csv(const RunMetrics& metrics) {
    std::string out = "epoch,retained,backprop_cum,train_loss,test_acc\n";
    for (const auto& e : metrics.epochs) {
        const std::string loss = e.train_loss ? fmt::format("{:.6f}", *e.train_loss) : std::string("n/a");
        out += fmt::format("{},{},{},{},{:.6f}\n", e.epoch, e.retained, e.backprop_cum, loss, e.test_accuracy);
    }
    return out;
}

std::string histogram_csv(const RunMetrics& metrics) {
    std::string out = "sample_id,backprop_count\n";
    for (std::size_t i = 0; i < metrics.per_sample.size(); ++i) out += fmt::format("{},{}\n", i, metrics.per_sample[i]);
    return out;
}

std::string summary_json(const RunMetrics& metrics, std::string_view config_json) {
    nlohmann::ordered_json j;
    j["effective_epochs"] = metrics.effective_epochs;
    j["final_accuracy"] = metrics.final_accuracy();
    j["variant"] = std::string(to_string(metrics.variant));
    j["dataset_size"] = metrics.dataset_size;
    j["backprop_total"] = metrics.backprop_total;
    j["config"] = config_json.empty() ? nlohmann::ordered_json::object() : nlohmann::ordered_json::parse(config_json);
    return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestError(path.string(), "cannot open for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IngestError(path.string(), "write failed");
}

}  // namespace pdd
