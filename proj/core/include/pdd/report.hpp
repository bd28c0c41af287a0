#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pdd/trainer.hpp"

namespace pdd {

/// `epoch,retained,backprop_cum,train_loss,test_acc`, one row per epoch.
/// Epochs without backprops report train_loss as `n/a`.
std::string metrics_csv(const RunMetrics& metrics);

/// `sample_id,backprop_count`, one row per training sample.
std::string histogram_csv(const RunMetrics& metrics);

/// {"effective_epochs", "final_accuracy", "variant", "dataset_size",
///  "backprop_total", "config"}; `config_json` is embedded verbatim as parsed JSON.
std::string summary_json(const RunMetrics& metrics, std::string_view config_json);

/// Writes `text` to `path`, throwing IngestError with the path on failure.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace pdd
