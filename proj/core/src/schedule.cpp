#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "pdd/error.hpp"
#include "pdd/policy.hpp"

namespace pdd {

void ScheduleRecord::validate() const {
    if (dataset_size == 0) throw ConfigError("schedule dataset size must be positive");
    if (entries.size() != epochs)
        throw ConfigError(fmt::format("schedule has {} entries for {} epochs", entries.size(), epochs));
    if (entries.empty()) throw ConfigError("schedule is empty");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].epoch != i + 1)
            throw ConfigError(fmt::format("schedule entry {} has epoch {}, expected {}", i + 1, entries[i].epoch, i + 1));
        if (entries[i].retained > dataset_size)
            throw ConfigError(fmt::format("epoch {} retains {} > N = {}", entries[i].epoch, entries[i].retained,
                                          dataset_size));
    }
    if (entries.back().retained != dataset_size)
        throw ConfigError(fmt::format("missing revision epoch: last retained {} != N = {}", entries.back().retained,
                                      dataset_size));
}

std::size_t ScheduleRecord::total_retained() const noexcept {
    std::size_t sum = 0;
    for (const auto& e : entries) sum += e.retained;
    return sum;
}

double ScheduleRecord::effective_epochs() const noexcept {
    return dataset_size == 0 ? 0.0 : static_cast<double>(total_retained()) / static_cast<double>(dataset_size);
}

std::string format_schedule(const ScheduleRecord& rec) {
    std::string out = "epoch,retained\n";
    for (const auto& e : rec.entries) out += fmt::format("{},{}\n", e.epoch, e.retained);
    return out;
}

namespace {

std::size_t parse_count(std::string_view field, const std::string& source, std::size_t line) {
    std::size_t v = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc{} || ptr != end)
        throw ParseError(source, line, fmt::format("expected a non-negative integer, got '{}'", field));
    return v;
}

}  // namespace

ScheduleRecord parse_schedule(std::string_view text, std::optional<std::size_t> expected_size,
                              const std::string& source) {
    ScheduleRecord rec;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        const bool last = nl == std::string_view::npos;
        std::string_view line = text.substr(pos, last ? std::string_view::npos : nl - pos);
        pos = last ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (!header_seen) {
            if (line != "epoch,retained")
                throw ParseError(source, line_no, fmt::format("expected header 'epoch,retained', got '{}'", line));
            header_seen = true;
            continue;
        }
        if (line.empty()) {
            if (pos >= text.size()) break;
            throw ParseError(source, line_no, "blank line");
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
            throw ParseError(source, line_no, fmt::format("expected 'epoch,retained', got '{}'", line));
        const std::size_t epoch = parse_count(line.substr(0, comma), source, line_no);
        const std::size_t retained = parse_count(line.substr(comma + 1), source, line_no);
        if (epoch != rec.entries.size() + 1)
            throw ParseError(source, line_no, fmt::format("epoch {} out of order, expected {}", epoch,
                                                          rec.entries.size() + 1));
        if (expected_size && retained > *expected_size)
            throw ParseError(source, line_no, fmt::format("retained {} exceeds N = {}", retained, *expected_size));
        rec.entries.push_back({epoch, retained});
    }
    if (!header_seen) throw ParseError(source, 1, "empty schedule file");
    if (rec.entries.empty()) throw ParseError(source, line_no, "schedule has no epochs");

    rec.epochs = rec.entries.size();
    if (expected_size) {
        rec.dataset_size = *expected_size;
    } else {
        for (const auto& e : rec.entries) rec.dataset_size = std::max(rec.dataset_size, e.retained);
    }
    if (rec.entries.back().retained != rec.dataset_size)
        throw ParseError(source, line_no,
                         fmt::format("missing revision epoch: last retained {} != N = {}", rec.entries.back().retained,
                                     rec.dataset_size));
    if (rec.dataset_size == 0) throw ParseError(source, line_no, "schedule retains no samples");
    return rec;
}

void write_schedule(const ScheduleRecord& rec, const std::filesystem::path& path) {
    rec.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestError(path.string(), "cannot open for writing");
    out << format_schedule(rec);
    if (!out) throw IngestError(path.string(), "write failed");
}

ScheduleRecord read_schedule(const std::filesystem::path& path, std::optional<std::size_t> expected_size) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string(), "cannot open schedule file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_schedule(ss.str(), expected_size, path.string());
}

}  // namespace pdd
