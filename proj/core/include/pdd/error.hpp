#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdd {

/// Invalid configuration or mismatched dimensions.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A dataset file could not be ingested. The message names the file.
class IngestError : public std::runtime_error {
public:
    IngestError(const std::string& path, const std::string& what);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A text artifact (schedule file, config) is malformed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Non-finite loss or gradient during training.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t epoch = 0, std::size_t batch = 0);
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace pdd
