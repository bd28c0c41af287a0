#include "pdd/error.hpp"

#include <fmt/format.h>

namespace pdd {

IngestError::IngestError(const std::string& path, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", path, what)), path_(path) {}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("{}:{}: {}", source, line, what)), line_(line) {}

NumericalError::NumericalError(const std::string& what, std::size_t epoch, std::size_t batch)
    : std::runtime_error(epoch == 0 ? what : fmt::format("{} (epoch {}, batch {})", what, epoch, batch)),
      epoch_(epoch),
      batch_(batch) {}

}  // namespace pdd
