#include "langadapt/util/error.hpp"

namespace langadapt {

namespace {

std::string format_parse(const std::string& source, std::size_t line, const std::string& message) {
  std::string out = source;
  if (line > 0) {
    out += ":" + std::to_string(line);
  }
  out += ": " + message;
  return out;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& message)
    : Error(format_parse(source, line, message)), line_(line) {}

}  // namespace langadapt
