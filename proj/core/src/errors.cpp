#include "sgdvi/errors.hpp"

namespace sgdvi {

DimensionMismatch::DimensionMismatch(const std::string& what,
                                     std::size_t expected, std::size_t actual)
    : Error(what + ": expected dimension " + std::to_string(expected) +
            ", got " + std::to_string(actual)),
      expected_(expected),
      actual_(actual) {}

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

}  // namespace sgdvi
