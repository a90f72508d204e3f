#include "cssam/error.hpp"

namespace cssam {

ParseError::ParseError(const std::string& what, std::size_t line,
                       std::size_t column)
    : DataError(what + " at " + std::to_string(line) + ":" +
                std::to_string(column)),
      line_(line),
      column_(column) {}

}  // namespace cssam
