#pragma once

#include <stdexcept>
#include <string>

namespace purank {

enum class ErrorKind {
  invalid_argument,
  io,
  parse,
  validation,
  dimension,
  numeric,
};

// Every failure raised by the library is a purank::Error; the C API maps
// the kind onto a status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace purank
