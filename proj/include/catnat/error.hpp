#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace catnat {

enum class ErrorKind {
  LeafNode,
  OutOfRange,
  EmptyInput,
  ShapeMismatch,
  TooLarge,
  Singular,
  ZeroSupport,
  DegenerateConfig,
  BadShape,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every library failure is reported through this exception; `kind()` lets
// callers (and the CLI exit-code mapping) branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace catnat
