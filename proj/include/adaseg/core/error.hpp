#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace adaseg {

// Base error carrying a machine-readable kind next to the human message.
// The CLI serializes kind+message as JSON on stderr and maps it to a
// nonzero exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& m) : Error("argument", m) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};
struct LookupError : Error {
  explicit LookupError(const std::string& m) : Error("lookup", m) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& m) : Error("format", m) {}
};
struct DependencyError : Error {
  explicit DependencyError(const std::string& m) : Error("dependency", m) {}
};
struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& m)
      : Error("degenerate-input", m) {}
};
// Thrown by a label-locked dataset when anything requests labels from it.
struct LabelAccessError : Error {
  explicit LabelAccessError(const std::string& m) : Error("label-access", m) {}
};

}  // namespace adaseg
