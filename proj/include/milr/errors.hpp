#pragma once

#include <stdexcept>
#include <string>

namespace milr {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { Config = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::Data, w) {}
};
struct NumericError : Error {
  NumericError(const std::string& w, int layer = -1) : Error(ErrorKind::Numeric, w), layer(layer) {}
  int layer;  // offending layer, -1 if not layer-specific
};

int exit_code(const Error& e);

}  // namespace milr
