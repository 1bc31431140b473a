#pragma once

#include <stdexcept>
#include <string>

namespace ringkit {

enum class ErrorKind {
  kInvalidArgument,  // precondition violated by the caller
  kConfig,           // experiment configuration rejected
  kNumeric,          // NaN/Inf or divergence detected
  kIo,               // file system or format failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_invalid(const std::string& what);
[[noreturn]] void throw_io(const std::string& what);
[[noreturn]] void throw_numeric(const std::string& what);
[[noreturn]] void throw_config(const std::string& what);

inline void require(bool cond, const std::string& what) {
  if (!cond) throw_invalid(what);
}

}  // namespace ringkit
