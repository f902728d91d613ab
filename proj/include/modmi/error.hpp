#pragma once

#include <stdexcept>
#include <string>

namespace modmi {

enum class ErrorKind {
  Format,        // bad magic or malformed header
  SizeMismatch,  // payload length disagrees with header
  Data,          // non-finite or out-of-range values
  Parse,         // text input that is not what it claims to be
  Io,
  Manifest,
  Infeasible,    // e.g. more clusters than distinct rows
  Alignment,     // streams of different length or rate
  Precondition,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Same error with additional context prepended, e.g. the stream name.
  Error with_context(const std::string& context) const {
    return Error(kind_, context + ": " + what());
  }

 private:
  ErrorKind kind_;
};

}  // namespace modmi
