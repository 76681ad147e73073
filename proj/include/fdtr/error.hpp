#pragma once

#include <stdexcept>
#include <string>

namespace fdtr {

enum class ErrorKind {
  Config,        // invalid configuration or problem setup
  Dimension,     // vector/matrix sizes disagree
  Evaluation,    // evaluator failed or returned a non-finite response
  Protocol,      // malformed or mismatched external-evaluator reply
  RemoteError,   // external evaluator answered with an error variant
  Timeout,       // external evaluator did not answer in time
  ProcessExited, // external evaluator process went away
  Io,            // file system failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fdtr
