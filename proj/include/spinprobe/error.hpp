#pragma once

#include <stdexcept>
#include <string>

namespace spinprobe {

enum class ErrorKind {
  InvalidInput,
  BranchFailure,
  DegenerateChain,
  MissingPeak,
  MalformedInput,
  Unidentifiable,
  InconsistentFeatures,
  AmbiguousSign,
  ResolutionUnreachable,
  Parse,
  Io,
};

const char* to_string(ErrorKind kind);

// All library failures are reported with this exception; `kind()` tells the
// caller which recovery (or exit code) applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// CLI exit codes: 2 input error, 3 unidentifiable/ambiguous, 4 I/O.
int exit_code(ErrorKind kind);

}  // namespace spinprobe
