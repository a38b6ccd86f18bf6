#include "spinprobe/error.hpp"

namespace spinprobe {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::BranchFailure: return "branch-failure";
    case ErrorKind::DegenerateChain: return "degenerate-chain";
    case ErrorKind::MissingPeak: return "missing-peak";
    case ErrorKind::MalformedInput: return "malformed-input";
    case ErrorKind::Unidentifiable: return "unidentifiable";
    case ErrorKind::InconsistentFeatures: return "inconsistent-features";
    case ErrorKind::AmbiguousSign: return "ambiguous-sign";
    case ErrorKind::ResolutionUnreachable: return "resolution-unreachable";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Io: return "io-error";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Unidentifiable:
    case ErrorKind::AmbiguousSign:
    case ErrorKind::DegenerateChain:
      return 3;
    case ErrorKind::Io:
      return 4;
    default:
      return 2;
  }
}

}  // namespace spinprobe
