#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spinprobe::cli {

inline constexpr unsigned long long kDefaultSeed = 42;

// Runs one command line (without the program name). Output files are
// written atomically; anything printed goes to `out`/`err`. Returns the exit
// code: 0 ok, 2 input error, 3 unidentifiable or ambiguous, 4 I/O.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spinprobe::cli
