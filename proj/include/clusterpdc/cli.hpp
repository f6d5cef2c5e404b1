#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clusterpdc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitComputation = 3;

/// Runs one command line (without the program name). `in` feeds commands that
/// read a stream path from standard input (analyze after simulate).
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace clusterpdc::cli
