#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fingertrace::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;     // processing failed (e.g. no usable records)
inline constexpr int kUsageError = 2;  // bad flags, missing input, invalid configuration

/// Runs the `fingertrace` command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fingertrace::cli
