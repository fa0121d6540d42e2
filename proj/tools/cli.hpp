#pragma once

#include <iosfwd>

namespace pvea::cli {

/// Runs one invocation. Exit codes: 0 success, 1 input or parse error,
/// 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pvea::cli
