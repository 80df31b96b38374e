#pragma once

#include <ostream>

namespace qtt::cli {

/// Exit codes of run().
enum ExitCode : int { kOk = 0, kUsage = 1, kNumeric = 2 };

/// Entry point of the qtt tool. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace qtt::cli
