#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace wnlab::cli {

enum ExitCode : int { Ok = 0, Usage = 1, Data = 2, Numerical = 3, Interrupted = 130 };

/// Entry point behind the `wnlab` executable. `args` excludes the program name.
/// Human summaries go to `out`, diagnostics to `err`. A set `cancel` flag makes
/// campaigns stop early and flush the trials completed so far.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* cancel = nullptr);

}  // namespace wnlab::cli
