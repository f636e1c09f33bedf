#pragma once

#include <iosfwd>

namespace hetcache::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kNotConverged = 2 };

/// Entry point of the `hetcache` tool. Results go to `out` unless --out
/// redirects them; usage errors and diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hetcache::cli
