#pragma once

#include <iosfwd>

namespace posthoc::cli {

/// Runs one subcommand, writing a single JSON report document to out and
/// diagnostics to err. Returns the process exit code: 0 success, 1 domain or
/// validation error, 2 file-format error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace posthoc::cli
