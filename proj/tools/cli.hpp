#pragma once

#include <iosfwd>

namespace taskseq::cli {

/// Runs one subcommand. Returns 0 on success, 2 on a usage error and 1 on any
/// other failure (with a diagnostic on `err`).
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace taskseq::cli
