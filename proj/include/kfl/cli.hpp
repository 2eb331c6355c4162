#pragma once

#include <iosfwd>

namespace kfl {

// Command-line entry point: verbs run, list, describe, verify. Returns the
// process exit code: 0 all checks passed, 1 invariant failure, 2 usage.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kfl
