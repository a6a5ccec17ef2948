#pragma once

#include <iosfwd>

namespace rmhd::harness {

// rmhd <sweep|dispersion|besov-bench|single-run|report> [options].
// Exit codes: 0 success, 1 usage or IO error, 2 at least one FAIL verdict.
int cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rmhd::harness
