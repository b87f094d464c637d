#pragma once

#include <iosfwd>

namespace md {

/// Entry point of the `mirrordepth` tool. Returns 0 on success, 2 on a usage
/// error, 1 on a runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace md
