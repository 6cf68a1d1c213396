#pragma once

#include <iosfwd>

namespace oed {

/// Entry point of the `oed` tool. Subcommands design, evaluate, validate and
/// reproduce; see `oed --help`. Returns 0 on success, 2 on usage or input
/// errors, 1 on numerical failure (or a failed validation check).
int dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace oed
