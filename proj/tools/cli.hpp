#pragma once

#include <iosfwd>

namespace wearmi::cli {

/// Entry point for the `wearmi` tool. Returns the process exit status:
/// 0 on success, 1 on a runtime error, 2 on a usage error. Errors are
/// reported on `err` as a single JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wearmi::cli
