#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace metabal::cli {

/// Entry point behind the `metabal` binary. Exit codes: 0 success,
/// 2 validation/usage error, 1 internal error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace metabal::cli
