#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dg {

/// Runs one command line (without the program name). Returns 0 on success,
/// 1 on user errors (bad flags, invalid input files) and 2 on internal
/// failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Resolves an input path: as given, then under $DG_EXAMPLES (full relative
/// path, then file name only).
std::string resolve_input(const std::string& path);

}  // namespace dg
