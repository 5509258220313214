#pragma once

#include <iosfwd>
#include <string>

namespace mvres::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Runs `mvres <subcommand> ...` and returns the exit status: 0 on success,
/// 1 on any toolkit error, 2 on a usage error. Diagnostics go to `err` as a
/// single line `mvres: error: <kind>: <message>`.
///
/// MVRES_WORKERS sets the default worker count and MVRES_VERBOSITY (0 quiet,
/// 1 warnings, 2 progress) the default verbosity; flags override both.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);

}  // namespace mvres::cli
