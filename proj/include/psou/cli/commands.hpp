#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psou::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitValidation = 4;

/// Environment variable that overrides the output directory.
inline constexpr const char* kOutputDirEnv = "PSOU_OUTPUT_DIR";

/// Runs one subcommand. `args` excludes the program name. A one-line JSON
/// summary goes to `out`; errors are written to `err` as JSON.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psou::cli
