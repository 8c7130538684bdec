#pragma once

#include <string>
#include <vector>

namespace endo::cli {

/// Exit codes: 0 success, 1 diagnostic failure (model incomplete / drift),
/// 2 input error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiagnostic = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one subcommand (validate, solve, check, hedge, equilibrium, mc).
/// `args` excludes the program name. Reports go to `out` as JSON.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_main(int argc, char** argv);

}  // namespace endo::cli
