#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fundus::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind `fundus_screen`; args exclude the program name.
// Results go to `out`, log lines and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fundus::cli
