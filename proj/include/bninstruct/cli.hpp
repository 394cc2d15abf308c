#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bninstruct {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line. args excludes the program name. Data goes to out,
/// diagnostics to err.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bninstruct
