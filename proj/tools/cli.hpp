#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qtransport::cli {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Environment variable holding the default worker count.
inline constexpr const char* kThreadsEnv = "QTRANSPORT_THREADS";

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qtransport::cli
