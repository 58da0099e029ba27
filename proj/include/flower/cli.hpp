#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flower::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kData = 3,
  kIo = 4,
  kConfig = 5,
};

/// Environment variable consulted for the worker thread count when
/// `--threads` is not given. It overrides the config file.
inline constexpr const char* kThreadsEnv = "FLOWER_NUM_THREADS";

/// Runs the `flower` command line. `args` excludes the program name.
/// Reports go to `out`, progress and errors to `err`; with `--error-json`
/// failures are written to `err` as {"error": kind, "message": text}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace flower::cli
