#ifndef STGIB_TOOLS_CLI_H_
#define STGIB_TOOLS_CLI_H_

#include <iosfwd>

namespace stgib::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericError = 3, kIoError = 4 };

// Entry point of the `stgib` tool; returns the process exit code.
int Run(int argc, char** argv);
int Run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace stgib::cli

#endif  // STGIB_TOOLS_CLI_H_
