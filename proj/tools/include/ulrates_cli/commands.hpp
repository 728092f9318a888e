#pragma once

#include <string>
#include <vector>

namespace ulrates_cli {

// Entry point shared by the binary and the tests: argv-style arguments
// without the program name. Returns the process exit status; failures have
// already printed a structured JSON error record to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace ulrates_cli
