#pragma once

#include <string>
#include <vector>

namespace advdet {

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 usage/validation error (single-line diagnostic on stderr), 2 runtime
// failure. All outputs are written atomically under the --out directory.
int cli_run(const std::vector<std::string>& args);

}  // namespace advdet
