#pragma once

#include <string>
#include <vector>

namespace odesyn {

// Full command-line entry point (make-data / train / generate / evaluate).
// Returns the process exit code: 0 success, 2 usage or input error,
// 3 numerical failure.
int cli_main(const std::vector<std::string>& args);

}  // namespace odesyn
