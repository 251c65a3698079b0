#pragma once

#include <string>
#include <vector>

namespace uwnerf::cli {

// Full command-line surface; args excludes the program name. Returns the
// process exit code (0 on success) and reports failures as a single
// "error: ..." line on stderr.
int run(const std::vector<std::string>& args);

}  // namespace uwnerf::cli
