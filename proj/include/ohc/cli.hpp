#pragma once

#include <string>
#include <vector>

namespace ohc::cli {

// Dispatches one toolkit invocation. Returns 0 on success, 1 on I/O or
// validation failure (one-line diagnostic on stderr), 2 on argument errors
// (usage on stderr).
int run(int argc, const char* const* argv);

// Convenience for in-process callers; args exclude the program name.
int run(const std::vector<std::string>& args);

}  // namespace ohc::cli
