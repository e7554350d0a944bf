#pragma once

#include <string>
#include <vector>

namespace fedmlc::cli {

// Dispatches the synth / prepare / train / eval subcommands. `args` excludes
// the program name. Exit codes: 0 success, 2 configuration error, 3 data
// error, 4 numerical divergence.
int run(const std::vector<std::string>& args);

}  // namespace fedmlc::cli
