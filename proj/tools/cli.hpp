#pragma once

#include "ctlab/trainer.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ctlab {

/// Process exit codes of the ctlab command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitCheckFailed = 2, kExitIo = 3 };

/// Entries of a config file: either flat `key = value` lines ('#' starts a
/// comment) or a JSON object, in which case a nested "config" object (as in
/// manifest.json) takes precedence over top-level keys.
std::vector<std::pair<std::string, std::string>> load_config_file(const std::filesystem::path& path);

/// Runs one ctlab invocation; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctlab
