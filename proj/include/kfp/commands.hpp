#pragma once

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "kfp/config.hpp"
#include "kfp/error.hpp"

namespace kfp {

enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitSolver = 3 };

/// Config and precondition errors map to 2, solver failures to 3, failed
/// checks to 1.
int exit_code_for(const Error& error);

const std::vector<std::string>& command_names();

/// Runs one command, writing its outputs and manifest.json into
/// cfg.out_dir. Returns the exit code; module errors propagate.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

/// Manifest for reproducing a run: config hash and text, seeds, grid,
/// build information.
nlohmann::json make_manifest(const std::string& command, const RunConfig& cfg);

}  // namespace kfp
