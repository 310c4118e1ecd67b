#pragma once

#include <filesystem>
#include <string>

#include "qifc/runconfig.hpp"

namespace qifc {

struct RunResult {
    int exit_code = 0;  // 0 success, 2 numerical failure, 3 config error
    std::filesystem::path dir;
    std::string message;
};

// Creates the run directory (named by the config hash), writes config.json,
// executes the experiment, and records manifest.json. Numerical failures are
// captured in the manifest and the exit code; they do not throw.
RunResult run_experiment(const RunConfig& cfg);

// Reshapes run outputs into plot-ready per-panel CSV bundles under
// <run_dir>/figure_<id>/. Supported ids: orbit3d, branch, raster.
RunResult emit_figure_data(const std::filesystem::path& run_dir,
                           const std::string& figure_id);

std::filesystem::path resolve_out_root(const RunConfig& cfg);

inline constexpr const char* kToolVersion = "qifc 0.1.0";

}  // namespace qifc
