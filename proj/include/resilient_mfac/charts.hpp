#pragma once

#include "resilient_mfac/trace_io.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rmfac {

/// Writes three SVG files into out_dir (created if needed):
///   outputs.svg           per-channel outputs of every agent, leader dashed
///   estimation_error.svg  ||chi_tilde|| per agent
///   attack_timeline.svg   FDI magnitude ||ya - y|| per agent and the DoS
///                         denial intervals recovered from the h columns
/// Returns the written paths.
std::vector<std::filesystem::path> render_charts(const TraceTable& trace,
                                                 const std::vector<std::pair<Step, Vec>>& leader,
                                                 const std::filesystem::path& out_dir);

}  // namespace rmfac
