#pragma once

#include <filesystem>
#include <vector>

namespace ergodyn {

/// Line plots of a CSV with a header row: one SVG per numeric column, drawn
/// against the first column (or the row index when the first column is not
/// numeric). Non-finite values are skipped. Returns the files written.
std::vector<std::filesystem::path> plot_csv(const std::filesystem::path& csv, const std::filesystem::path& out_dir);

}  // namespace ergodyn
