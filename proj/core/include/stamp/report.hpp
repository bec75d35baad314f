#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stamp/metrics.hpp"

namespace stamp {

// ROC step curve (with AUC annotation) from per-bag scores.
void write_roc_svg(const std::vector<BagScore>& scores,
                   const std::filesystem::path& path);

// Paired bars per pattern count from one figure group of figures_long.csv.
struct FigureBar {
    std::string variant;
    int patterns = 0;
    double mean = 0, std = 0;
};
void write_bars_svg(const std::string& title, const std::vector<FigureBar>& bars,
                    const std::filesystem::path& path);

// Loss / validation-AUC curves from history.csv.
struct HistoryPoint {
    int epoch = 0;
    double mean_total = 0, val_auc = 0;
};
void write_history_svg(const std::vector<HistoryPoint>& points,
                       const std::filesystem::path& path);

// Renders every plot it can find inputs for in `in_dir` (scores.csv,
// figures_long.csv, history.csv). Returns the paths written; problems are
// reported as warnings, never as errors.
std::vector<std::string> generate_reports(const std::filesystem::path& in_dir,
                                          std::vector<std::string>* warnings = nullptr);

} // namespace stamp
