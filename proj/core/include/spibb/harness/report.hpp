#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spibb/harness/results.hpp"

namespace spibb::harness {

/// Mean and standard error of one hyperparameter cell across dataset seeds.
struct CellStats {
  std::string env, dataset, algorithm;
  Cell cell;
  std::vector<double> seed_means;  ///< ordered by seed
  double mean = 0.0;
  double standard_error = 0.0;
};

struct SummaryRow {
  CellStats best;
  /// (best - random) / (bc - random) when both baselines are present.
  std::optional<double> normalized;
};

struct Report {
  std::vector<CellStats> cells;
  std::vector<SummaryRow> summary;
  std::vector<std::string> warnings;
};

/// Sample standard deviation over sqrt(n); 0 for a single value.
double standard_error(const std::vector<double>& values);

/// Groups "ok" results by (env, dataset, algorithm, cell), averages each
/// seed's evaluation mean, and picks the best cell per (env, dataset,
/// algorithm) by mean return. Pure function of the result set.
Report aggregate(const std::vector<RunResult>& results);

/// Writes cells.csv, summary.csv, heatmap_<env>_<dataset>.csv (for
/// gen_spibb) and SVG charts into out_dir; returns the written paths.
std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& out_dir);

}  // namespace spibb::harness
