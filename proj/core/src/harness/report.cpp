#include "spibb/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "spibb/common/binary_io.hpp"
#include "spibb/harness/format.hpp"
#include "spibb/harness/svg.hpp"

namespace spibb::harness {

double standard_error(const std::vector<double>& values) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

namespace {

using GroupKey = std::tuple<std::string, std::string, std::string>;  // env, dataset, algorithm

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

Report aggregate(const std::vector<RunResult>& results) {
  Report report;
  std::map<std::tuple<std::string, std::string, std::string, Cell>, std::map<std::uint64_t, double>> per_cell;
  for (const auto& r : results) {
    if (r.status != "ok") {
      report.warnings.push_back("skipping failed result " + r.key() + ": " + r.error);
      continue;
    }
    per_cell[{r.env, r.dataset, r.algorithm, r.cell}][r.seed] = r.mean_return;
  }
  if (per_cell.empty()) throw std::runtime_error("no successful results to report");

  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (const auto& [key, seeds] : per_cell) {
    CellStats s;
    std::tie(s.env, s.dataset, s.algorithm, s.cell) = key;
    for (const auto& [seed, value] : seeds) s.seed_means.push_back(value);
    s.mean = mean_of(s.seed_means);
    s.standard_error = standard_error(s.seed_means);
    groups[{s.env, s.dataset, s.algorithm}].push_back(report.cells.size());
    report.cells.push_back(std::move(s));
  }

  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> baselines;
  for (const auto& [key, members] : groups) {
    std::size_t best = members.front();
    for (std::size_t i : members)
      if (report.cells[i].mean > report.cells[best].mean) best = i;
    const CellStats& b = report.cells[best];
    if (b.seed_means.size() < 2) {
      report.warnings.push_back(b.env + "/" + b.dataset + "/" + b.algorithm +
                                ": only one seed, standard error reported as 0");
    }
    report.summary.push_back({b, std::nullopt});
    baselines[{b.env, b.dataset}][b.algorithm] = b.mean;
  }
  for (auto& row : report.summary) {
    const auto& base = baselines[{row.best.env, row.best.dataset}];
    const auto random = base.find("random"), bc = base.find("bc");
    if (random != base.end() && bc != base.end() && bc->second != random->second) {
      row.normalized = (row.best.mean - random->second) / (bc->second - random->second);
    }
  }
  return report;
}

std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& body) {
    const auto path = out_dir / name;
    io::write_file_atomic(path, body);
    written.push_back(path);
  };

  std::string cells = "env,dataset,algorithm,hyperparameters,n_seeds,mean_return,standard_error\n";
  for (const auto& c : report.cells) {
    cells += c.env + "," + c.dataset + "," + c.algorithm + "," + csv_field(cell_label(c.cell)) + "," +
             std::to_string(c.seed_means.size()) + "," + format_fixed(c.mean) + "," + format_fixed(c.standard_error) + "\n";
  }
  emit("cells.csv", cells);

  std::string summary = "env,dataset,algorithm,best_hyperparameters,n_seeds,mean_return,standard_error,normalized_score\n";
  for (const auto& row : report.summary) {
    const auto& b = row.best;
    summary += b.env + "," + b.dataset + "," + b.algorithm + "," + csv_field(cell_label(b.cell)) + "," +
               std::to_string(b.seed_means.size()) + "," + format_fixed(b.mean) + "," + format_fixed(b.standard_error) +
               "," + (row.normalized ? format_fixed(*row.normalized) : std::string()) + "\n";
  }
  emit("summary.csv", summary);

  // Bar chart of best-hyperparameter returns, one chart per environment.
  std::map<std::string, std::vector<svg::BarGroup>> charts;
  for (const auto& row : report.summary) {
    auto& groups = charts[row.best.env];
    if (groups.empty() || groups.back().label != row.best.dataset) groups.push_back({row.best.dataset, {}});
    groups.back().bars.push_back({row.best.algorithm, row.best.mean, row.best.standard_error});
  }
  for (const auto& [env, groups] : charts) {
    emit("summary_" + env + ".svg", svg::bar_chart(env + ": best hyperparameter per algorithm", "mean return", groups));
  }

  // epsilon_train x epsilon_eval heatmaps of generalized SPIBB.
  std::map<std::pair<std::string, std::string>, std::vector<const CellStats*>> heat;
  for (const auto& c : report.cells)
    if (c.algorithm == "gen_spibb" && c.cell.count("epsilon_train") && c.cell.count("epsilon_eval"))
      heat[{c.env, c.dataset}].push_back(&c);
  for (const auto& [key, members] : heat) {
    std::set<double> trains, evals;
    for (const auto* c : members) {
      trains.insert(c->cell.at("epsilon_train"));
      evals.insert(c->cell.at("epsilon_eval"));
    }
    std::vector<double> tv(trains.begin(), trains.end()), ev(evals.begin(), evals.end());
    std::vector<std::vector<double>> grid(tv.size(), std::vector<double>(ev.size(), std::numeric_limits<double>::quiet_NaN()));
    for (const auto* c : members) {
      const auto r = std::lower_bound(tv.begin(), tv.end(), c->cell.at("epsilon_train")) - tv.begin();
      const auto k = std::lower_bound(ev.begin(), ev.end(), c->cell.at("epsilon_eval")) - ev.begin();
      grid[r][k] = c->mean;
    }
    std::string csv = "epsilon_train\\epsilon_eval";
    for (double e : ev) csv += "," + format_number(e);
    csv += "\n";
    std::vector<std::string> row_labels, col_labels;
    for (double e : ev) col_labels.push_back(format_number(e));
    for (std::size_t r = 0; r < tv.size(); ++r) {
      row_labels.push_back(format_number(tv[r]));
      csv += format_number(tv[r]);
      for (double v : grid[r]) csv += "," + (std::isnan(v) ? std::string() : format_fixed(v));
      csv += "\n";
    }
    const std::string stem = "heatmap_" + key.first + "_" + key.second;
    emit(stem + ".csv", csv);
    emit(stem + ".svg", svg::heatmap(key.first + " / " + key.second + ": generalized SPIBB mean return", "epsilon_train",
                                     row_labels, "epsilon_eval", col_labels, grid));
  }
  return written;
}

}  // namespace spibb::harness
