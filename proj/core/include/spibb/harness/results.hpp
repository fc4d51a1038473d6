#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "spibb/harness/algorithms.hpp"

namespace spibb::harness {

struct RunResult {
  std::string config_hash;
  std::string env;
  std::string dataset;
  std::uint64_t seed = 0;
  std::string algorithm;
  Cell cell;
  std::string status = "ok";  ///< "ok" or "error"
  std::string error;
  double mean_return = 0.0;
  std::vector<double> returns;
  double wall_clock_s = 0.0;
  std::map<std::string, std::string> checkpoints;

  /// Identity of the cell within a sweep, used for resumption.
  std::string key() const;
  std::string to_json_line() const;
  static RunResult from_json_line(const std::string& line);
};

/// Arithmetic mean; throws std::invalid_argument on an empty list.
double mean_of(const std::vector<double>& values);

/// Append-only JSON-lines file. Each record is written with a single
/// write() on a file opened with O_APPEND, so concurrent writers in one or
/// several processes never interleave partial lines.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  void append(const RunResult& result);
  /// Keys of results with status "ok".
  std::set<std::string> completed_keys() const;
  std::vector<RunResult> load() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

/// All records from every *.jsonl file directly inside `dir`. Later records
/// for the same key replace earlier ones. Throws std::runtime_error if the
/// directory holds no results.
std::vector<RunResult> load_results(const std::filesystem::path& dir);

}  // namespace spibb::harness
