#include "spibb/harness/results.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include "json.hpp"
#include <numeric>
#include <stdexcept>

#include "spibb/common/error.hpp"

namespace spibb::harness {

using nlohmann::json;

std::string RunResult::key() const {
  return env + "|" + dataset + "|" + std::to_string(seed) + "|" + algorithm + "|" + cell_label(cell);
}

std::string RunResult::to_json_line() const {
  json j;
  j["key"] = key();
  j["config_hash"] = config_hash;
  j["env"] = env;
  j["dataset"] = dataset;
  j["seed"] = seed;
  j["algorithm"] = algorithm;
  j["hyperparameters"] = json::object();
  for (const auto& [axis, value] : cell) j["hyperparameters"][axis] = value;
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  j["mean_return"] = mean_return;
  j["returns"] = returns;
  j["wall_clock_s"] = wall_clock_s;
  j["checkpoints"] = checkpoints;
  return j.dump() + "\n";
}

RunResult RunResult::from_json_line(const std::string& line) {
  RunResult r;
  try {
    const json j = json::parse(line);
    r.config_hash = j.at("config_hash").get<std::string>();
    r.env = j.at("env").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.algorithm = j.at("algorithm").get<std::string>();
    for (const auto& [axis, value] : j.at("hyperparameters").items()) r.cell[axis] = value.get<double>();
    r.status = j.at("status").get<std::string>();
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    r.mean_return = j.at("mean_return").get<double>();
    r.returns = j.at("returns").get<std::vector<double>>();
    r.wall_clock_s = j.value("wall_clock_s", 0.0);
    if (j.contains("checkpoints")) r.checkpoints = j.at("checkpoints").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad result record: ") + e.what());
  }
  return r;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

ResultStore::ResultStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void ResultStore::append(const RunResult& result) {
  const std::string line = result.to_json_line();
  std::lock_guard lock(mutex_);
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw std::runtime_error("cannot open " + path_.string() + ": " + std::strerror(errno));
  const ssize_t n = ::write(fd, line.data(), line.size());
  const int err = errno;
  ::fsync(fd);
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size())) {
    throw std::runtime_error("short write to " + path_.string() + ": " + std::strerror(err));
  }
}

namespace {

void read_lines(const std::filesystem::path& path, std::vector<RunResult>& out) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A line without its newline is a write that never completed; skip it.
    if (in.eof()) break;
    out.push_back(RunResult::from_json_line(line));
  }
}

}  // namespace

std::vector<RunResult> ResultStore::load() const {
  std::lock_guard lock(mutex_);
  std::vector<RunResult> out;
  if (std::filesystem::exists(path_)) read_lines(path_, out);
  return out;
}

std::set<std::string> ResultStore::completed_keys() const {
  std::set<std::string> keys;
  for (const auto& r : load())
    if (r.status == "ok") keys.insert(r.key());
  return keys;
}

std::vector<RunResult> load_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("no results directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<RunResult> all;
  for (const auto& f : files) read_lines(f, all);
  std::map<std::string, std::size_t> latest;
  std::vector<RunResult> unique;
  for (auto& r : all) {
    const auto [it, inserted] = latest.try_emplace(r.key(), unique.size());
    if (inserted) {
      unique.push_back(std::move(r));
    } else if (r.status == "ok" || unique[it->second].status != "ok") {
      unique[it->second] = std::move(r);
    }
  }
  if (unique.empty()) throw std::runtime_error("no results found in " + dir.string());
  return unique;
}

}  // namespace spibb::harness
