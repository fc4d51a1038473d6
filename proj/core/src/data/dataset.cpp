#include "spibb/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "spibb/common/binary_io.hpp"
#include "spibb/common/error.hpp"

namespace spibb::data {

std::string_view to_string(DatasetType type) {
  switch (type) {
    case DatasetType::kMed: return "med";
    case DatasetType::kMedSeed: return "med_seed";
    case DatasetType::kUni: return "uni";
    case DatasetType::kUniMed: return "uni_med";
    case DatasetType::kUniExp: return "uni_exp";
    case DatasetType::kCustom: return "custom";
  }
  return "unknown";
}

DatasetType parse_dataset_type(std::string_view name) {
  for (auto t : {DatasetType::kMed, DatasetType::kMedSeed, DatasetType::kUni,
                 DatasetType::kUniMed, DatasetType::kUniExp, DatasetType::kCustom}) {
    if (to_string(t) == name) return t;
  }
  throw std::invalid_argument("unknown dataset type '" + std::string(name) + "'");
}

void DatasetRecipe::validate() const {
  if (components.empty()) throw std::invalid_argument("dataset recipe has no components");
  double sum = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw std::invalid_argument("negative mixture weight");
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("mixture weights do not sum to 1");
}

TransitionDataset::TransitionDataset(envs::EnvSpec env, DatasetRecipe provenance)
    : env_(env), provenance_(std::move(provenance)) {}

void TransitionDataset::reserve(std::size_t n) {
  states_.reserve(n * obs_dim());
  next_states_.reserve(n * obs_dim());
  actions_.reserve(n);
  rewards_.reserve(n);
  dones_.reserve(n);
}

void TransitionDataset::push_back(const Transition& t) {
  if (static_cast<int>(t.s.size()) != obs_dim() || static_cast<int>(t.s_next.size()) != obs_dim()) {
    throw std::invalid_argument("transition observation length differs from obs_dim");
  }
  if (t.a < 0 || t.a >= env_.n_actions) throw std::invalid_argument("transition action out of range");
  states_.insert(states_.end(), t.s.begin(), t.s.end());
  next_states_.insert(next_states_.end(), t.s_next.begin(), t.s_next.end());
  actions_.push_back(static_cast<std::uint16_t>(t.a));
  rewards_.push_back(t.r);
  dones_.push_back(t.done ? 1 : 0);
}

std::span<const float> TransitionDataset::state(std::size_t i) const {
  return std::span(states_).subspan(i * obs_dim(), obs_dim());
}

std::span<const float> TransitionDataset::next_state(std::size_t i) const {
  return std::span(next_states_).subspan(i * obs_dim(), obs_dim());
}

Transition TransitionDataset::transition(std::size_t i) const {
  const auto s = state(i);
  const auto s2 = next_state(i);
  return {Observation(s.begin(), s.end()), action(i), reward(i), Observation(s2.begin(), s2.end()),
          done(i)};
}

namespace {

RowMatrixF gather(const std::vector<float>& flat, int dim, std::span<const int> indices) {
  RowMatrixF out(static_cast<Eigen::Index>(indices.size()), dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy_n(flat.data() + static_cast<std::size_t>(indices[r]) * dim, dim,
                out.data() + r * dim);
  }
  return out;
}

RowMatrixF as_matrix(const std::vector<float>& flat, int dim) {
  const auto n = static_cast<Eigen::Index>(flat.size() / dim);
  return Eigen::Map<const RowMatrixF>(flat.data(), n, dim);
}

}  // namespace

RowMatrixF TransitionDataset::gather_states(std::span<const int> indices) const {
  return gather(states_, obs_dim(), indices);
}
RowMatrixF TransitionDataset::gather_next_states(std::span<const int> indices) const {
  return gather(next_states_, obs_dim(), indices);
}
RowMatrixF TransitionDataset::all_states() const { return as_matrix(states_, obs_dim()); }
RowMatrixF TransitionDataset::all_next_states() const { return as_matrix(next_states_, obs_dim()); }

std::string serialize_dataset(const TransitionDataset& d) {
  io::BinaryWriter out(kDatasetMagic);
  out.put<std::uint32_t>(kDatasetFormatVersion);
  const auto& env = d.env();
  envs::write_env_spec(out, env);

  const auto& p = d.provenance();
  out.put<std::uint8_t>(static_cast<std::uint8_t>(p.type));
  out.put<std::uint64_t>(p.seed);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(p.components.size()));
  for (const auto& c : p.components) {
    out.put_string(c.policy);
    out.put<double>(c.weight);
  }
  out.put_string(p.notes);

  out.put<std::uint64_t>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.put_span(d.state(i));
    out.put<std::uint16_t>(static_cast<std::uint16_t>(d.action(i)));
    out.put<float>(d.reward(i));
    out.put_span(d.next_state(i));
    out.put<std::uint8_t>(d.done(i) ? 1 : 0);
  }
  return std::move(out).finish();
}

TransitionDataset deserialize_dataset(std::string bytes) {
  io::BinaryReader in(std::move(bytes), kDatasetMagic);
  if (const auto v = in.get<std::uint32_t>(); v != kDatasetFormatVersion) {
    throw FormatError("dataset format version " + std::to_string(v) + " is not supported (expected " +
                      std::to_string(kDatasetFormatVersion) + ")");
  }
  const envs::EnvSpec env = envs::read_env_spec(in);

  DatasetRecipe recipe;
  const auto type = in.get<std::uint8_t>();
  if (type > static_cast<std::uint8_t>(DatasetType::kCustom)) throw FormatError("bad dataset type");
  recipe.type = static_cast<DatasetType>(type);
  recipe.seed = in.get<std::uint64_t>();
  const auto n_components = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_components; ++i) {
    PolicyComponent c;
    c.policy = in.get_string();
    c.weight = in.get<double>();
    recipe.components.push_back(std::move(c));
  }
  recipe.notes = in.get_string();

  TransitionDataset d(env, std::move(recipe));
  const auto n = in.get<std::uint64_t>();
  const std::size_t record = 2 * sizeof(float) * env.obs_dim + sizeof(std::uint16_t) + sizeof(float) + 1;
  if (n > (std::size_t{1} << 40) / record) throw FormatError("implausible record count");
  d.reserve(n);
  Transition t;
  t.s.resize(env.obs_dim);
  t.s_next.resize(env.obs_dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    in.get_span<float>(t.s);
    t.a = in.get<std::uint16_t>();
    t.r = in.get<float>();
    in.get_span<float>(t.s_next);
    t.done = in.get<std::uint8_t>() != 0;
    if (t.a >= env.n_actions) throw FormatError("record action out of range");
    d.push_back(t);
  }
  in.expect_end();
  return d;
}

void save_dataset(const TransitionDataset& dataset, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_dataset(dataset));
}

TransitionDataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(io::read_file(path));
}

void export_csv(const TransitionDataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (int k = 0; k < d.obs_dim(); ++k) out << "s" << k << ',';
  out << "a,r";
  for (int k = 0; k < d.obs_dim(); ++k) out << ",s_next" << k;
  out << ",done\n";
  out.precision(9);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (float v : d.state(i)) out << v << ',';
    out << d.action(i) << ',' << d.reward(i);
    for (float v : d.next_state(i)) out << ',' << v;
    out << ',' << (d.done(i) ? 1 : 0) << '\n';
  }
}

}  // namespace spibb::data
