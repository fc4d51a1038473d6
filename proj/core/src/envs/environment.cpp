#include "spibb/envs/environment.hpp"

#include <stdexcept>
#include <string>

#include "spibb/envs/cartpole.hpp"
#include "spibb/envs/catch.hpp"
#include "spibb/common/binary_io.hpp"

namespace spibb::envs {

std::string_view to_string(EnvName name) {
  switch (name) {
    case EnvName::kCartpole: return "cartpole";
    case EnvName::kCatch: return "catch";
    case EnvName::kTabular: return "tabular";
  }
  return "unknown";
}

EnvName parse_env_name(std::string_view name) {
  if (name == "cartpole") return EnvName::kCartpole;
  if (name == "catch") return EnvName::kCatch;
  if (name == "tabular") return EnvName::kTabular;
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

EnvSpec builtin_spec(EnvName name) {
  switch (name) {
    case EnvName::kCartpole:
      return {EnvName::kCartpole, 5, 3, 1000, 0.0, 1.0};
    case EnvName::kCatch:
      return {EnvName::kCatch, Catch::kRows * Catch::kColumns, 3, 10, -1.0, 1.0};
    case EnvName::kTabular:
      break;
  }
  throw std::invalid_argument("tabular environments have no builtin spec");
}

void write_env_spec(io::BinaryWriter& out, const EnvSpec& spec) {
  out.put<std::uint8_t>(static_cast<std::uint8_t>(spec.name));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(spec.obs_dim));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(spec.n_actions));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(spec.horizon));
  out.put<double>(spec.reward_min);
  out.put<double>(spec.reward_max);
}

EnvSpec read_env_spec(io::BinaryReader& in) {
  EnvSpec spec;
  const auto name = in.get<std::uint8_t>();
  if (name > static_cast<std::uint8_t>(EnvName::kTabular)) throw FormatError("bad env name");
  spec.name = static_cast<EnvName>(name);
  spec.obs_dim = static_cast<int>(in.get<std::uint32_t>());
  spec.n_actions = static_cast<int>(in.get<std::uint32_t>());
  spec.horizon = static_cast<int>(in.get<std::uint32_t>());
  spec.reward_min = in.get<double>();
  spec.reward_max = in.get<double>();
  if (spec.obs_dim <= 0 || spec.n_actions < 2 || spec.horizon <= 0) throw FormatError("bad env header");
  return spec;
}

Observation Environment::reset(std::uint64_t seed) {
  rng_.seed(seed);
  time_step_ = 0;
  done_ = false;
  return do_reset();
}

StepResult Environment::step(int action) {
  if (done_) throw std::logic_error("step() called on a finished episode");
  if (action < 0 || action >= spec().n_actions) {
    throw std::out_of_range("action " + std::to_string(action) + " outside [0, " +
                            std::to_string(spec().n_actions) + ")");
  }
  auto [reward, terminal] = do_step(action);
  ++time_step_;
  done_ = terminal || time_step_ >= spec().horizon;
  return {observe(), reward, done_};
}

std::unique_ptr<Environment> make_environment(EnvName name) {
  switch (name) {
    case EnvName::kCartpole: return std::make_unique<Cartpole>();
    case EnvName::kCatch: return std::make_unique<Catch>();
    case EnvName::kTabular: break;
  }
  throw std::invalid_argument("tabular environments are built from a TabularMDP");
}

}  // namespace spibb::envs
