#pragma once

#include <string>
#include <string_view>

namespace spibb::io {
class BinaryWriter;
class BinaryReader;
}  // namespace spibb::io

namespace spibb::envs {

enum class EnvName { kCartpole, kCatch, kTabular };

std::string_view to_string(EnvName name);
/// Throws std::invalid_argument for unknown names.
EnvName parse_env_name(std::string_view name);

struct EnvSpec {
  EnvName name = EnvName::kCartpole;
  int obs_dim = 1;
  int n_actions = 2;
  int horizon = 1;
  double reward_min = 0.0;
  double reward_max = 0.0;

  bool operator==(const EnvSpec&) const = default;
};

/// Canonical spec for the built-in cartpole and catch environments.
EnvSpec builtin_spec(EnvName name);

void write_env_spec(io::BinaryWriter& out, const EnvSpec& spec);
/// Throws FormatError on an unknown name or nonsensical dimensions.
EnvSpec read_env_spec(io::BinaryReader& in);

}  // namespace spibb::envs
