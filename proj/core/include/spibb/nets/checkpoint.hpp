#pragma once

#include <filesystem>

#include "spibb/common/binary_io.hpp"
#include "spibb/nets/mlp.hpp"

namespace spibb::nets {

inline constexpr std::string_view kMlpMagic = "SPBMLP01";
inline constexpr std::uint32_t kMlpFormatVersion = 1;

/// Appends widths and parameters (float32) to an open record stream.
void write_mlp(io::BinaryWriter& out, const Mlp<float>& net);
Mlp<float> read_mlp(io::BinaryReader& in);

void save_mlp(const Mlp<float>& net, const std::filesystem::path& path);
Mlp<float> load_mlp(const std::filesystem::path& path);

}  // namespace spibb::nets
