#include "spibb/nets/checkpoint.hpp"

#include "spibb/common/error.hpp"

namespace spibb::nets {

void write_mlp(io::BinaryWriter& out, const Mlp<float>& net) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(net.widths().size()));
  for (int w : net.widths()) out.put<std::uint32_t>(static_cast<std::uint32_t>(w));
  for (const auto& l : net.parameters().layers) {
    out.put_span<float>({l.weight.data(), static_cast<std::size_t>(l.weight.size())});
    out.put_span<float>({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
  }
}

Mlp<float> read_mlp(io::BinaryReader& in) {
  const auto n = in.get<std::uint32_t>();
  if (n < 2 || n > 64) throw FormatError("implausible MLP layer count");
  std::vector<int> widths(n);
  for (auto& w : widths) {
    w = static_cast<int>(in.get<std::uint32_t>());
    if (w <= 0 || w > (1 << 20)) throw FormatError("implausible MLP width");
  }
  auto net = Mlp<float>::zeros(widths);
  for (auto& l : net.parameters().layers) {
    in.get_span<float>({l.weight.data(), static_cast<std::size_t>(l.weight.size())});
    in.get_span<float>({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
  }
  return net;
}

void save_mlp(const Mlp<float>& net, const std::filesystem::path& path) {
  io::BinaryWriter out(kMlpMagic);
  out.put<std::uint32_t>(kMlpFormatVersion);
  write_mlp(out, net);
  io::write_file_atomic(path, std::move(out).finish());
}

Mlp<float> load_mlp(const std::filesystem::path& path) {
  io::BinaryReader in(io::read_file(path), kMlpMagic);
  if (const auto v = in.get<std::uint32_t>(); v != kMlpFormatVersion) {
    throw FormatError("unsupported MLP checkpoint version " + std::to_string(v));
  }
  auto net = read_mlp(in);
  in.expect_end();
  return net;
}

}  // namespace spibb::nets
