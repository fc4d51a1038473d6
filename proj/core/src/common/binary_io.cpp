#include "spibb/common/binary_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace spibb::io {

std::uint32_t crc32(std::string_view bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    c = ::crc32(c, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::uint32_t stored_checksum(std::string_view finished) {
  if (finished.size() < sizeof(std::uint32_t)) throw FormatError("record stream too short");
  std::uint32_t c;
  std::memcpy(&c, finished.data() + finished.size() - sizeof(c), sizeof(c));
  return c;
}

std::string BinaryWriter::finish() && {
  const std::uint32_t c = crc32(buf_);
  put<std::uint32_t>(c);
  return std::move(buf_);
}

BinaryReader::BinaryReader(std::string bytes, std::string_view magic)
    : data_(std::move(bytes)) {
  if (data_.empty()) throw FormatError("empty file");
  if (data_.size() < magic.size() + sizeof(std::uint32_t) ||
      std::string_view(data_).substr(0, magic.size()) != magic) {
    throw FormatError("bad magic bytes (expected '" + std::string(magic) + "')");
  }
  end_ = data_.size() - sizeof(std::uint32_t);
  std::uint32_t stored;
  std::memcpy(&stored, data_.data() + end_, sizeof(stored));
  if (crc32(std::string_view(data_).substr(0, end_)) != stored) {
    throw FormatError("checksum mismatch");
  }
  pos_ = magic.size();
}

std::string BinaryReader::get_string() {
  const auto n = get<std::uint32_t>();
  require(n);
  std::string s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

void BinaryReader::expect_end() const {
  if (pos_ != end_) throw FormatError("trailing bytes after payload");
}

void BinaryReader::require(std::size_t n) const {
  if (n > end_ - pos_) throw FormatError("truncated payload");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace spibb::io
