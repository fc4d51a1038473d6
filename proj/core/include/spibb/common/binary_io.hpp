#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "spibb/common/error.hpp"

namespace spibb::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts unsupported");

std::uint32_t crc32(std::string_view bytes);

/// The checksum stored at the end of a finished record stream; identifies the
/// payload. (The CRC of a whole stream including its own CRC is a constant.)
std::uint32_t stored_checksum(std::string_view finished);

/// Accumulates a little-endian record stream in memory.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::string_view magic) { buf_.append(magic); }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.append(raw, sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_span(std::span<const T> values) {
    buf_.append(reinterpret_cast<const char*>(values.data()),
                values.size() * sizeof(T));
  }

  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }

  /// Appends the CRC32 of everything written so far and returns the bytes.
  std::string finish() &&;

 private:
  std::string buf_;
};

/// Reads a stream produced by BinaryWriter. The constructor validates magic
/// and checksum, so a reader is never handed a partially valid file.
class BinaryReader {
 public:
  BinaryReader(std::string bytes, std::string_view magic);

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    require(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_span(std::span<T> out) {
    require(out.size() * sizeof(T));
    std::memcpy(out.data(), data_.data() + pos_, out.size() * sizeof(T));
    pos_ += out.size() * sizeof(T);
  }

  std::string get_string();

  bool at_end() const { return pos_ == end_; }
  void expect_end() const;

 private:
  void require(std::size_t n) const;

  std::string data_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

}  // namespace spibb::io
