#include <gtest/gtest.h>

#include <array>
#include <filesystem>
#include <set>

#include "spibb/common/binary_io.hpp"
#include "spibb/common/rng.hpp"
#include "spibb/data/batches.hpp"

namespace spibb {
namespace {

TEST(Rng, StreamsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 4; ++base)
    for (auto s : {Stream::kEnvironment, Stream::kDataset, Stream::kBatches, Stream::kInit, Stream::kPrior})
      for (std::uint64_t i = 0; i < 4; ++i) seen.insert(derive_seed(base, s, i));
  EXPECT_EQ(seen.size(), 4u * 5u * 4u);
}

TEST(Rng, DeriveSeedIsPure) {
  EXPECT_EQ(derive_seed(42, Stream::kNoise, 3), derive_seed(42, Stream::kNoise, 3));
  EXPECT_NE(derive_seed(42, Stream::kNoise, 3), derive_seed(42, Stream::kNoise, 4));
}

TEST(Rng, CategoricalFrequencies) {
  Rng rng(5);
  const std::array<double, 3> p{0.2, 0.5, 0.3};
  std::array<int, 3> counts{};
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(p, rng)];
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(counts[a] / double(n), p[a], 0.005);
}

TEST(Rng, CategoricalNeverPicksZeroMass) {
  Rng rng(1);
  const std::array<double, 3> p{0.0, 1.0 - 1e-17, 0.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_categorical(p, rng), 1);
}

TEST(BinaryIo, RoundTrip) {
  io::BinaryWriter w("TESTMAG1");
  w.put<std::uint32_t>(7);
  w.put<double>(-2.5);
  w.put_string("hello");
  const std::array<float, 3> xs{1.f, 2.f, 3.f};
  w.put_span<float>(xs);
  io::BinaryReader r(std::move(w).finish(), "TESTMAG1");
  EXPECT_EQ(r.get<std::uint32_t>(), 7u);
  EXPECT_EQ(r.get<double>(), -2.5);
  EXPECT_EQ(r.get_string(), "hello");
  std::array<float, 3> back{};
  r.get_span<float>(back);
  EXPECT_EQ(back, xs);
  EXPECT_TRUE(r.at_end());
  EXPECT_NO_THROW(r.expect_end());
}

std::string sample_bytes() {
  io::BinaryWriter w("TESTMAG1");
  for (int i = 0; i < 10; ++i) w.put<double>(i);
  return std::move(w).finish();
}

TEST(BinaryIo, DetectsEveryFlippedByte) {
  const std::string good = sample_bytes();
  for (std::size_t k = 0; k < good.size(); ++k) {
    std::string bad = good;
    bad[k] ^= 0x5a;
    EXPECT_THROW(io::BinaryReader(bad, "TESTMAG1"), FormatError) << "byte " << k;
  }
}

TEST(BinaryIo, DetectsTruncation) {
  const std::string good = sample_bytes();
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{8}, good.size() - 1})
    EXPECT_THROW(io::BinaryReader(good.substr(0, n), "TESTMAG1"), FormatError);
}

TEST(BinaryIo, ReadingPastPayloadThrows) {
  io::BinaryWriter w("TESTMAG1");
  w.put<std::uint16_t>(1);
  io::BinaryReader r(std::move(w).finish(), "TESTMAG1");
  EXPECT_THROW(r.get<std::uint64_t>(), FormatError);
}

TEST(BinaryIo, WrongMagicIsRejected) {
  EXPECT_THROW(io::BinaryReader(sample_bytes(), "OTHERMAG"), FormatError);
}

TEST(BinaryIo, AtomicWriteLeavesNoTemporary) {
  const auto dir = std::filesystem::temp_directory_path() / "spibb_io_test";
  std::filesystem::remove_all(dir);
  io::write_file_atomic(dir / "a.bin", "abc");
  io::write_file_atomic(dir / "a.bin", "xyz");
  EXPECT_EQ(io::read_file(dir / "a.bin"), "xyz");
  EXPECT_FALSE(std::filesystem::exists(dir / "a.bin.tmp"));
  EXPECT_THROW(io::read_file(dir / "missing.bin"), FormatError);
  std::filesystem::remove_all(dir);
}

TEST(BatchSampler, DeterministicAndInRange) {
  data::BatchSampler a(17, 40, 3), b(17, 40, 3);
  for (int step = 0; step < 20; ++step) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    ASSERT_EQ(x.size(), 40u);
    for (int i : x) {
      EXPECT_GE(i, 0);
      EXPECT_LT(i, 17);
    }
  }
}

}  // namespace
}  // namespace spibb
