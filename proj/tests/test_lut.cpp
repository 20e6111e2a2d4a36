#include <gtest/gtest.h>

#include <sstream>

#include "pluto/lut.hpp"

using namespace pluto;

TEST(BuildLut, PopcountTable) {
  auto p = build_lut(8, 256, [](std::uint64_t k) {
    return static_cast<std::uint64_t>(__builtin_popcountll(k));
  });
  EXPECT_EQ(p.entries.size(), 256u);
  EXPECT_EQ(p.mask, 0xFFu);
  EXPECT_EQ(p.stride, 1u);
  EXPECT_EQ(p.entries[0xF0], 4u);
  EXPECT_EQ(p.key(37), 37u);
}

TEST(BuildLut, RejectsBadShapes) {
  try {
    build_lut(8, 512, [](std::uint64_t k) { return k; });
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), Err::DomainTooLarge);
  }
  try {
    build_lut(8, 4, [](std::uint64_t) { return 0x100ull; });
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), Err::RangeOverflow);
  }
  EXPECT_THROW(build_lut(3, 4, [](std::uint64_t k) { return k; }), SimError);
}

TEST(BuildLut, BinaryOpSplitsComparand) {
  auto p = build_binary_op_lut(8, [](std::uint64_t a, std::uint64_t b) {
    return (a + b) & 0xF;
  });
  EXPECT_EQ(p.entries.size(), 256u);
  EXPECT_EQ(p.entries[0x53], 8u);
  EXPECT_EQ(p.entries[0xFF], 0xEu);
}

TEST(Compress, StrideFormForThreshold) {
  auto full = build_lut(8, 256, [](std::uint64_t k) {
    return k >= 128 ? 0xFFull : 0x00ull;
  });
  auto p = compress_with_mask(full, 0x80);
  EXPECT_EQ(p.entries, (std::vector<std::uint64_t>{0x00, 0xFF}));
  EXPECT_TRUE(p.keys.empty());
  EXPECT_EQ(p.stride, 0x80u);
  EXPECT_EQ(p.mask, 0x80u);
}

TEST(Compress, ExplicitKeysWhenNotArithmetic) {
  auto full = build_lut(8, 256, [](std::uint64_t k) {
    const auto cls = k & 0xA0;
    return cls == 0 ? 1ull : cls == 0x20 ? 2ull : cls == 0x80 ? 3ull : 4ull;
  });
  auto p = compress_with_mask(full, 0xA0);
  EXPECT_EQ(p.keys, (std::vector<std::uint64_t>{0x00, 0x20, 0x80, 0xA0}));
  EXPECT_EQ(p.entries, (std::vector<std::uint64_t>{1, 2, 3, 4}));
}

TEST(Compress, RejectsNonConstantClass) {
  auto full = build_lut(8, 256, [](std::uint64_t k) { return k; });
  try {
    compress_with_mask(full, 0x80);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), Err::NotClassConstant);
  }
}

TEST(Partition, SplitsBySubarrayRows) {
  auto [S, R] = partition_large(65536, 512);
  EXPECT_EQ(R, 9);
  EXPECT_EQ(S, 7);
  auto [S1, R1] = partition_large(400, 512);
  EXPECT_EQ(S1, 0);
  EXPECT_EQ(R1, 9);
  EXPECT_THROW(partition_large(16, 100), SimError);
}

TEST(Partition, ChunkHoldsItsKeyRange) {
  auto full = build_lut(16, 1 << 12, [](std::uint64_t k) { return k * 3 % 65536; });
  auto [S, R] = partition_large(full.entries.size(), 512);
  EXPECT_EQ(S, 3);
  auto c5 = lut_chunk(full, R, 5);
  EXPECT_EQ(c5.entries.size(), 512u);
  EXPECT_EQ(c5.entries[7], full.entries[(5u << 9) + 7]);
  EXPECT_THROW(lut_chunk(full, R, 8), SimError);
}

TEST(Container, BinaryRoundTrip) {
  LutProgram p;
  p.width = 16;
  p.mask = 0xF0F0;
  p.stride = 2;
  p.keys = {1, 5, 9};
  p.entries = {10, 20, 30};
  std::ostringstream os(std::ios::binary);
  save_lut(os, p);
  std::istringstream is(os.str(), std::ios::binary);
  auto q = load_lut_file(is);
  EXPECT_EQ(q.width, p.width);
  EXPECT_EQ(q.mask, p.mask);
  EXPECT_EQ(q.stride, p.stride);
  EXPECT_EQ(q.keys, p.keys);
  EXPECT_EQ(q.entries, p.entries);
}

TEST(Container, RejectsGarbage) {
  std::istringstream is("NOPE", std::ios::binary);
  EXPECT_THROW(load_lut_file(is), SimError);
  std::istringstream trunc(std::string("PLUT\x01\x00", 6), std::ios::binary);
  EXPECT_THROW(load_lut_file(trunc), SimError);
}

TEST(Inspect, ListsKeysAndEntries) {
  auto p = build_lut(8, 4, [](std::uint64_t k) { return k * k; });
  std::ostringstream os;
  inspect_lut(os, p);
  EXPECT_NE(os.str().find("entries 4"), std::string::npos);
  EXPECT_NE(os.str().find("0x3 -> 0x9"), std::string::npos);
}
