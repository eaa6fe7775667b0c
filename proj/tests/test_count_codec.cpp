#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "amqf/count_codec.hpp"

namespace {

using amqf::DecodedGroup;

template <class Slot>
std::vector<Slot> encode(uint64_t rem, uint64_t count, unsigned r) {
  std::vector<Slot> out;
  amqf::encode_group<Slot>(rem, count, r, out);
  return out;
}

template <class Slot>
void expect_round_trip(uint64_t rem, uint64_t count, unsigned r) {
  const std::vector<Slot> enc = encode<Slot>(rem, count, r);
  ASSERT_EQ(enc.size(), amqf::encoded_length(rem, count, r)) << rem << " x" << count;
  const DecodedGroup g = amqf::decode_group<Slot>(enc, r);
  ASSERT_EQ(g.remainder, rem);
  ASSERT_EQ(g.count, count) << "rem " << rem << " r " << r;
  ASSERT_EQ(g.length, enc.size());
  ASSERT_EQ(enc.front(), rem);
  ASSERT_EQ(enc.back(), rem);
  const size_t interior_begin = rem == 0 && count >= 3 ? 3 : 1;
  for (size_t i = interior_begin; i + 1 < enc.size(); ++i) ASSERT_NE(enc[i], rem) << "digit equals the head";
}

TEST(CountCodec, SmallCountsByHand) {
  EXPECT_EQ(encode<uint8_t>(7, 1, 8), (std::vector<uint8_t>{7}));
  EXPECT_EQ(encode<uint8_t>(7, 2, 8), (std::vector<uint8_t>{7, 7}));
  // 3 - 2 = 1; digit 1 < 7 stays 1.
  EXPECT_EQ(encode<uint8_t>(7, 3, 8), (std::vector<uint8_t>{7, 1, 7}));
  EXPECT_EQ(encode<uint8_t>(0, 3, 8), (std::vector<uint8_t>{0, 0, 0, 2, 0}));
}

TEST(CountCodec, ThreeHundredCopiesInEightBits) {
  // 298 = 1 * 255 + 43. Digit 43 >= 7 is stored as 44.
  EXPECT_EQ(encode<uint8_t>(7, 300, 8), (std::vector<uint8_t>{7, 1, 44, 7}));
  expect_round_trip<uint8_t>(7, 300, 8);
}

TEST(CountCodec, LeadingZeroWhenFirstDigitReachesHead) {
  // 12 - 2 = 10 >= head 5, stored as 11; a zero digit keeps the group from
  // looking like [5] followed by head 11.
  EXPECT_EQ(encode<uint8_t>(5, 12, 8), (std::vector<uint8_t>{5, 0, 11, 5}));
  expect_round_trip<uint8_t>(5, 12, 8);
}

TEST(CountCodec, ExhaustiveSmallCounts) {
  for (unsigned r : {8u, 16u}) {
    const std::vector<uint64_t> rems{0, 1, 2, 7, 128, amqf::low_mask(r) - 1, amqf::low_mask(r)};
    for (const uint64_t rem : rems) {
      for (uint64_t c = 1; c <= 10000; ++c) {
        if (r == 8) {
          expect_round_trip<uint8_t>(rem, c, r);
        } else {
          expect_round_trip<uint16_t>(rem, c, r);
        }
      }
    }
  }
}

template <class Slot>
void boundary_counts(unsigned r) {
  std::mt19937_64 rng(r);
  const uint64_t base = r == 64 ? 0 : uint64_t{1} << r;
  std::vector<uint64_t> counts{1, 2, 3};
  if (r < 64) {
    counts.insert(counts.end(), {base - 2, base - 1, base, base + 1, base * 3 + 7});
  }
  for (int i = 0; i < 200; ++i) counts.push_back(1 + (rng() >> 32));
  counts.push_back(~uint64_t{0});
  counts.push_back(~uint64_t{0} - 1);
  for (const uint64_t rem : {uint64_t{0}, uint64_t{1}, amqf::low_mask(r), rng() & amqf::low_mask(r)}) {
    for (const uint64_t c : counts) expect_round_trip<Slot>(rem, c, r);
  }
}

TEST(CountCodec, BoundaryCounts8) { boundary_counts<uint8_t>(8); }
TEST(CountCodec, BoundaryCounts16) { boundary_counts<uint16_t>(16); }
TEST(CountCodec, BoundaryCounts32) { boundary_counts<uint32_t>(32); }
TEST(CountCodec, BoundaryCounts64) { boundary_counts<uint64_t>(64); }

TEST(CountCodec, LengthGrowsLogarithmically) {
  EXPECT_EQ(amqf::encoded_length(9, 1, 8), 1u);
  EXPECT_EQ(amqf::encoded_length(9, 2, 8), 2u);
  EXPECT_LE(amqf::encoded_length(9, 1'000'000, 8), 6u);
  EXPECT_LE(amqf::encoded_length(9, ~uint64_t{0}, 16), 7u);
}

TEST(CountCodec, RunsOfGroupsParseBack) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<uint8_t> run;
    std::vector<DecodedGroup> expected;
    uint64_t head = rng() % 4;
    while (head < 256) {
      const uint64_t c = 1 + (rng() % 4 == 0 ? rng() % 100000 : rng() % 3);
      const size_t before = run.size();
      amqf::encode_group<uint8_t>(head, c, 8, run);
      expected.push_back({head, c, run.size() - before});
      head += 1 + rng() % 40;
    }
    ASSERT_EQ(amqf::decode_run<uint8_t>(run, 8), expected);
  }
}

TEST(CountCodec, RejectsZeroCountAndMalformedRuns) {
  std::vector<uint8_t> out;
  EXPECT_THROW(amqf::encode_group<uint8_t>(3, 0, 8, out), amqf::ParameterError);
  const std::vector<uint8_t> unterminated{9, 3, 4};
  EXPECT_THROW(amqf::decode_group<uint8_t>(unterminated, 8), amqf::InvariantViolation);
  const std::vector<uint8_t> empty;
  EXPECT_THROW(amqf::decode_group<uint8_t>(empty, 8), amqf::InvariantViolation);
}

}  // namespace
