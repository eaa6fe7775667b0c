#include <gtest/gtest.h>

#include <atomic>
#include <barrier>
#include <map>
#include <thread>
#include <vector>

#include "amqf/tcf.hpp"
#include "amqf/workload.hpp"

namespace {

using amqf::InsertOutcome;
using amqf::Tcf;
using amqf::TcfParams;

TcfParams small_params(uint64_t blocks = 1024) {
  TcfParams p;
  p.num_blocks = blocks;
  return p;
}

TEST(TcfNew, CapacityArithmetic) {
  const auto tcf = Tcf::create(small_params());
  EXPECT_EQ(tcf->params().capacity(), 16384u);
  EXPECT_EQ(tcf->backing_buckets(), 164u);
  EXPECT_EQ(tcf->load_factor(), 0.0);
  EXPECT_TRUE(tcf->enumerate().empty());
  tcf->validate();
}

TEST(TcfNew, RejectsBadParams) {
  TcfParams p = small_params();
  p.block_size = 64;
  p.slot_bits = 32;
  p.tag_bits = 32;
  EXPECT_THROW(Tcf::create(p), amqf::ParameterError);
  p = small_params(1000);
  EXPECT_THROW(Tcf::create(p), amqf::ParameterError);
  p = small_params();
  p.shortcut_threshold = 1.0;
  EXPECT_THROW(Tcf::create(p), amqf::ParameterError);
  p = small_params();
  p.tag_bits = 17;
  EXPECT_THROW(Tcf::create(p), amqf::ParameterError);
}

TEST(BlockInsert, FirstSlotThenFull) {
  const auto tcf = Tcf::create(small_params(4));
  EXPECT_TRUE(tcf->block_insert(2, 77));
  EXPECT_EQ(tcf->word_at(2, 0), 77u);
  for (unsigned i = 1; i < 16; ++i) EXPECT_TRUE(tcf->block_insert(2, 100 + i));
  EXPECT_EQ(tcf->occupancy(2), 16u);
  EXPECT_FALSE(tcf->block_insert(2, 5));
  EXPECT_EQ(tcf->occupancy(1), 0u);
}

TEST(BlockInsert, ResultIndependentOfGroupWidth) {
  std::vector<std::vector<uint64_t>> layouts;
  for (unsigned g : {1u, 2u, 3u, 4u, 8u, 16u, 32u}) {
    TcfParams p = small_params(64);
    p.group_width = g;
    const auto tcf = Tcf::create(p);
    const auto keys = amqf::uniform_keys(800, 5);
    for (size_t i = 0; i < keys.size(); ++i) {
      tcf->insert(keys[i]);
      if (i % 3 == 0) tcf->erase(keys[i / 2]);
    }
    std::vector<uint64_t> words;
    for (uint64_t b = 0; b < 64; ++b) {
      for (unsigned s = 0; s < 16; ++s) words.push_back(tcf->word_at(b, s));
    }
    layouts.push_back(words);
  }
  for (size_t i = 1; i < layouts.size(); ++i) EXPECT_EQ(layouts[i], layouts[0]);
}

TEST(BlockInsert, RacingForLastSlot) {
  for (int round = 0; round < 200; ++round) {
    const auto tcf = Tcf::create(small_params(1));
    for (unsigned i = 0; i < 15; ++i) ASSERT_TRUE(tcf->block_insert(0, 10 + i));
    std::atomic<int> wins{0};
    std::barrier sync(2);
    auto racer = [&](uint64_t word) {
      sync.arrive_and_wait();
      wins += tcf->block_insert(0, word);
    };
    std::thread a(racer, 1000), b(racer, 2000);
    a.join();
    b.join();
    ASSERT_EQ(wins.load(), 1);
    ASSERT_EQ(tcf->occupancy(0), 16u);
  }
}

TEST(TcfInsert, EmptyFilterTakesPrimary) {
  const auto tcf = Tcf::create(small_params());
  EXPECT_EQ(tcf->insert(12345), InsertOutcome::primary);
  EXPECT_EQ(tcf->stats().inserted, 1u);
}

TEST(TcfInsert, TwoItemsFound) {
  const auto tcf = Tcf::create(small_params());
  tcf->insert(1);
  tcf->insert(2);
  EXPECT_TRUE(tcf->contains(1));
  EXPECT_TRUE(tcf->contains(2));
}

TEST(TcfInsert, ValuesRoundTrip) {
  TcfParams p = small_params();
  p.slot_bits = 32;
  p.tag_bits = 20;
  const auto tcf = Tcf::create(p);
  const auto keys = amqf::uniform_keys(5000, 6);
  for (size_t i = 0; i < keys.size(); ++i) ASSERT_NE(tcf->insert(keys[i], i % 4096), InsertOutcome::full);
  size_t exact = 0;
  for (size_t i = 0; i < keys.size(); ++i) {
    const auto v = tcf->query(keys[i]);
    ASSERT_TRUE(v.has_value());
    exact += *v == i % 4096;
  }
  // A wrong value needs a tag collision inside the key's blocks.
  EXPECT_GE(exact, keys.size() - 5);
  EXPECT_THROW(tcf->insert(1, 4096), amqf::ParameterError);
}

TEST(TcfQuery, EmptyFilter) {
  const auto tcf = Tcf::create(small_params());
  for (const uint64_t k : amqf::uniform_keys(1000, 7)) EXPECT_FALSE(tcf->contains(k));
}

TEST(TcfQuery, NoFalseNegativesAndFprAtNinetyPercent) {
  const auto tcf = Tcf::create(small_params(1 << 14));
  const auto keys = amqf::uniform_keys(static_cast<uint64_t>(0.9 * tcf->params().capacity()), 8);
  for (const uint64_t k : keys) ASSERT_NE(tcf->insert(k), InsertOutcome::full);
  for (const uint64_t k : keys) ASSERT_TRUE(tcf->contains(k));
  const double fpr = amqf::measure_fpr([&](uint64_t k) { return tcf->contains(k); }, 1'000'000, 8);
  const double bound = 2.0 * 16 / 65536 + 2.0 / 65536;
  EXPECT_LE(fpr, bound);
  tcf->validate();
}

TEST(TcfDelete, RoundTrip) {
  const auto tcf = Tcf::create(small_params());
  EXPECT_FALSE(tcf->erase(5));
  tcf->insert(5);
  EXPECT_TRUE(tcf->erase(5));
  EXPECT_FALSE(tcf->contains(5));
  EXPECT_FALSE(tcf->erase(5));
  tcf->validate();
}

TEST(TcfDelete, MultisetSemantics) {
  const auto tcf = Tcf::create(small_params());
  tcf->insert(9);
  tcf->insert(9);
  EXPECT_TRUE(tcf->erase(9));
  EXPECT_TRUE(tcf->contains(9));
  EXPECT_EQ(tcf->enumerate().size(), 1u);
  EXPECT_TRUE(tcf->erase(9));
  EXPECT_FALSE(tcf->contains(9));
}

TEST(TcfDelete, TombstonesAreReused) {
  const auto tcf = Tcf::create(small_params(1));
  std::vector<uint64_t> keys = amqf::uniform_keys(16, 9);
  for (const uint64_t k : keys) ASSERT_EQ(tcf->insert(k), InsertOutcome::primary);
  const uint64_t word = tcf->layout().tag_of(amqf::fingerprint(keys[3], tcf->params().seed, 64).value);
  unsigned slot = 0;
  while (tcf->word_at(0, slot) != word) ++slot;
  ASSERT_TRUE(tcf->erase(keys[3]));
  EXPECT_EQ(tcf->word_at(0, slot), amqf::kTombstoneWord);
  EXPECT_EQ(tcf->occupancy(0), 15u);
  EXPECT_TRUE(tcf->block_insert(0, 4242));
  EXPECT_EQ(tcf->word_at(0, slot), 4242u);
}

TEST(TcfEnumerate, CountsMatchLedger) {
  const auto tcf = Tcf::create(small_params());
  const auto keys = amqf::uniform_keys(8000, 10);
  for (const uint64_t k : keys) ASSERT_NE(tcf->insert(k), InsertOutcome::full);
  EXPECT_EQ(tcf->enumerate().size(), keys.size());
  size_t deleted = 0;
  for (size_t i = 0; i < keys.size(); i += 3) deleted += tcf->erase(keys[i]);
  EXPECT_EQ(deleted, (keys.size() + 2) / 3);
  EXPECT_EQ(tcf->enumerate().size(), keys.size() - deleted);
  // Every entry sits in one of the two candidate blocks of some key.
  std::map<std::pair<uint64_t, uint64_t>, int> expected;
  for (size_t i = 0; i < keys.size(); ++i) {
    if (i % 3 == 0) continue;
    const auto fp = amqf::fingerprint(keys[i], tcf->params().seed, 64);
    const auto pair = amqf::potc_pair(fp, tcf->params().num_blocks);
    expected[{pair.primary, tcf->layout().tag_of(fp.value)}]++;
    expected[{pair.secondary, tcf->layout().tag_of(fp.value)}]++;
  }
  for (const auto& e : tcf->enumerate()) {
    if (!e.in_backing) {
      EXPECT_TRUE(expected.count({e.block, e.tag}));
    }
  }
  tcf->validate();
}

TEST(TcfLoad, FillToFailureWithoutBacking) {
  TcfParams p = small_params(1 << 12);
  p.backing = false;
  const auto tcf = Tcf::create(p);
  for (const uint64_t k : amqf::uniform_keys(2 * p.capacity(), 11)) {
    if (tcf->insert(k) == InsertOutcome::full) break;
  }
  EXPECT_GE(tcf->load_factor(), 0.75);
  EXPECT_LE(tcf->load_factor(), 0.85);
  EXPECT_EQ(tcf->backing_occupied(), 0u);
}

TEST(TcfLoad, BackingReachesNinetyPercent) {
  const auto tcf = Tcf::create(small_params(1 << 12));
  for (const uint64_t k : amqf::uniform_keys(2 * tcf->params().capacity(), 12)) {
    if (tcf->insert(k) == InsertOutcome::full) break;
  }
  EXPECT_GE(tcf->load_factor(), 0.90);
  tcf->validate();
}

TEST(TcfLoad, BackingFractionAtNinetyPercent) {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const auto tcf = Tcf::create(small_params(1 << 12));
    const auto keys = amqf::uniform_keys(static_cast<uint64_t>(0.9 * tcf->params().capacity()), seed);
    uint64_t backing = 0;
    for (const uint64_t k : keys) {
      const InsertOutcome o = tcf->insert(k);
      ASSERT_NE(o, InsertOutcome::full);
      backing += o == InsertOutcome::backing;
    }
    EXPECT_LT(static_cast<double>(backing) / static_cast<double>(keys.size()), 0.002) << "seed " << seed;
    for (uint64_t b = 0; b < tcf->params().num_blocks; ++b) ASSERT_LE(tcf->occupancy(b), 16u);
  }
}

TEST(TcfShortcut, TransparentForMembership) {
  const auto keys = amqf::uniform_keys(static_cast<uint64_t>(0.85 * 16 * 2048), 13);
  for (bool shortcut : {true, false}) {
    TcfParams p = small_params(2048);
    p.shortcut = shortcut;
    const auto tcf = Tcf::create(p);
    for (const uint64_t k : keys) ASSERT_NE(tcf->insert(k), InsertOutcome::full);
    for (const uint64_t k : keys) ASSERT_TRUE(tcf->contains(k)) << "shortcut " << shortcut;
  }
}

TEST(TcfConcurrency, DistinctInsertsAreNeitherLostNorDuplicated) {
  const auto tcf = Tcf::create(small_params(1 << 12));
  const auto keys = amqf::uniform_keys(static_cast<uint64_t>(0.9 * tcf->params().capacity()), 14);
  std::atomic<uint64_t> successes{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < 8; ++t) {
    pool.emplace_back([&, t] {
      for (size_t i = t; i < keys.size(); i += 8) successes += tcf->insert(keys[i]) != InsertOutcome::full;
    });
  }
  for (auto& th : pool) th.join();
  EXPECT_EQ(tcf->enumerate().size(), successes.load());
  EXPECT_EQ(successes.load(), keys.size());
  for (const uint64_t k : keys) ASSERT_TRUE(tcf->contains(k));
  tcf->validate();
}

TEST(TcfSlotWidths, EightAndThirtyTwoBitSlots) {
  for (const auto& [w, f] : std::vector<std::pair<unsigned, unsigned>>{{8, 8}, {32, 32}}) {
    TcfParams p = small_params(256);
    p.slot_bits = w;
    p.tag_bits = f;
    const auto tcf = Tcf::create(p);
    const auto keys = amqf::uniform_keys(3000, 15);
    for (const uint64_t k : keys) ASSERT_NE(tcf->insert(k), InsertOutcome::full);
    for (const uint64_t k : keys) ASSERT_TRUE(tcf->contains(k));
    tcf->validate();
  }
}

}  // namespace
