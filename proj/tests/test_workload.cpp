#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "amqf/workload.hpp"

namespace {

using amqf::Distribution;
using amqf::WorkloadSpec;

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

std::vector<uint64_t> kmers(const std::string& text, unsigned k) {
  std::istringstream in(text);
  return amqf::kmers_from_stream(in, k);
}

TEST(GenKeys, SameSeedSameStream) {
  const auto fasta = write_temp("amqf_det.fa", ">a\nACGTACGTTGCAACGTAGCTAGCTAGGATCGATCGATTTACG\n");
  for (const Distribution d : {Distribution::uniform, Distribution::ur_count, Distribution::zipf, Distribution::kmer}) {
    WorkloadSpec spec;
    spec.dist = d;
    spec.n = 5000;
    spec.seed = 77;
    spec.kmer_k = 8;
    spec.kmer_file = fasta.string();
    EXPECT_EQ(amqf::gen_keys(spec), amqf::gen_keys(spec)) << amqf::to_string(d);
    EXPECT_FALSE(amqf::gen_keys(spec).empty());
  }
  WorkloadSpec a, b;
  a.n = b.n = 100;
  b.seed = a.seed + 1;
  EXPECT_NE(amqf::gen_keys(a), amqf::gen_keys(b));
}

TEST(GenKeys, UniformIsDistinct) {
  const auto keys = amqf::uniform_keys(100000, 1);
  EXPECT_EQ(std::unordered_set<uint64_t>(keys.begin(), keys.end()).size(), keys.size());
}

TEST(GenKeys, QueryStreamIsDisjoint) {
  const auto inserted = amqf::uniform_keys(200000, 2);
  const std::unordered_set<uint64_t> set(inserted.begin(), inserted.end());
  for (const uint64_t k : amqf::fpr_query_keys(200000, 2)) ASSERT_FALSE(set.count(k));
}

TEST(UrCount, LengthAndCountDistribution) {
  const amqf::CountedWorkload w = amqf::ur_count_workload(10000, 100, 3);
  EXPECT_GE(w.stream.size(), 10000u);
  EXPECT_LE(w.stream.size(), 1000000u);
  std::map<uint64_t, uint64_t> seen;
  for (const uint64_t k : w.stream) ++seen[k];
  ASSERT_EQ(seen.size(), w.bases.size());
  std::vector<uint64_t> hist(101);
  for (size_t i = 0; i < w.bases.size(); ++i) {
    ASSERT_EQ(seen[w.bases[i]], w.counts[i]);
    ASSERT_GE(w.counts[i], 1u);
    ASSERT_LE(w.counts[i], 100u);
    ++hist[w.counts[i]];
  }
  const double expected = 10000.0 / 100;
  double stat = 0;
  for (size_t c = 1; c <= 100; ++c) stat += (hist[c] - expected) * (hist[c] - expected) / expected;
  const boost::math::chi_squared dist(99);
  EXPECT_LT(stat, boost::math::quantile(boost::math::complement(dist, 0.001)));
  // Shuffled: the first 100 keys are not one base repeated.
  EXPECT_GT(std::set<uint64_t>(w.stream.begin(), w.stream.begin() + 100).size(), 20u);
}

TEST(Zipf, TopRankFrequency) {
  constexpr uint64_t n = 1'000'000;
  const auto ranks = amqf::zipf_ranks(n, n, 1.5, 4);
  double harmonic = 0;
  for (uint64_t i = n; i >= 1; --i) harmonic += std::pow(static_cast<double>(i), -1.5);
  std::map<uint64_t, uint64_t> hist;
  for (const uint64_t r : ranks) {
    ASSERT_GE(r, 1u);
    ASSERT_LE(r, n);
    ++hist[r];
  }
  for (uint64_t rank : {1u, 2u, 3u}) {
    const double expected = std::pow(static_cast<double>(rank), -1.5) / harmonic;
    const double measured = static_cast<double>(hist[rank]) / n;
    EXPECT_NEAR(measured / expected, 1.0, 0.05) << "rank " << rank;
  }
}

TEST(Zipf, DistinctRanksGiveDistinctKeys) {
  std::unordered_set<uint64_t> keys;
  for (uint64_t r = 1; r <= 100000; ++r) keys.insert(amqf::zipf_key(r, 5));
  EXPECT_EQ(keys.size(), 100000u);
}

TEST(Kmer, ByHand) {
  EXPECT_EQ(kmers(">s\nACGT\n", 2), (std::vector<uint64_t>{0b0001, 0b0110, 0b1011}));
  EXPECT_EQ(kmers(">s\nACNGT\n", 2), (std::vector<uint64_t>{0b0001, 0b1011}));
  EXPECT_EQ(kmers(">s\nAC\ngt\n", 4), (std::vector<uint64_t>{0b00011011}));
  EXPECT_EQ(kmers("@r1\nACGT\n+\nIIII\n@r2\nTTTT\n+\n@III\n", 4), (std::vector<uint64_t>{0b00011011, 0xff}));
  EXPECT_EQ(kmers(">a\nACG\n>b\nGT\n", 3), (std::vector<uint64_t>{0b000110})) << "windows do not span records";
}

TEST(Kmer, ThirtyTwoBases) {
  const std::string seq(33, 'T');
  const auto out = kmers(">s\n" + seq + "\n", 32);
  EXPECT_EQ(out, (std::vector<uint64_t>{~uint64_t{0}, ~uint64_t{0}}));
}

TEST(Kmer, Errors) {
  EXPECT_THROW(kmers(">s\nACGT\n", 5), amqf::InputError);
  EXPECT_THROW(kmers(">s\nACGT\n", 0), amqf::ParameterError);
  EXPECT_THROW(kmers(">s\nACGT\n", 33), amqf::ParameterError);
  EXPECT_THROW(amqf::kmers_from_file("/nonexistent/reads.fa", 4), amqf::InputError);
  WorkloadSpec spec;
  spec.dist = Distribution::kmer;
  EXPECT_THROW(amqf::gen_keys(spec), amqf::ParameterError);
}

TEST(MeasureFpr, EmptyFilterIsZero) {
  EXPECT_EQ(amqf::measure_fpr([](uint64_t) { return false; }, 10000, 1), 0.0);
  EXPECT_EQ(amqf::measure_fpr([](uint64_t) { return true; }, 10000, 1), 1.0);
  EXPECT_EQ(amqf::positive_fraction(std::vector<uint8_t>{1, 0, 0, 1}), 0.5);
}

TEST(Distribution, Names) {
  EXPECT_EQ(amqf::parse_distribution("ur-count"), Distribution::ur_count);
  EXPECT_EQ(amqf::parse_distribution("zipf"), Distribution::zipf);
  EXPECT_THROW(amqf::parse_distribution("normal"), amqf::ParameterError);
}

}  // namespace
