#include <gtest/gtest.h>

#include "amqf/bench.hpp"
#include "amqf/error.hpp"

namespace {

using amqf::BenchConfig;
using amqf::BenchOp;
using amqf::FilterKind;

BenchConfig small(FilterKind filter, BenchOp op) {
  BenchConfig c;
  c.filter = filter;
  c.op = op;
  c.log_slots = 14;
  c.reps = 1;
  c.queries = 20000;
  return c;
}

TEST(Bench, TcfInsertRecord) {
  const auto report = amqf::run_benchmark(small(FilterKind::tcf, BenchOp::insert));
  ASSERT_EQ(report.runs.size(), 1u);
  const amqf::MetricsRecord& r = report.median_run().record;
  EXPECT_EQ(r.filter, "tcf");
  EXPECT_EQ(r.api, "point");
  EXPECT_EQ(r.op, "insert");
  EXPECT_FALSE(r.fpr.has_value());
  EXPECT_NEAR(r.load_factor, 0.9, 0.01);
  EXPECT_GT(r.ops_per_sec, 0);
  EXPECT_GT(r.bits_per_item, 16);
  EXPECT_EQ(report.median_run().failures, 0u);
}

TEST(Bench, RepetitionsAndMedian) {
  BenchConfig c = small(FilterKind::gqf, BenchOp::query);
  c.reps = 3;
  const auto report = amqf::run_benchmark(c);
  ASSERT_EQ(report.runs.size(), 3u);
  int faster = 0, slower = 0;
  for (const auto& run : report.runs) {
    faster += run.record.wall_seconds < report.median_run().record.wall_seconds;
    slower += run.record.wall_seconds > report.median_run().record.wall_seconds;
  }
  EXPECT_LE(faster, 1);
  EXPECT_LE(slower, 1);
  EXPECT_EQ(report.records().size(), 3u);
}

TEST(Bench, FprIsRecorded) {
  for (const FilterKind f : {FilterKind::tcf, FilterKind::tcf_bulk, FilterKind::gqf}) {
    const auto report = amqf::run_benchmark(small(f, BenchOp::fpr));
    ASSERT_TRUE(report.median_run().record.fpr.has_value());
    EXPECT_LT(*report.median_run().record.fpr, 0.01);
  }
}

TEST(Bench, DeleteEmptiesTheFilter) {
  for (const FilterKind f : {FilterKind::tcf, FilterKind::tcf_bulk, FilterKind::gqf}) {
    const auto report = amqf::run_benchmark(small(f, BenchOp::erase));
    EXPECT_EQ(report.median_run().record.op, "delete");
    EXPECT_LT(report.median_run().record.load_factor, 0.01) << amqf::to_string(f);
  }
}

TEST(Bench, FillToFailureWithoutBacking) {
  BenchConfig c = small(FilterKind::tcf, BenchOp::fill_to_failure);
  c.log_slots = 18;
  c.backing = false;
  const double load = amqf::run_benchmark(c).median_run().record.load_factor;
  EXPECT_GE(load, 0.75);
  EXPECT_LE(load, 0.85);
}

TEST(Bench, CountingModes) {
  BenchConfig c = small(FilterKind::gqf, BenchOp::count);
  c.dist = amqf::Distribution::zipf;
  c.mode = amqf::CountMode::naive;
  const auto naive = amqf::run_benchmark(c);
  EXPECT_EQ(naive.median_run().record.api, "point");
  c.mode = amqf::CountMode::mapreduce;
  const auto mr = amqf::run_benchmark(c);
  EXPECT_EQ(mr.median_run().record.api, "bulk");
  EXPECT_EQ(mr.median_run().record.load_factor, naive.median_run().record.load_factor);
}

TEST(Bench, ParameterErrors) {
  EXPECT_THROW(amqf::run_benchmark(small(FilterKind::tcf, BenchOp::count)), amqf::ParameterError);
  BenchConfig c = small(FilterKind::tcf, BenchOp::insert);
  c.api = amqf::Api::bulk;
  EXPECT_THROW(amqf::run_benchmark(c), amqf::ParameterError);
  c = small(FilterKind::gqf, BenchOp::insert);
  c.mode = amqf::CountMode::naive;
  c.api = amqf::Api::bulk;
  EXPECT_THROW(amqf::run_benchmark(c), amqf::ParameterError);
  c = small(FilterKind::tcf, BenchOp::insert);
  c.threads = 0;
  EXPECT_THROW(amqf::run_benchmark(c), amqf::ParameterError);
  c = small(FilterKind::gqf, BenchOp::insert);
  c.dist = amqf::Distribution::kmer;
  c.kmer_file = "/nonexistent.fa";
  EXPECT_THROW(amqf::run_benchmark(c), amqf::InputError);
  EXPECT_THROW(amqf::parse_filter_kind("bloom"), amqf::ParameterError);
  EXPECT_EQ(amqf::parse_bench_op("delete"), BenchOp::erase);
}

}  // namespace
