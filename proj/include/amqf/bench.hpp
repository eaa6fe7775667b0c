#pragma once

// Benchmark driver shared by the CLI, the acceptance tests and the Python
// module.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amqf/metrics.hpp"
#include "amqf/workload.hpp"

namespace amqf {

enum class FilterKind { tcf, tcf_bulk, gqf };
enum class Api { point, bulk };
enum class BenchOp { insert, query, fpr, erase, count, fill_to_failure };
enum class CountMode { naive, mapreduce };

FilterKind parse_filter_kind(std::string_view name);
Api parse_api(std::string_view name);
/// "delete" and "erase" both name BenchOp::erase.
BenchOp parse_bench_op(std::string_view name);
CountMode parse_count_mode(std::string_view name);
std::string_view to_string(FilterKind kind) noexcept;
std::string_view to_string(Api api) noexcept;
std::string_view to_string(BenchOp op) noexcept;

struct BenchConfig {
  FilterKind filter = FilterKind::tcf;
  std::optional<Api> api;  ///< defaults: tcf point, tcf-bulk bulk, gqf point
  BenchOp op = BenchOp::insert;
  unsigned log_slots = 20;
  double load = 0.9;
  unsigned threads = 1;
  Distribution dist = Distribution::uniform;
  double zipf_s = 1.5;
  std::string kmer_file;
  unsigned k = 28;
  uint64_t seed = 1;
  unsigned batches = 1;
  /// GQF only. naive inserts every item through the point API; mapreduce
  /// collapses duplicates and inserts each distinct fingerprint once.
  std::optional<CountMode> mode;
  bool backing = true;
  unsigned group_width = 4;
  unsigned reps = 3;
  unsigned remainder_bits = 8;
  unsigned tag_bits = 16;
  unsigned block_size = 0;  ///< 0 picks 16 for tcf and 128 for tcf-bulk
  uint64_t queries = 1'000'000;
  uint64_t items = 0;  ///< 0 derives the stream length from load
};

struct BenchRun {
  MetricsRecord record;
  uint64_t ops = 0;
  uint64_t failures = 0;       ///< inserts that found no room
  uint64_t backing_items = 0;  ///< TCF entries held by the backing table
};

struct BenchReport {
  std::vector<BenchRun> runs;
  size_t median = 0;  ///< index of the run with the median wall time

  const BenchRun& median_run() const { return runs.at(median); }
  std::vector<MetricsRecord> records() const;
};

/// Runs `config.reps` repetitions on identical data. Each repetition builds
/// a fresh filter, times the operation and validates the structure.
/// Inserts that find no room are counted in BenchRun::failures. Throws
/// ParameterError or InputError on bad configuration or input and
/// InvariantViolation if validation fails.
BenchReport run_benchmark(const BenchConfig& config);

}  // namespace amqf
