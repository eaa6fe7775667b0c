#include "amqf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

#include "amqf/bulk_tcf.hpp"
#include "amqf/error.hpp"
#include "amqf/gqf.hpp"
#include "amqf/parallel.hpp"
#include "amqf/tcf.hpp"

namespace amqf {

FilterKind parse_filter_kind(std::string_view name) {
  if (name == "tcf") return FilterKind::tcf;
  if (name == "tcf-bulk" || name == "tcf_bulk") return FilterKind::tcf_bulk;
  if (name == "gqf") return FilterKind::gqf;
  throw ParameterError("unknown filter: " + std::string(name));
}

Api parse_api(std::string_view name) {
  if (name == "point") return Api::point;
  if (name == "bulk") return Api::bulk;
  throw ParameterError("unknown api: " + std::string(name));
}

BenchOp parse_bench_op(std::string_view name) {
  if (name == "insert") return BenchOp::insert;
  if (name == "query") return BenchOp::query;
  if (name == "fpr") return BenchOp::fpr;
  if (name == "delete" || name == "erase") return BenchOp::erase;
  if (name == "count") return BenchOp::count;
  if (name == "fill-to-failure" || name == "fill_to_failure") return BenchOp::fill_to_failure;
  throw ParameterError("unknown op: " + std::string(name));
}

CountMode parse_count_mode(std::string_view name) {
  if (name == "naive") return CountMode::naive;
  if (name == "mapreduce") return CountMode::mapreduce;
  throw ParameterError("unknown mode: " + std::string(name));
}

std::string_view to_string(FilterKind kind) noexcept {
  switch (kind) {
    case FilterKind::tcf: return "tcf";
    case FilterKind::tcf_bulk: return "tcf-bulk";
    case FilterKind::gqf: return "gqf";
  }
  return "unknown";
}

std::string_view to_string(Api api) noexcept { return api == Api::point ? "point" : "bulk"; }

std::string_view to_string(BenchOp op) noexcept {
  switch (op) {
    case BenchOp::insert: return "insert";
    case BenchOp::query: return "query";
    case BenchOp::fpr: return "fpr";
    case BenchOp::erase: return "delete";
    case BenchOp::count: return "count";
    case BenchOp::fill_to_failure: return "fill-to-failure";
  }
  return "unknown";
}

std::vector<MetricsRecord> BenchReport::records() const {
  std::vector<MetricsRecord> out;
  for (const BenchRun& r : runs) out.push_back(r.record);
  return out;
}

namespace {

std::vector<std::span<const uint64_t>> split_batches(std::span<const uint64_t> keys, unsigned batches) {
  std::vector<std::span<const uint64_t>> out;
  const size_t n = keys.size();
  for (unsigned b = 0; b < batches; ++b) {
    const size_t lo = n * b / batches, hi = n * (b + 1) / batches;
    if (hi > lo) out.push_back(keys.subspan(lo, hi - lo));
  }
  return out;
}

class Driver {
 public:
  virtual ~Driver() = default;
  virtual uint64_t capacity() const = 0;
  /// Returns the number of keys that found no room.
  virtual uint64_t insert(std::span<const uint64_t> keys) = 0;
  virtual std::vector<uint8_t> query(std::span<const uint64_t> keys) = 0;
  virtual uint64_t erase(std::span<const uint64_t> keys) = 0;
  virtual uint64_t count_insert(std::span<const uint64_t>) { throw ParameterError("counting needs the gqf filter"); }
  /// Inserts keys one at a time (or in small batches) until the first
  /// failure; returns the load factor just before it.
  virtual double fill_to_failure(std::span<const uint64_t> keys) = 0;
  virtual double load_factor() const = 0;
  virtual uint64_t size_in_bits() const = 0;
  virtual uint64_t items() const = 0;
  virtual uint64_t backing_items() const { return 0; }
  virtual void validate() const = 0;
};

class TcfDriver final : public Driver {
 public:
  TcfDriver(const TcfParams& params, unsigned threads) : tcf_(Tcf::create(params)), threads_(threads) {}

  uint64_t capacity() const override { return tcf_->params().capacity(); }

  uint64_t insert(std::span<const uint64_t> keys) override {
    std::atomic<uint64_t> failed{0};
    parallel_for(keys.size(), threads_, [&](size_t lo, size_t hi, unsigned) {
      uint64_t local = 0;
      for (size_t i = lo; i < hi; ++i) local += tcf_->insert(keys[i]) == InsertOutcome::full;
      failed += local;
    });
    return failed;
  }

  std::vector<uint8_t> query(std::span<const uint64_t> keys) override {
    std::vector<uint8_t> out(keys.size());
    parallel_for(keys.size(), threads_, [&](size_t lo, size_t hi, unsigned) {
      for (size_t i = lo; i < hi; ++i) out[i] = tcf_->contains(keys[i]);
    });
    return out;
  }

  uint64_t erase(std::span<const uint64_t> keys) override {
    std::atomic<uint64_t> removed{0};
    parallel_for(keys.size(), threads_, [&](size_t lo, size_t hi, unsigned) {
      uint64_t local = 0;
      for (size_t i = lo; i < hi; ++i) local += tcf_->erase(keys[i]);
      removed += local;
    });
    return removed;
  }

  double fill_to_failure(std::span<const uint64_t> keys) override {
    // A failed insert claims no main-table slot.
    for (const uint64_t key : keys) {
      if (tcf_->insert(key) == InsertOutcome::full) break;
    }
    return tcf_->load_factor();
  }

  double load_factor() const override { return tcf_->load_factor(); }
  uint64_t size_in_bits() const override { return tcf_->size_in_bits(); }
  uint64_t items() const override { return tcf_->stats().inserted - tcf_->stats().erased; }
  uint64_t backing_items() const override { return tcf_->backing_occupied(); }
  void validate() const override { tcf_->validate(); }

 private:
  std::unique_ptr<Tcf> tcf_;
  unsigned threads_;
};

class BulkTcfDriver final : public Driver {
 public:
  BulkTcfDriver(const BulkTcfParams& params, unsigned threads, unsigned batches)
      : tcf_(params), threads_(threads), batches_(batches) {}

  uint64_t capacity() const override { return tcf_.params().capacity(); }

  uint64_t insert(std::span<const uint64_t> keys) override {
    uint64_t failed = 0;
    for (const auto batch : split_batches(keys, batches_)) failed += tcf_.bulk_insert(batch, threads_).failed;
    return failed;
  }

  std::vector<uint8_t> query(std::span<const uint64_t> keys) override { return tcf_.bulk_query(keys, threads_); }

  uint64_t erase(std::span<const uint64_t> keys) override { return tcf_.bulk_erase(keys); }

  double fill_to_failure(std::span<const uint64_t> keys) override {
    const size_t step = std::max<size_t>(1, capacity() / 1000);
    for (size_t at = 0; at < keys.size(); at += step) {
      const double before = tcf_.load_factor();
      const auto batch = keys.subspan(at, std::min(step, keys.size() - at));
      if (tcf_.bulk_insert(batch, threads_).failed > 0) return before;
    }
    return tcf_.load_factor();
  }

  double load_factor() const override { return tcf_.load_factor(); }
  uint64_t size_in_bits() const override { return tcf_.size_in_bits(); }
  uint64_t items() const override { return tcf_.items(); }
  uint64_t backing_items() const override { return tcf_.backing_occupied(); }
  void validate() const override { tcf_.validate(); }

 private:
  BulkTcf tcf_;
  unsigned threads_;
  unsigned batches_;
};

class GqfDriver final : public Driver {
 public:
  GqfDriver(const QfParams& params, Api api, unsigned threads, unsigned batches)
      : qf_(QuotientFilter::create(params)), api_(api), threads_(threads), batches_(batches) {}

  uint64_t capacity() const override { return qf_->params().num_slots(); }

  uint64_t insert(std::span<const uint64_t> keys) override {
    if (api_ == Api::point) return point_insert(keys);
    uint64_t failed = 0;
    for (const auto batch : split_batches(keys, batches_)) {
      const uint64_t before = qf_->item_count();
      try {
        qf_->bulk_insert(batch, threads_);
      } catch (const CapacityError&) {
        failed += batch.size() - (qf_->item_count() - before);
      }
    }
    return failed;
  }

  uint64_t count_insert(std::span<const uint64_t> keys) override {
    if (api_ == Api::point) return point_insert(keys);
    uint64_t failed = 0;
    for (const auto batch : split_batches(keys, batches_)) {
      const uint64_t before = qf_->item_count();
      try {
        qf_->bulk_count(batch, threads_);
      } catch (const CapacityError&) {
        failed += batch.size() - (qf_->item_count() - before);
      }
    }
    return failed;
  }

  std::vector<uint8_t> query(std::span<const uint64_t> keys) override {
    std::vector<uint8_t> out(keys.size());
    parallel_for(keys.size(), threads_, [&](size_t lo, size_t hi, unsigned) {
      for (size_t i = lo; i < hi; ++i) out[i] = qf_->count(keys[i]) > 0;
    });
    return out;
  }

  uint64_t erase(std::span<const uint64_t> keys) override {
    if (api_ == Api::bulk) {
      uint64_t removed = 0;
      for (const auto batch : split_batches(keys, batches_)) removed += qf_->bulk_erase(batch, threads_).removed;
      return removed;
    }
    std::atomic<uint64_t> removed{0};
    parallel_for(keys.size(), threads_, [&](size_t lo, size_t hi, unsigned) {
      uint64_t local = 0;
      for (size_t i = lo; i < hi; ++i) local += qf_->erase(keys[i]);
      removed += local;
    });
    return removed;
  }

  double fill_to_failure(std::span<const uint64_t> keys) override {
    for (const uint64_t key : keys) {
      const double before = qf_->load_factor();
      try {
        qf_->insert(key);
      } catch (const CapacityError&) {
        return before;
      }
    }
    return qf_->load_factor();
  }

  double load_factor() const override { return qf_->load_factor(); }
  uint64_t size_in_bits() const override { return qf_->size_in_bits(); }
  uint64_t items() const override { return qf_->item_count(); }
  void validate() const override { qf_->validate(); }

 private:
  uint64_t point_insert(std::span<const uint64_t> keys) {
    std::atomic<uint64_t> failed{0};
    parallel_for(keys.size(), threads_, [&](size_t lo, size_t hi, unsigned) {
      uint64_t local = 0;
      for (size_t i = lo; i < hi; ++i) {
        try {
          qf_->insert(keys[i]);
        } catch (const CapacityError&) {
          ++local;
        }
      }
      failed += local;
    });
    return failed;
  }

  std::unique_ptr<QuotientFilter> qf_;
  Api api_;
  unsigned threads_;
  unsigned batches_;
};

Api resolve_api(const BenchConfig& c) {
  switch (c.filter) {
    case FilterKind::tcf:
      if (c.api == Api::bulk) throw ParameterError("the tcf filter has no bulk API; use tcf-bulk");
      if (c.mode) throw ParameterError("--mode applies to the gqf filter only");
      return Api::point;
    case FilterKind::tcf_bulk:
      if (c.api == Api::point) throw ParameterError("the tcf-bulk filter has no point API; use tcf");
      if (c.mode) throw ParameterError("--mode applies to the gqf filter only");
      return Api::bulk;
    case FilterKind::gqf:
      if (c.mode) {
        const Api implied = *c.mode == CountMode::naive ? Api::point : Api::bulk;
        if (c.api && *c.api != implied) throw ParameterError("--mode conflicts with --api");
        return implied;
      }
      return c.api.value_or(Api::point);
  }
  throw ParameterError("unknown filter");
}

std::unique_ptr<Driver> make_driver(const BenchConfig& c, Api api) {
  if (c.log_slots == 0 || c.log_slots > 40) throw ParameterError("log-slots must lie in [1, 40]");
  const uint64_t slots = uint64_t{1} << c.log_slots;
  switch (c.filter) {
    case FilterKind::tcf: {
      TcfParams p;
      p.block_size = c.block_size == 0 ? 16 : c.block_size;
      if (slots % p.block_size != 0) throw ParameterError("block size must divide 2^log-slots");
      p.num_blocks = slots / p.block_size;
      p.tag_bits = c.tag_bits;
      p.slot_bits = c.tag_bits <= 8 ? 8 : c.tag_bits <= 16 ? 16 : 32;
      p.backing = c.backing;
      p.group_width = c.group_width;
      return std::make_unique<TcfDriver>(p, c.threads);
    }
    case FilterKind::tcf_bulk: {
      BulkTcfParams p;
      p.block_size = c.block_size == 0 ? 128 : c.block_size;
      if (slots % p.block_size != 0) throw ParameterError("block size must divide 2^log-slots");
      p.num_blocks = slots / p.block_size;
      p.tag_bits = c.tag_bits;
      p.backing = c.backing;
      return std::make_unique<BulkTcfDriver>(p, c.threads, c.batches);
    }
    case FilterKind::gqf: {
      QfParams p;
      p.quotient_bits = c.log_slots;
      p.remainder_bits = c.remainder_bits;
      return std::make_unique<GqfDriver>(p, api, c.threads, c.batches);
    }
  }
  throw ParameterError("unknown filter");
}

void check_config(const BenchConfig& c) {
  if (c.threads == 0) throw ParameterError("threads must be positive");
  if (c.batches == 0) throw ParameterError("batches must be positive");
  if (c.reps == 0) throw ParameterError("reps must be positive");
  if (!(c.load > 0.0 && c.load <= 1.0)) throw ParameterError("load must lie in (0, 1]");
  if (c.op == BenchOp::count && c.filter != FilterKind::gqf) throw ParameterError("count needs the gqf filter");
  if (c.op == BenchOp::fpr && c.queries == 0) throw ParameterError("fpr needs at least one query");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

BenchRun run_once(const BenchConfig& c, Api api, std::span<const uint64_t> keys, std::span<const uint64_t> probe) {
  const std::unique_ptr<Driver> d = make_driver(c, api);
  BenchRun run;
  std::optional<double> fpr;
  double achieved = -1.0;
  const bool counting = c.filter == FilterKind::gqf && (c.op == BenchOp::count || c.mode.has_value());
  const auto load = [&](std::span<const uint64_t> ks) {
    return counting ? d->count_insert(ks) : d->insert(ks);
  };

  const auto start = std::chrono::steady_clock::now();
  double wall = 0.0;
  switch (c.op) {
    case BenchOp::insert:
    case BenchOp::count:
      run.failures = load(keys);
      wall = seconds_since(start);
      run.ops = keys.size();
      break;
    case BenchOp::query: {
      run.failures = load(keys);
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<uint8_t> found = d->query(keys);
      wall = seconds_since(t0);
      run.ops = keys.size();
      if (run.failures == 0 && std::find(found.begin(), found.end(), 0) != found.end()) {
        throw InvariantViolation("an inserted key queried negative");
      }
      break;
    }
    case BenchOp::fpr: {
      run.failures = load(keys);
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<uint8_t> found = d->query(probe);
      wall = seconds_since(t0);
      run.ops = probe.size();
      fpr = positive_fraction(found);
      break;
    }
    case BenchOp::erase: {
      run.failures = load(keys);
      const auto t0 = std::chrono::steady_clock::now();
      d->erase(keys);
      wall = seconds_since(t0);
      run.ops = keys.size();
      break;
    }
    case BenchOp::fill_to_failure:
      achieved = d->fill_to_failure(keys);
      wall = seconds_since(start);
      run.ops = keys.size();
      break;
  }
  d->validate();

  const uint64_t held = d->items();
  run.backing_items = d->backing_items();
  MetricsRecord& r = run.record;
  r.filter = std::string(to_string(c.filter));
  r.api = std::string(to_string(api));
  r.op = std::string(to_string(c.op));
  r.log_slots = c.log_slots;
  r.load_factor = achieved >= 0.0 ? achieved : d->load_factor();
  r.threads = c.threads;
  r.dist = std::string(to_string(c.dist));
  r.seed = c.seed;
  r.wall_seconds = wall;
  r.ops_per_sec = wall > 0.0 ? static_cast<double>(run.ops) / wall : 0.0;
  r.fpr = fpr;
  r.bits_per_item = held == 0 ? 0.0 : static_cast<double>(d->size_in_bits()) / static_cast<double>(held);
  return run;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& c) {
  check_config(c);
  const Api api = resolve_api(c);
  const uint64_t capacity = make_driver(c, api)->capacity();

  std::vector<uint64_t> keys;
  if (c.op == BenchOp::fill_to_failure) {
    if (c.dist != Distribution::uniform) throw ParameterError("fill-to-failure uses the uniform distribution");
    keys = uniform_keys(2 * capacity, c.seed);
  } else {
    WorkloadSpec spec;
    spec.dist = c.dist;
    spec.n = c.items != 0 ? c.items : static_cast<uint64_t>(std::llround(c.load * static_cast<double>(capacity)));
    spec.seed = c.seed;
    spec.zipf_s = c.zipf_s;
    spec.kmer_k = c.k;
    spec.kmer_file = c.kmer_file;
    keys = gen_keys(spec);
  }
  std::vector<uint64_t> probe;
  if (c.op == BenchOp::fpr) probe = fpr_query_keys(c.queries, c.seed);

  BenchReport report;
  for (unsigned rep = 0; rep < c.reps; ++rep) report.runs.push_back(run_once(c, api, keys, probe));
  std::vector<size_t> order(report.runs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return report.runs[a].record.wall_seconds < report.runs[b].record.wall_seconds;
  });
  report.median = order[order.size() / 2];
  return report;
}

}  // namespace amqf
