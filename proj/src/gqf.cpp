#include "amqf/gqf.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <limits>
#include <mutex>
#include <string>

#include "amqf/count_codec.hpp"
#include "amqf/parallel.hpp"

namespace amqf {

void QfParams::validate() const {
  if (remainder_bits != 8 && remainder_bits != 16 && remainder_bits != 32 && remainder_bits != 64) {
    throw ParameterError("remainder bits must be 8, 16, 32 or 64, got " + std::to_string(remainder_bits));
  }
  if (quotient_bits < kMinQuotientBits) {
    throw ParameterError("quotient bits must be at least " + std::to_string(kMinQuotientBits));
  }
  if (quotient_bits + remainder_bits > 64) {
    throw ParameterError("quotient + remainder bits must not exceed 64, got " +
                         std::to_string(quotient_bits + remainder_bits));
  }
  if (region_slots < 64 || !std::has_single_bit(region_slots)) {
    throw ParameterError("region_slots must be a power of two >= 64");
  }
  if (!(max_load > 0.0 && max_load <= kMaxLoadCap)) {
    throw ParameterError("max_load must lie in (0, 0.95]");
  }
}

std::vector<uint64_t> QuotientFilter::hash_sorted(std::span<const uint64_t> keys) const {
  const QfParams& p = params();
  std::vector<uint64_t> fps(keys.size());
  for (size_t i = 0; i < keys.size(); ++i) fps[i] = fingerprint(keys[i], p.seed, p.fingerprint_bits()).value;
  sort_values(fps);
  return fps;
}

void QuotientFilter::bulk_count(std::span<const uint64_t> keys, unsigned workers) {
  const QfParams& p = params();
  std::vector<uint64_t> fps(keys.size());
  for (size_t i = 0; i < keys.size(); ++i) fps[i] = fingerprint(keys[i], p.seed, p.fingerprint_bits()).value;
  bulk_insert_counts(reduce_duplicates(fps), workers);
}

namespace {

constexpr uint64_t kNone = std::numeric_limits<uint64_t>::max();

// Bits [0, i] of a word.
constexpr uint64_t mask_through(unsigned i) noexcept { return i == 63 ? ~uint64_t{0} : (uint64_t{2} << i) - 1; }

unsigned select_in_word(uint64_t w, unsigned k) noexcept {
  for (unsigned i = 0; i < k; ++i) w &= w - 1;
  return static_cast<unsigned>(std::countr_zero(w));
}

// First set bit at index >= from and < limit.
uint64_t next_set(const std::vector<uint64_t>& bits, uint64_t from, uint64_t limit) noexcept {
  if (from >= limit) return kNone;
  uint64_t word = from >> 6;
  uint64_t w = bits[word] & (~uint64_t{0} << (from & 63));
  const uint64_t last_word = (limit - 1) >> 6;
  while (true) {
    if (w != 0) {
      const uint64_t pos = (word << 6) + static_cast<unsigned>(std::countr_zero(w));
      return pos < limit ? pos : kNone;
    }
    if (++word > last_word) return kNone;
    w = bits[word];
  }
}

void clear_range(std::vector<uint64_t>& bits, uint64_t lo, uint64_t hi) noexcept {
  for (uint64_t i = lo; i < hi;) {
    const uint64_t word = i >> 6;
    const unsigned bit = i & 63;
    const uint64_t span = std::min<uint64_t>(64 - bit, hi - i);
    const uint64_t mask = span == 64 ? ~uint64_t{0} : ((uint64_t{1} << span) - 1) << bit;
    bits[word] &= ~mask;
    i += span;
  }
}

template <class Slot>
class BasicQuotientFilter final : public QuotientFilter {
 public:
  explicit BasicQuotientFilter(const QfParams& params)
      : params_(params),
        r_(params.remainder_bits),
        nslots_(params.num_slots()),
        region_(params.region_size()),
        nregions_(params.num_regions()),
        phys_(params.physical_slots()),
        max_used_(static_cast<uint64_t>(params.max_load * static_cast<double>(params.num_slots()))),
        slots_(phys_, 0),
        occ_(phys_ / 64, 0),
        runend_(phys_ / 64, 0),
        offsets_(phys_ / 64 + 1, 0),
        locks_(new RegionLock[nregions_]) {}

  const QfParams& params() const noexcept override { return params_; }

  void insert(uint64_t key, uint64_t count) override {
    if (count == 0) return;
    const QuotRem qr = locate(key);
    RegionGuard guard(*this, region_of(qr.quotient));
    edit(qr.quotient, qr.remainder, count, Edit::add);
  }

  uint64_t count(uint64_t key) const override {
    const QuotRem qr = locate(key);
    RegionGuard guard(*this, region_of(qr.quotient));
    return count_fingerprint(qr.quotient, qr.remainder);
  }

  bool erase(uint64_t key, uint64_t count) override {
    if (count == 0) return false;
    const QuotRem qr = locate(key);
    RegionGuard guard(*this, region_of(qr.quotient));
    return edit(qr.quotient, qr.remainder, count, Edit::remove);
  }

  void insert_fingerprint(uint64_t quotient, uint64_t remainder, uint64_t delta) override {
    check_fingerprint(quotient, remainder);
    if (delta > 0) edit(quotient, remainder, delta, Edit::add);
  }

  bool remove_fingerprint(uint64_t quotient, uint64_t remainder, uint64_t delta) override {
    check_fingerprint(quotient, remainder);
    return delta > 0 && edit(quotient, remainder, delta, Edit::remove);
  }

  uint64_t count_fingerprint(uint64_t quotient, uint64_t remainder) const override {
    check_fingerprint(quotient, remainder);
    const auto run = find_run(quotient);
    if (!run) return 0;
    const std::span<const Slot> slots(slots_.data() + run->start, run->end - run->start + 1);
    for (size_t at = 0; at < slots.size();) {
      const DecodedGroup g = decode_group(slots.subspan(at), r_);
      if (g.remainder == remainder) return g.count;
      if (g.remainder > remainder) break;
      at += g.length;
    }
    return 0;
  }

  std::optional<RunInterval> find_run(uint64_t quotient) const override {
    if (quotient >= nslots_ || !bit(occ_, quotient)) return std::nullopt;
    const uint64_t block = quotient >> 6;
    const uint64_t k = runs_through(quotient);
    const uint64_t limit = limit_of(quotient);
    uint64_t prev_end = kNone;
    const uint64_t end = select_runend(block, k, limit, k >= 2 ? &prev_end : nullptr);
    if (end == kNone) throw InvariantViolation("run end of quotient " + std::to_string(quotient) + " not found");
    const uint64_t start = k >= 2 ? std::max(quotient, prev_end + 1) : quotient;
    return RunInterval{start, end};
  }

  void bulk_insert(std::span<const uint64_t> keys, unsigned workers) override {
    const std::vector<uint64_t> fps = hash_sorted(keys);
    phased(
        fps.size(), [&](size_t i) { return fps[i]; },
        [&](size_t i) { edit(fps[i] >> r_, fps[i] & low_mask(r_), 1, Edit::add); }, workers,
        DeleteOrder::ascending);
  }

  void bulk_insert_counts(std::span<const ValueCount> sorted, unsigned workers) override {
    phased(
        sorted.size(), [&](size_t i) { return sorted[i].value; },
        [&](size_t i) {
          if (sorted[i].count > 0) edit(sorted[i].value >> r_, sorted[i].value & low_mask(r_), sorted[i].count, Edit::add);
        },
        workers, DeleteOrder::ascending);
  }

  BulkDeleteStats bulk_erase(std::span<const uint64_t> keys, unsigned workers, DeleteOrder order) override {
    const std::vector<uint64_t> fps = hash_sorted(keys);
    std::atomic<uint64_t> removed{0}, absent{0};
    phased(
        fps.size(), [&](size_t i) { return fps[i]; },
        [&](size_t i) {
          if (edit(fps[i] >> r_, fps[i] & low_mask(r_), 1, Edit::remove)) {
            removed.fetch_add(1, std::memory_order_relaxed);
          } else {
            absent.fetch_add(1, std::memory_order_relaxed);
          }
        },
        workers, order);
    return {removed.load(), absent.load()};
  }

  std::vector<ValueCount> enumerate() const override {
    std::vector<ValueCount> out;
    for_each_run([&](uint64_t quotient, uint64_t start, uint64_t end) {
      const std::span<const Slot> run(slots_.data() + start, end - start + 1);
      for (const DecodedGroup& g : decode_run(run, r_)) {
        out.push_back({(quotient << r_) | g.remainder, g.count});
      }
    });
    return out;
  }

  uint64_t used_slots() const noexcept override { return used_.load(std::memory_order_relaxed); }
  uint64_t item_count() const noexcept override { return items_.load(std::memory_order_relaxed); }

  ClusterStats cluster_stats() const override {
    ClusterStats stats;
    uint64_t open_runs = 0, current = 0, total = 0;
    for (uint64_t x = 0; x < phys_; ++x) {
      open_runs += bit(occ_, x);
      if (open_runs > 0) {
        ++current;
      } else if (current > 0) {
        stats.max = std::max(stats.max, current);
        total += current;
        ++stats.clusters;
        current = 0;
      }
      open_runs -= bit(runend_, x);
    }
    if (current > 0) {
      stats.max = std::max(stats.max, current);
      total += current;
      ++stats.clusters;
    }
    stats.mean = stats.clusters == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(stats.clusters);
    return stats;
  }

  bool is_occupied(uint64_t slot) const override { return slot < phys_ && bit(occ_, slot); }
  bool is_runend(uint64_t slot) const override { return slot < phys_ && bit(runend_, slot); }
  uint64_t slot(uint64_t index) const override { return slots_.at(index); }

  bool is_blank() const override {
    const auto zero = [](auto v) { return v == 0; };
    return std::all_of(occ_.begin(), occ_.end(), zero) && std::all_of(runend_.begin(), runend_.end(), zero) &&
           std::all_of(slots_.begin(), slots_.end(), zero) && std::all_of(offsets_.begin(), offsets_.end(), zero);
  }

  uint64_t shift_work() const noexcept override { return shift_work_.load(std::memory_order_relaxed); }
  void reset_shift_work() noexcept override { shift_work_.store(0); }

  uint64_t size_in_bits() const noexcept override {
    return phys_ * r_ + 2 * phys_ + offsets_.size() * 16 + nregions_ * sizeof(RegionLock) * 8;
  }

  void validate() const override {
    uint64_t occupieds = 0, runends = 0;
    for (const uint64_t w : occ_) occupieds += static_cast<uint64_t>(std::popcount(w));
    for (const uint64_t w : runend_) runends += static_cast<uint64_t>(std::popcount(w));
    if (occupieds != runends) {
      throw InvariantViolation("metadata imbalance: " + std::to_string(occupieds) + " occupieds vs " +
                               std::to_string(runends) + " runends");
    }
    if (next_set(occ_, nslots_, phys_) != kNone) throw InvariantViolation("occupied bit past the last quotient");

    int64_t running = 0;
    for (uint64_t b = 0; b < occ_.size(); ++b) {
      if (offsets_[b] != running) {
        throw InvariantViolation("stale run offset at block " + std::to_string(b) + ": stored " +
                                 std::to_string(offsets_[b]) + ", actual " + std::to_string(running));
      }
      running += std::popcount(occ_[b]) - std::popcount(runend_[b]);
    }

    uint64_t used = 0, items = 0;
    for_each_run([&](uint64_t quotient, uint64_t start, uint64_t end) {
      if (end == kNone) throw InvariantViolation("run of quotient " + std::to_string(quotient) + " has no end");
      if (start > end) throw InvariantViolation("run of quotient " + std::to_string(quotient) + " is empty");
      const std::span<const Slot> run(slots_.data() + start, end - start + 1);
      uint64_t prev_head = 0;
      bool first = true;
      for (const DecodedGroup& g : decode_run(run, r_)) {
        if (!first && g.remainder <= prev_head) {
          throw InvariantViolation("run of quotient " + std::to_string(quotient) + " is not sorted");
        }
        first = false;
        prev_head = g.remainder;
        items += g.count;
      }
      used += run.size();
    });
    if (used != used_slots()) {
      throw InvariantViolation("used slot counter " + std::to_string(used_slots()) + " != " + std::to_string(used));
    }
    if (items != item_count()) {
      throw InvariantViolation("item counter " + std::to_string(item_count()) + " != " + std::to_string(items));
    }
  }

 private:
  enum class Edit { add, remove };

  struct alignas(64) RegionLock {
    std::mutex mu;
  };

  class RegionGuard {
   public:
    RegionGuard(const BasicQuotientFilter& f, uint64_t region) : first_(f.locks_[region].mu) {
      if (region + 1 < f.nregions_) second_ = std::unique_lock(f.locks_[region + 1].mu);
    }

   private:
    std::unique_lock<std::mutex> first_;
    std::unique_lock<std::mutex> second_;
  };

  struct TailRun {
    uint64_t quotient;
    uint64_t old_start;
    size_t offset;
    size_t length;
  };

  struct Scratch {
    std::vector<Slot> run;
    std::vector<Slot> tail;
    std::vector<TailRun> tail_runs;
  };

  static bool bit(const std::vector<uint64_t>& bits, uint64_t i) noexcept { return (bits[i >> 6] >> (i & 63)) & 1; }
  static void set_bit(std::vector<uint64_t>& bits, uint64_t i) noexcept { bits[i >> 6] |= uint64_t{1} << (i & 63); }
  static void clear_bit(std::vector<uint64_t>& bits, uint64_t i) noexcept {
    bits[i >> 6] &= ~(uint64_t{1} << (i & 63));
  }

  void check_fingerprint(uint64_t quotient, uint64_t remainder) const {
    if (quotient >= nslots_ || remainder > low_mask(r_)) throw ParameterError("fingerprint out of range");
  }

  // Writes for a quotient in region g stay below the end of region g + 1.
  uint64_t limit_of(uint64_t quotient) const noexcept {
    return std::min(phys_, (region_of(quotient) + 2) * region_);
  }

  // Runs whose quotient is <= `quotient` and that end at or after the start
  // of the quotient's 64-slot block.
  uint64_t runs_through(uint64_t quotient) const noexcept {
    const uint64_t block = quotient >> 6;
    return offsets_[block] + static_cast<uint64_t>(std::popcount(occ_[block] & mask_through(quotient & 63)));
  }

  // Position of the k-th (1-based) runend at or after the start of `block`.
  // When `prev` is given it receives the (k-1)-th.
  uint64_t select_runend(uint64_t block, uint64_t k, uint64_t limit, uint64_t* prev) const noexcept {
    uint64_t remaining = k;
    uint64_t prev_remaining = k - 1;
    const uint64_t last_word = (limit - 1) >> 6;
    for (uint64_t word = block; word <= last_word; ++word) {
      const uint64_t w = runend_[word];
      const auto count = static_cast<uint64_t>(std::popcount(w));
      if (prev != nullptr && prev_remaining >= 1 && prev_remaining <= count) {
        *prev = (word << 6) + select_in_word(w, static_cast<unsigned>(prev_remaining - 1));
        prev_remaining = 0;
      } else if (prev_remaining >= 1) {
        prev_remaining -= std::min(prev_remaining, count);
      }
      if (remaining <= count) {
        const uint64_t pos = (word << 6) + select_in_word(w, static_cast<unsigned>(remaining - 1));
        return pos < limit ? pos : kNone;
      }
      remaining -= count;
    }
    return kNone;
  }

  // Where a new run for an unoccupied quotient would start.
  uint64_t new_run_anchor(uint64_t quotient) const {
    const uint64_t k = runs_through(quotient);
    if (k == 0) return quotient;
    const uint64_t prev_end = select_runend(quotient >> 6, k, limit_of(quotient), nullptr);
    if (prev_end == kNone) throw CapacityError("cluster crosses the shift bound");
    return std::max(quotient, prev_end + 1);
  }

  template <class Fn>
  void for_each_run(Fn&& fn) const {
    uint64_t next_free = 0;
    for (uint64_t q = next_set(occ_, 0, nslots_); q != kNone; q = next_set(occ_, q + 1, nslots_)) {
      const uint64_t start = std::max(q, next_free);
      const uint64_t end = next_set(runend_, start, phys_);
      fn(q, start, end);
      if (end == kNone) return;
      next_free = end + 1;
    }
  }

  // Adds `delta` copies of the fingerprint or removes up to `delta` of them.
  // The edited run and every run displaced by it are rewritten in place; all
  // reads and writes stay below limit_of(quotient). Returns false only for a
  // removal of an absent fingerprint. On CapacityError nothing is modified.
  bool edit(uint64_t quotient, uint64_t rem, uint64_t delta, Edit op) {
    const uint64_t limit = limit_of(quotient);
    uint64_t anchor = 0, hi = 0;
    if (bit(occ_, quotient)) {
      const RunInterval run = *find_run(quotient);
      anchor = run.start;
      hi = run.end + 1;
    } else {
      if (op == Edit::remove) return false;
      anchor = new_run_anchor(quotient);
      hi = anchor;
    }

    thread_local Scratch scratch;
    Scratch& s = scratch;
    const std::span<const Slot> old_run(slots_.data() + anchor, hi - anchor);
    size_t at = 0, group_len = 0;
    uint64_t old_count = 0;
    while (at < old_run.size()) {
      const DecodedGroup g = decode_group(old_run.subspan(at), r_);
      if (g.remainder == rem) {
        old_count = g.count;
        group_len = g.length;
      }
      if (g.remainder >= rem) break;
      at += g.length;
    }
    if (op == Edit::remove && old_count == 0) return false;

    uint64_t new_count = 0;
    if (op == Edit::add) {
      if (old_count > std::numeric_limits<uint64_t>::max() - delta) throw CapacityError("counter overflow");
      new_count = old_count + delta;
    } else {
      new_count = old_count - std::min(delta, old_count);
    }
    s.run.assign(old_run.begin(), old_run.begin() + static_cast<std::ptrdiff_t>(at));
    if (new_count > 0) encode_group(rem, new_count, r_, s.run);
    s.run.insert(s.run.end(), old_run.begin() + static_cast<std::ptrdiff_t>(at + group_len), old_run.end());
    const auto growth = static_cast<int64_t>(s.run.size()) - static_cast<int64_t>(old_run.size());

    if (growth == 0) {
      std::copy(s.run.begin(), s.run.end(), slots_.begin() + static_cast<std::ptrdiff_t>(anchor));
      adjust_items(op, delta, old_count);
      return true;
    }

    // Gather the runs that must move: for growth, until gaps absorb the
    // displacement; for shrinkage, until a run already sits at its quotient.
    s.tail.clear();
    s.tail_runs.clear();
    uint64_t current = quotient;
    uint64_t need = growth > 0 ? static_cast<uint64_t>(growth) : 0;
    while (true) {
      const uint64_t next = next_set(occ_, current + 1, limit);
      if (next == kNone) break;
      if (growth > 0) {
        const uint64_t gap = next > hi ? next - hi : 0;
        if (gap >= need) break;
        need -= gap;
      } else if (next >= hi) {
        break;
      }
      const uint64_t start = std::max(next, hi);
      const uint64_t end = next_set(runend_, start, limit);
      if (end == kNone) throw CapacityError("shift would cross the region bound");
      s.tail_runs.push_back({next, start, s.tail.size(), end - start + 1});
      s.tail.insert(s.tail.end(), slots_.begin() + static_cast<std::ptrdiff_t>(start),
                    slots_.begin() + static_cast<std::ptrdiff_t>(end + 1));
      hi = end + 1;
      current = next;
    }

    uint64_t pos = anchor + s.run.size();
    for (const TailRun& t : s.tail_runs) pos = std::max(t.quotient, pos) + t.length;
    const uint64_t new_hi = pos;
    if (new_hi > limit) throw CapacityError("shift would cross the region bound");

    if (growth > 0) {
      uint64_t used = used_.load(std::memory_order_relaxed);
      do {
        if (used + static_cast<uint64_t>(growth) > max_used_) throw CapacityError("filter is at its maximum load");
      } while (!used_.compare_exchange_weak(used, used + static_cast<uint64_t>(growth), std::memory_order_relaxed));
    } else {
      used_.fetch_sub(static_cast<uint64_t>(-growth), std::memory_order_relaxed);
    }

    const uint64_t dirty_hi = std::max(hi, new_hi);
    std::fill(slots_.begin() + static_cast<std::ptrdiff_t>(anchor), slots_.begin() + static_cast<std::ptrdiff_t>(dirty_hi),
              Slot{0});
    clear_range(runend_, anchor, dirty_hi);
    uint64_t moved = old_run.size() - at - group_len;
    if (s.run.empty()) {
      clear_bit(occ_, quotient);
    } else {
      set_bit(occ_, quotient);
      std::copy(s.run.begin(), s.run.end(), slots_.begin() + static_cast<std::ptrdiff_t>(anchor));
      set_bit(runend_, anchor + s.run.size() - 1);
    }
    pos = anchor + s.run.size();
    for (const TailRun& t : s.tail_runs) {
      const uint64_t start = std::max(t.quotient, pos);
      std::copy_n(s.tail.begin() + static_cast<std::ptrdiff_t>(t.offset), t.length,
                  slots_.begin() + static_cast<std::ptrdiff_t>(start));
      set_bit(runend_, start + t.length - 1);
      if (start != t.old_start) moved += t.length;
      pos = start + t.length;
    }
    refresh_offsets(quotient, dirty_hi);
    shift_work_.fetch_add(moved, std::memory_order_relaxed);
    adjust_items(op, delta, old_count);
    return true;
  }

  void adjust_items(Edit op, uint64_t delta, uint64_t old_count) noexcept {
    if (op == Edit::add) {
      items_.fetch_add(delta, std::memory_order_relaxed);
    } else {
      items_.fetch_sub(std::min(delta, old_count), std::memory_order_relaxed);
    }
  }

  // Recomputes the offsets of block boundaries strictly inside (lo, hi).
  // Boundaries at or past `hi` keep their value: every edit adds or removes
  // occupied and runend bits in pairs before them.
  void refresh_offsets(uint64_t lo, uint64_t hi) noexcept {
    for (uint64_t b = lo >> 6; b < (hi - 1) >> 6; ++b) {
      offsets_[b + 1] = static_cast<uint16_t>(offsets_[b] + std::popcount(occ_[b]) - std::popcount(runend_[b]));
    }
  }

  template <class FpAt, class Apply>
  void phased(size_t n, FpAt fp_at, Apply apply, unsigned workers, DeleteOrder order) {
    // Buffer boundaries by successor search over the sorted fingerprints.
    std::vector<size_t> bounds(nregions_ + 1, n);
    for (uint64_t g = 0; g < nregions_; ++g) {
      const uint64_t first_fp = (g * region_) << r_;
      size_t lo = 0, hi = n;
      while (lo < hi) {
        const size_t mid = lo + (hi - lo) / 2;
        if (fp_at(mid) < first_fp) {
          lo = mid + 1;
        } else {
          hi = mid;
        }
      }
      bounds[g] = lo;
    }
    std::vector<uint64_t> regions;
    for (uint64_t parity = 0; parity < 2; ++parity) {
      regions.clear();
      for (uint64_t g = parity; g < nregions_; g += 2) {
        if (bounds[g] < bounds[g + 1]) regions.push_back(g);
      }
      parallel_dynamic(regions.size(), workers, [&](size_t idx, unsigned) {
        const uint64_t g = regions[idx];
        if (order == DeleteOrder::ascending) {
          for (size_t i = bounds[g]; i < bounds[g + 1]; ++i) apply(i);
        } else {
          for (size_t i = bounds[g + 1]; i-- > bounds[g];) apply(i);
        }
      });
    }
  }

  QfParams params_;
  unsigned r_;
  uint64_t nslots_;
  uint64_t region_;
  uint64_t nregions_;
  uint64_t phys_;
  uint64_t max_used_;
  std::vector<Slot> slots_;
  std::vector<uint64_t> occ_;
  std::vector<uint64_t> runend_;
  // offsets_[b]: runs from quotients before slot 64b that end at or after it.
  std::vector<uint16_t> offsets_;
  std::unique_ptr<RegionLock[]> locks_;
  std::atomic<uint64_t> used_{0};
  std::atomic<uint64_t> items_{0};
  std::atomic<uint64_t> shift_work_{0};
};

}  // namespace

std::unique_ptr<QuotientFilter> QuotientFilter::create(const QfParams& params) {
  params.validate();
  switch (params.remainder_bits) {
    case 8: return std::make_unique<BasicQuotientFilter<uint8_t>>(params);
    case 16: return std::make_unique<BasicQuotientFilter<uint16_t>>(params);
    case 32: return std::make_unique<BasicQuotientFilter<uint32_t>>(params);
    default: return std::make_unique<BasicQuotientFilter<uint64_t>>(params);
  }
}

}  // namespace amqf
