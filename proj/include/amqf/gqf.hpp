#pragma once

// Counting quotient filter with region-locked point operations and
// even-odd phased bulk operations.
//
// A key's p = q + r bit fingerprint is split into a q-bit quotient (its
// canonical slot) and an r-bit remainder (what gets stored). Remainders that
// share a quotient form a run; runs are laid out in quotient order, each
// starting at its canonical slot or right after the previous run, whichever
// is later. Two bits per slot (occupieds, runends) recover the layout.
// Repeated fingerprints are stored once with a variable-length counter (see
// count_codec.hpp).
//
// The slot array is cut into regions of `region_slots`. An operation on
// quotient q in region g may only touch regions g and g + 1; the check is
// enforced on every write and reported as CapacityError. Point operations
// therefore lock regions g and g + 1 (ascending), and bulk operations run
// lock-free in two phases: all even regions in parallel, then all odd ones.
//
// One spare region of slots past the end absorbs runs pushed beyond the last
// canonical slot; there is no wrap-around.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "amqf/batch.hpp"
#include "amqf/hash.hpp"

namespace amqf {

struct QfParams {
  unsigned quotient_bits = 16;
  unsigned remainder_bits = 8;  ///< 8, 16, 32 or 64
  uint64_t region_slots = 8192;
  double max_load = 0.95;
  uint64_t seed = 0x9e3779b97f4a7c15ULL;

  static constexpr double kMaxLoadCap = 0.95;
  static constexpr unsigned kMinQuotientBits = 6;

  void validate() const;
  unsigned fingerprint_bits() const noexcept { return quotient_bits + remainder_bits; }
  uint64_t num_slots() const noexcept { return uint64_t{1} << quotient_bits; }
  uint64_t region_size() const noexcept { return num_slots() < region_slots ? num_slots() : region_slots; }
  uint64_t num_regions() const noexcept { return num_slots() / region_size(); }
  uint64_t physical_slots() const noexcept { return num_slots() + region_size(); }
};

struct RunInterval {
  uint64_t start = 0;
  uint64_t end = 0;  ///< inclusive

  friend bool operator==(const RunInterval&, const RunInterval&) = default;
};

struct ClusterStats {
  uint64_t clusters = 0;
  uint64_t max = 0;
  double mean = 0.0;
};

struct BulkDeleteStats {
  uint64_t removed = 0;  ///< keys that matched a stored fingerprint
  uint64_t absent = 0;
};

enum class DeleteOrder { descending, ascending };

class QuotientFilter {
 public:
  virtual ~QuotientFilter() = default;

  /// Throws ParameterError if `params` is invalid.
  static std::unique_ptr<QuotientFilter> create(const QfParams& params);

  virtual const QfParams& params() const noexcept = 0;

  QuotRem locate(uint64_t key) const {
    const QfParams& p = params();
    return split(fingerprint(key, p.seed, p.fingerprint_bits()), p.quotient_bits);
  }
  uint64_t region_of(uint64_t quotient) const noexcept { return quotient / params().region_size(); }

  // Point API. Thread-safe; each call holds the locks of the key's region
  // and the one after it.

  /// Throws CapacityError past max_load or when the shift bound would be
  /// exceeded; the table is unchanged in that case.
  virtual void insert(uint64_t key, uint64_t count = 1) = 0;
  /// Never below the key's true count; above it only on fingerprint collision.
  virtual uint64_t count(uint64_t key) const = 0;
  /// Removes min(count, stored) copies. False if the fingerprint is absent.
  virtual bool erase(uint64_t key, uint64_t count = 1) = 0;

  // Fingerprint-level operations. The caller provides exclusion over the
  // quotient's region and the next one.

  virtual void insert_fingerprint(uint64_t quotient, uint64_t remainder, uint64_t delta) = 0;
  virtual bool remove_fingerprint(uint64_t quotient, uint64_t remainder, uint64_t delta) = 0;
  virtual uint64_t count_fingerprint(uint64_t quotient, uint64_t remainder) const = 0;
  /// Slot interval of the quotient's run, found through the per-64-slot
  /// offsets; nullopt when the quotient has no run.
  virtual std::optional<RunInterval> find_run(uint64_t quotient) const = 0;

  // Bulk API. Requires exclusive access; `workers` threads share each phase.

  virtual void bulk_insert(std::span<const uint64_t> keys, unsigned workers = 1) = 0;
  /// Inserts (fingerprint, count) pairs sorted by fingerprint.
  virtual void bulk_insert_counts(std::span<const ValueCount> sorted, unsigned workers = 1) = 0;
  /// Sorts, collapses duplicates, and inserts each distinct fingerprint once
  /// with its multiplicity.
  void bulk_count(std::span<const uint64_t> keys, unsigned workers = 1);
  /// Within each region, deletes in descending fingerprint order by default.
  virtual BulkDeleteStats bulk_erase(std::span<const uint64_t> keys, unsigned workers = 1,
                                     DeleteOrder order = DeleteOrder::descending) = 0;

  /// Fingerprints of a batch, sorted.
  std::vector<uint64_t> hash_sorted(std::span<const uint64_t> keys) const;

  // Introspection. Requires quiescence.

  /// (fingerprint, count) pairs in ascending fingerprint order.
  virtual std::vector<ValueCount> enumerate() const = 0;
  virtual uint64_t used_slots() const noexcept = 0;
  double load_factor() const noexcept {
    return static_cast<double>(used_slots()) / static_cast<double>(params().num_slots());
  }
  virtual uint64_t item_count() const noexcept = 0;
  virtual ClusterStats cluster_stats() const = 0;
  virtual bool is_occupied(uint64_t slot) const = 0;
  virtual bool is_runend(uint64_t slot) const = 0;
  virtual uint64_t slot(uint64_t index) const = 0;
  /// True when every slot and metadata bit is zero.
  virtual bool is_blank() const = 0;
  /// Slots moved by shifting since construction or the last reset.
  virtual uint64_t shift_work() const noexcept = 0;
  virtual void reset_shift_work() noexcept = 0;
  /// Slots, metadata bits, run offsets and locks, in bits.
  virtual uint64_t size_in_bits() const noexcept = 0;
  /// Throws InvariantViolation describing the first broken invariant.
  virtual void validate() const = 0;
};

}  // namespace amqf
