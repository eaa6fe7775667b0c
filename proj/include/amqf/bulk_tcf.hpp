#pragma once

// Two-Choice Filter, bulk API.
//
// Blocks keep their occupied slots sorted and packed at the front, so queries
// are binary searches. A batch is hashed, sorted by (primary block, tag) and
// cut into per-block runs by successor search. Each block then merges three
// sorted lists in one pass: what it already holds, the items that may take
// the shortcut into it, and the items routed to it by the two-choice rule.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "amqf/backing_table.hpp"
#include "amqf/hash.hpp"
#include "amqf/tcf.hpp"

namespace amqf {

struct BulkTcfParams {
  uint64_t num_blocks = 1024;
  unsigned block_size = 128;
  unsigned tag_bits = 16;
  double shortcut_threshold = 0.75;
  bool backing = true;
  double backing_ratio = 0.01;
  unsigned backing_probe_limit = 20;
  uint64_t seed = 0x2545f4914f6cdd1dULL;

  static constexpr unsigned kSlotBits = 16;

  void validate() const;
  uint64_t capacity() const noexcept { return num_blocks * block_size; }
  uint64_t backing_buckets() const noexcept;
};

struct BatchItem {
  uint64_t block = 0;
  uint64_t word = 0;
  uint64_t fp = 0;

  friend auto operator<=>(const BatchItem&, const BatchItem&) = default;
};

/// A hashed batch sorted by (block, word), plus `num_blocks + 1` boundaries:
/// boundaries[b] is the index of the first item whose block is >= b.
struct BatchPartition {
  std::vector<BatchItem> items;
  std::vector<size_t> boundaries;

  std::span<const BatchItem> block_items(uint64_t block) const {
    return std::span(items).subspan(boundaries[block], boundaries[block + 1] - boundaries[block]);
  }
};

/// Hashes `keys` into (primary block, slot word) items and partitions them.
BatchPartition partition_batch(std::span<const uint64_t> keys, const BulkTcfParams& params);

/// Writes the sorted merge of three individually sorted lists into `out`.
/// Returns the merged length, or nullopt (leaving `out` untouched) when the
/// lists hold more than out.size() items.
std::optional<size_t> merge_block(std::span<const uint16_t> existing, std::span<const uint16_t> shortcut,
                                  std::span<const uint16_t> potc, std::span<uint16_t> out);

struct BulkInsertStats {
  uint64_t direct = 0;   ///< shortcut into the primary block
  uint64_t potc = 0;     ///< placed by the two-choice rule
  uint64_t backing = 0;  ///< spilled into the backing table
  uint64_t failed = 0;   ///< no room anywhere

  friend bool operator==(const BulkInsertStats&, const BulkInsertStats&) = default;
};

class BulkTcf {
 public:
  /// Throws ParameterError if `params` is invalid.
  explicit BulkTcf(const BulkTcfParams& params);

  const BulkTcfParams& params() const noexcept { return params_; }
  const SlotLayout& layout() const noexcept { return layout_; }

  /// Requires exclusive access. `workers` threads split the blocks between
  /// them; the result does not depend on the worker count.
  BulkInsertStats bulk_insert(std::span<const uint64_t> keys, unsigned workers = 1);

  /// One byte per key, 1 if found. Safe alongside other queries.
  std::vector<uint8_t> bulk_query(std::span<const uint64_t> keys, unsigned workers = 1) const;
  bool contains(uint64_t key) const;

  /// Removes one matching tag per key (primary, secondary, then backing),
  /// closing the gap in the sorted block. Returns the number removed.
  /// Requires exclusive access.
  uint64_t bulk_erase(std::span<const uint64_t> keys);

  std::vector<TcfEntry> enumerate() const;
  double load_factor() const;
  unsigned occupancy(uint64_t block) const { return fill_[block]; }
  std::span<const uint16_t> block(uint64_t b) const {
    return std::span(slots_).subspan(b * params_.block_size, fill_[b]);
  }
  uint64_t backing_occupied() const { return backing_.occupied(); }
  uint64_t items() const noexcept { return inserted_ - erased_; }
  uint64_t size_in_bits() const noexcept;

  /// Throws InvariantViolation unless every block is sorted and packed and
  /// the item count matches the counters.
  void validate() const;

 private:
  BlockPair block_pair(uint64_t fp) const noexcept;
  bool find_in_block(uint64_t block, uint16_t word) const noexcept;
  bool insert_sorted(uint64_t block, uint16_t word);
  bool erase_from_block(uint64_t block, uint16_t word);

  BulkTcfParams params_;
  SlotLayout layout_;
  std::vector<uint16_t> slots_;
  std::vector<uint16_t> fill_;
  BackingTable<uint16_t> backing_;
  uint64_t inserted_ = 0;
  uint64_t erased_ = 0;
};

}  // namespace amqf
