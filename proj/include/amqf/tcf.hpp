#pragma once

// Two-Choice Filter, point API.
//
// Fingerprints are stored as packed slot words in fixed-size blocks no larger
// than a 128-byte cache line. Each key has two candidate blocks; it goes to
// the emptier one, or straight to the primary block while that block is below
// the shortcut fill threshold. Items that fit in neither block spill into a
// small double-hashing backing table. All mutation is single-word
// compare-exchange, so insert, query and erase are safe from any number of
// threads without locks.

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "amqf/hash.hpp"

namespace amqf {

struct TcfParams {
  uint64_t num_blocks = 1024;  ///< must be a power of two
  unsigned block_size = 16;    ///< slots per block
  unsigned slot_bits = 16;     ///< 8, 16 or 32
  unsigned tag_bits = 16;      ///< <= slot_bits; the rest holds a value
  bool shortcut = true;
  double shortcut_threshold = 0.75;
  bool backing = true;
  double backing_ratio = 0.01;
  unsigned backing_probe_limit = 20;
  /// Emulated worker lanes per block. Changes the batching of slot loads in
  /// block_insert, never the outcome.
  unsigned group_width = 4;
  uint64_t seed = 0x2545f4914f6cdd1dULL;

  static constexpr unsigned kMaxBlockBits = 1024;

  /// Throws ParameterError on violated constraints.
  void validate() const;
  uint64_t capacity() const noexcept { return num_blocks * block_size; }
  uint64_t backing_buckets() const noexcept;
};

enum class InsertOutcome { primary, secondary, backing, full };

std::string_view to_string(InsertOutcome outcome) noexcept;

struct TcfEntry {
  bool in_backing = false;
  uint64_t block = 0;  ///< bucket index when in_backing
  uint64_t tag = 0;
  uint64_t value = 0;

  friend auto operator<=>(const TcfEntry&, const TcfEntry&) = default;
};

struct TcfStats {
  uint64_t inserted = 0;
  uint64_t backing_items = 0;
  uint64_t erased = 0;
};

class Tcf {
 public:
  virtual ~Tcf() = default;

  /// Throws ParameterError if `params` is invalid.
  static std::unique_ptr<Tcf> create(const TcfParams& params);

  virtual const TcfParams& params() const noexcept = 0;
  virtual const SlotLayout& layout() const noexcept = 0;

  /// Claims an EMPTY or TOMBSTONE slot of `block` for `word`. False if the
  /// block has no free slot.
  virtual bool block_insert(uint64_t block, uint64_t word) = 0;

  virtual InsertOutcome insert(uint64_t key, uint64_t value = 0) = 0;

  /// Value bits of the first match in primary, secondary, then backing.
  virtual std::optional<uint64_t> query(uint64_t key) const = 0;
  bool contains(uint64_t key) const { return query(key).has_value(); }

  /// Tombstones one slot holding the key's tag. False if none matched.
  virtual bool erase(uint64_t key) = 0;

  /// All stored entries, main table first. Requires quiescence.
  virtual std::vector<TcfEntry> enumerate() const = 0;

  /// Occupied main-table slots over capacity. Requires quiescence.
  virtual double load_factor() const = 0;
  virtual unsigned occupancy(uint64_t block) const = 0;
  virtual uint64_t word_at(uint64_t block, unsigned slot) const = 0;
  virtual uint64_t backing_buckets() const noexcept = 0;
  virtual uint64_t backing_occupied() const = 0;
  virtual TcfStats stats() const noexcept = 0;

  /// Main table plus backing table, in bits.
  virtual uint64_t size_in_bits() const noexcept = 0;

  /// Throws InvariantViolation if a block holds a malformed word or if the
  /// stored item count disagrees with the insert/erase counters. Requires
  /// quiescence.
  virtual void validate() const = 0;
};

}  // namespace amqf
