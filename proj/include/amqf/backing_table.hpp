#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "amqf/hash.hpp"

namespace amqf {

/// Small open-addressing overflow store for the two-choice filters. Holds the
/// same packed slot words as the main table and probes by double hashing:
/// bucket i of the sequence is (start + i * step) mod size with an odd step.
/// Every operation looks at no more than `probe_limit` buckets. Never resizes.
template <class Word>
class BackingTable {
 public:
  BackingTable() = default;
  BackingTable(uint64_t size, unsigned probe_limit)
      : size_(size), probe_limit_(probe_limit), buckets_(size == 0 ? nullptr : new std::atomic<Word>[size]) {
    for (uint64_t i = 0; i < size_; ++i) buckets_[i].store(0, std::memory_order_relaxed);
  }

  uint64_t size() const noexcept { return size_; }
  unsigned probe_limit() const noexcept { return probe_limit_; }

  uint64_t probe(uint64_t fp, unsigned i) const noexcept {
    const uint64_t start = mix64(fp ^ 0x5851f42d4c957f2dULL) % size_;
    const uint64_t step = size_ == 1 ? 0 : ((mix64_b(fp ^ 0x14057b7ef767814fULL) % size_) | 1);
    return (start + i * step) % size_;
  }

  /// Claims the first EMPTY or TOMBSTONE bucket on the probe sequence.
  bool insert(uint64_t fp, Word word) noexcept {
    for (unsigned i = 0; i < probe_limit_ && size_ > 0; ++i) {
      std::atomic<Word>& bucket = buckets_[probe(fp, i)];
      Word seen = bucket.load(std::memory_order_relaxed);
      while (seen <= kTombstoneWord) {
        if (bucket.compare_exchange_weak(seen, word, std::memory_order_acq_rel)) return true;
      }
    }
    return false;
  }

  /// Value bits of the first bucket whose tag matches; the search ends at the
  /// first EMPTY bucket or the probe limit.
  std::optional<Word> find(uint64_t fp, uint64_t tag, uint64_t tag_mask) const noexcept {
    for (unsigned i = 0; i < probe_limit_ && size_ > 0; ++i) {
      const Word w = buckets_[probe(fp, i)].load(std::memory_order_acquire);
      if (w == kEmptyWord) return std::nullopt;
      if (w != kTombstoneWord && (w & tag_mask) == tag) return w;
    }
    return std::nullopt;
  }

  bool erase(uint64_t fp, uint64_t tag, uint64_t tag_mask) noexcept {
    for (unsigned i = 0; i < probe_limit_ && size_ > 0; ++i) {
      std::atomic<Word>& bucket = buckets_[probe(fp, i)];
      Word w = bucket.load(std::memory_order_acquire);
      if (w == kEmptyWord) return false;
      while (w != kTombstoneWord && (w & tag_mask) == tag) {
        if (bucket.compare_exchange_weak(w, static_cast<Word>(kTombstoneWord), std::memory_order_acq_rel)) {
          return true;
        }
      }
    }
    return false;
  }

  Word load(uint64_t bucket) const noexcept { return buckets_[bucket].load(std::memory_order_relaxed); }

  uint64_t occupied() const noexcept {
    uint64_t n = 0;
    for (uint64_t i = 0; i < size_; ++i) n += load(i) > kTombstoneWord;
    return n;
  }

  uint64_t size_in_bits() const noexcept { return size_ * sizeof(Word) * 8; }

 private:
  uint64_t size_ = 0;
  unsigned probe_limit_ = 0;
  std::unique_ptr<std::atomic<Word>[]> buckets_;
};

}  // namespace amqf
