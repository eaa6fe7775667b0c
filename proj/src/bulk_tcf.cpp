#include "amqf/bulk_tcf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "amqf/parallel.hpp"

namespace amqf {

void BulkTcfParams::validate() const {
  if (num_blocks == 0 || !std::has_single_bit(num_blocks)) {
    throw ParameterError("num_blocks must be a power of two, got " + std::to_string(num_blocks));
  }
  if (block_size == 0 || block_size > 0xffff) throw ParameterError("block_size must lie in [1, 65535]");
  SlotLayout layout(kSlotBits, tag_bits);
  if (!(shortcut_threshold > 0.0 && shortcut_threshold < 1.0)) {
    throw ParameterError("shortcut_threshold must lie in (0, 1)");
  }
  if (backing && !(backing_ratio > 0.0)) throw ParameterError("backing_ratio must be positive");
  if (backing && backing_probe_limit == 0) throw ParameterError("backing_probe_limit must be positive");
}

uint64_t BulkTcfParams::backing_buckets() const noexcept {
  if (!backing) return 0;
  return static_cast<uint64_t>(std::ceil(static_cast<double>(capacity()) * backing_ratio));
}

BatchPartition partition_batch(std::span<const uint64_t> keys, const BulkTcfParams& params) {
  const SlotLayout layout(BulkTcfParams::kSlotBits, params.tag_bits);
  const uint64_t mask = params.num_blocks - 1;
  BatchPartition part;
  part.items.reserve(keys.size());
  for (const uint64_t key : keys) {
    const uint64_t fp = fingerprint(key, params.seed, 64).value;
    part.items.push_back({mix64_a(fp) & mask, layout.tag_of(fp), fp});
  }
  std::sort(part.items.begin(), part.items.end());
  part.boundaries.resize(params.num_blocks + 1);
  for (uint64_t b = 0; b <= params.num_blocks; ++b) {
    part.boundaries[b] = static_cast<size_t>(
        std::partition_point(part.items.begin(), part.items.end(), [b](const BatchItem& x) { return x.block < b; }) -
        part.items.begin());
  }
  return part;
}

std::optional<size_t> merge_block(std::span<const uint16_t> existing, std::span<const uint16_t> shortcut,
                                  std::span<const uint16_t> potc, std::span<uint16_t> out) {
  const size_t total = existing.size() + shortcut.size() + potc.size();
  if (total > out.size()) return std::nullopt;
  // `existing` may alias the front of `out`, so merge from the back.
  size_t a = existing.size(), b = shortcut.size(), c = potc.size();
  for (size_t k = total; k-- > 0;) {
    uint16_t best = 0;
    int from = -1;
    if (a > 0) best = existing[a - 1], from = 0;
    if (b > 0 && (from < 0 || shortcut[b - 1] > best)) best = shortcut[b - 1], from = 1;
    if (c > 0 && (from < 0 || potc[c - 1] > best)) best = potc[c - 1], from = 2;
    out[k] = best;
    (from == 0 ? a : from == 1 ? b : c)--;
  }
  return total;
}

BulkTcf::BulkTcf(const BulkTcfParams& params)
    : params_((params.validate(), params)),
      layout_(BulkTcfParams::kSlotBits, params.tag_bits),
      slots_(params.capacity(), static_cast<uint16_t>(kEmptyWord)),
      fill_(params.num_blocks, 0),
      backing_(params.backing_buckets(), params.backing_probe_limit) {}

BlockPair BulkTcf::block_pair(uint64_t fp) const noexcept {
  const uint64_t mask = params_.num_blocks - 1;
  return {mix64_a(fp) & mask, mix64_b(fp) & mask};
}

BulkInsertStats BulkTcf::bulk_insert(std::span<const uint64_t> keys, unsigned workers) {
  const BatchPartition part = partition_batch(keys, params_);
  const uint64_t nb = params_.num_blocks;
  const unsigned bsize = params_.block_size;
  const auto cutoff = static_cast<unsigned>(std::ceil(params_.shortcut_threshold * bsize));

  // Phase 1: how many of each block's own items take the shortcut, and the
  // fill every block will have once they do.
  std::vector<uint32_t> shortcut_count(nb), projected(nb);
  parallel_for(nb, workers, [&](size_t lo, size_t hi, unsigned) {
    for (size_t b = lo; b < hi; ++b) {
      const size_t listed = part.boundaries[b + 1] - part.boundaries[b];
      const uint32_t room = fill_[b] < cutoff ? cutoff - fill_[b] : 0;
      shortcut_count[b] = static_cast<uint32_t>(std::min<size_t>(listed, room));
      projected[b] = fill_[b] + shortcut_count[b];
    }
  });

  // Phase 2: the rest choose the less loaded of their two blocks (ties go to
  // the primary) and are regrouped by destination.
  std::vector<BatchItem> routed;
  for (uint64_t b = 0; b < nb; ++b) {
    for (size_t i = part.boundaries[b] + shortcut_count[b]; i < part.boundaries[b + 1]; ++i) {
      const BatchItem& item = part.items[i];
      const uint64_t secondary = block_pair(item.fp).secondary;
      const uint64_t dest = projected[secondary] < projected[item.block] ? secondary : item.block;
      routed.push_back({dest, item.word, item.fp});
    }
  }
  std::sort(routed.begin(), routed.end());
  std::vector<size_t> routed_bounds(nb + 1);
  for (uint64_t b = 0; b <= nb; ++b) {
    routed_bounds[b] = static_cast<size_t>(
        std::partition_point(routed.begin(), routed.end(), [b](const BatchItem& x) { return x.block < b; }) -
        routed.begin());
  }

  // Phase 3: every block merges its three lists once. Items beyond the
  // block's capacity are left for the overflow pass.
  std::vector<uint32_t> accepted(nb);
  parallel_for(nb, workers, [&](size_t lo, size_t hi, unsigned) {
    std::vector<uint16_t> shortcut, potc;
    for (size_t b = lo; b < hi; ++b) {
      shortcut.clear();
      potc.clear();
      for (size_t i = part.boundaries[b]; i < part.boundaries[b] + shortcut_count[b]; ++i) {
        shortcut.push_back(static_cast<uint16_t>(part.items[i].word));
      }
      const size_t offered = routed_bounds[b + 1] - routed_bounds[b];
      accepted[b] = static_cast<uint32_t>(std::min<size_t>(offered, bsize - projected[b]));
      for (size_t i = routed_bounds[b]; i < routed_bounds[b] + accepted[b]; ++i) {
        potc.push_back(static_cast<uint16_t>(routed[i].word));
      }
      if (shortcut.empty() && potc.empty()) continue;
      const std::span<uint16_t> out(slots_.data() + b * bsize, bsize);
      const auto merged = merge_block(out.first(fill_[b]), shortcut, potc, out);
      fill_[b] = static_cast<uint16_t>(*merged);
    }
  });

  BulkInsertStats stats;
  for (uint64_t b = 0; b < nb; ++b) {
    stats.direct += shortcut_count[b];
    stats.potc += accepted[b];
  }
  // Overflow pass: the other candidate block, then the backing table.
  for (uint64_t b = 0; b < nb; ++b) {
    for (size_t i = routed_bounds[b] + accepted[b]; i < routed_bounds[b + 1]; ++i) {
      const BatchItem& item = routed[i];
      const BlockPair pair = block_pair(item.fp);
      const uint64_t other = item.block == pair.primary ? pair.secondary : pair.primary;
      const auto word = static_cast<uint16_t>(item.word);
      if (insert_sorted(other, word)) {
        ++stats.potc;
      } else if (backing_.size() > 0 && backing_.insert(item.fp, word)) {
        ++stats.backing;
      } else {
        ++stats.failed;
      }
    }
  }
  inserted_ += stats.direct + stats.potc + stats.backing;
  return stats;
}

bool BulkTcf::find_in_block(uint64_t block, uint16_t word) const noexcept {
  const auto items = this->block(block);
  return std::binary_search(items.begin(), items.end(), word);
}

bool BulkTcf::contains(uint64_t key) const {
  const uint64_t fp = fingerprint(key, params_.seed, 64).value;
  const auto word = static_cast<uint16_t>(layout_.tag_of(fp));
  const BlockPair pair = block_pair(fp);
  return find_in_block(pair.primary, word) || find_in_block(pair.secondary, word) ||
         (backing_.size() > 0 && backing_.find(fp, word, layout_.tag_mask()).has_value());
}

std::vector<uint8_t> BulkTcf::bulk_query(std::span<const uint64_t> keys, unsigned workers) const {
  std::vector<uint8_t> found(keys.size());
  parallel_for(keys.size(), workers, [&](size_t lo, size_t hi, unsigned) {
    for (size_t i = lo; i < hi; ++i) found[i] = contains(keys[i]);
  });
  return found;
}

bool BulkTcf::insert_sorted(uint64_t block, uint16_t word) {
  if (fill_[block] >= params_.block_size) return false;
  uint16_t* begin = slots_.data() + block * params_.block_size;
  uint16_t* end = begin + fill_[block];
  uint16_t* at = std::upper_bound(begin, end, word);
  std::copy_backward(at, end, end + 1);
  *at = word;
  ++fill_[block];
  return true;
}

bool BulkTcf::erase_from_block(uint64_t block, uint16_t word) {
  uint16_t* begin = slots_.data() + block * params_.block_size;
  uint16_t* end = begin + fill_[block];
  uint16_t* at = std::lower_bound(begin, end, word);
  if (at == end || *at != word) return false;
  std::copy(at + 1, end, at);
  *(end - 1) = static_cast<uint16_t>(kEmptyWord);
  --fill_[block];
  return true;
}

uint64_t BulkTcf::bulk_erase(std::span<const uint64_t> keys) {
  uint64_t removed = 0;
  for (const uint64_t key : keys) {
    const uint64_t fp = fingerprint(key, params_.seed, 64).value;
    const auto word = static_cast<uint16_t>(layout_.tag_of(fp));
    const BlockPair pair = block_pair(fp);
    removed += erase_from_block(pair.primary, word) ||
               (pair.secondary != pair.primary && erase_from_block(pair.secondary, word)) ||
               (backing_.size() > 0 && backing_.erase(fp, word, layout_.tag_mask()));
  }
  erased_ += removed;
  return removed;
}

std::vector<TcfEntry> BulkTcf::enumerate() const {
  std::vector<TcfEntry> out;
  for (uint64_t b = 0; b < params_.num_blocks; ++b) {
    for (const uint16_t w : block(b)) out.push_back({false, b, layout_.unpack(w).first, 0});
  }
  for (uint64_t i = 0; i < backing_.size(); ++i) {
    const uint16_t w = backing_.load(i);
    if (w > kTombstoneWord) out.push_back({true, i, layout_.unpack(w).first, 0});
  }
  return out;
}

double BulkTcf::load_factor() const {
  uint64_t used = 0;
  for (const uint16_t f : fill_) used += f;
  return static_cast<double>(used) / static_cast<double>(params_.capacity());
}

uint64_t BulkTcf::size_in_bits() const noexcept {
  return (slots_.size() + fill_.size()) * 16 + backing_.size_in_bits();
}

void BulkTcf::validate() const {
  uint64_t stored = 0;
  for (uint64_t b = 0; b < params_.num_blocks; ++b) {
    if (fill_[b] > params_.block_size) throw InvariantViolation("block " + std::to_string(b) + " overfilled");
    const uint16_t* begin = slots_.data() + b * params_.block_size;
    for (unsigned i = 0; i < params_.block_size; ++i) {
      const bool live = i < fill_[b];
      if (live && begin[i] <= kTombstoneWord) {
        throw InvariantViolation("block " + std::to_string(b) + " has a sentinel inside its sorted prefix");
      }
      if (!live && begin[i] != kEmptyWord) {
        throw InvariantViolation("block " + std::to_string(b) + " has data past its fill");
      }
      if (live && i > 0 && begin[i - 1] > begin[i]) {
        throw InvariantViolation("block " + std::to_string(b) + " is not sorted");
      }
    }
    stored += fill_[b];
  }
  stored += backing_.occupied();
  if (stored != inserted_ - erased_) {
    throw InvariantViolation("stored " + std::to_string(stored) + " entries but counters give " +
                             std::to_string(inserted_ - erased_));
  }
}

}  // namespace amqf
