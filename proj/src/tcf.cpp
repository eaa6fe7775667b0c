#include "amqf/tcf.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <string>

#include "amqf/backing_table.hpp"

namespace amqf {

void TcfParams::validate() const {
  if (num_blocks == 0 || !std::has_single_bit(num_blocks)) {
    throw ParameterError("num_blocks must be a power of two, got " + std::to_string(num_blocks));
  }
  if (block_size == 0) throw ParameterError("block_size must be positive");
  SlotLayout layout(slot_bits, tag_bits);
  if (static_cast<uint64_t>(block_size) * slot_bits > kMaxBlockBits) {
    throw ParameterError("block of " + std::to_string(block_size) + " x " + std::to_string(slot_bits) +
                         "-bit slots exceeds the 128-byte cache line");
  }
  if (!(shortcut_threshold > 0.0 && shortcut_threshold < 1.0)) {
    throw ParameterError("shortcut_threshold must lie in (0, 1)");
  }
  if (backing && !(backing_ratio > 0.0)) throw ParameterError("backing_ratio must be positive");
  if (backing && backing_probe_limit == 0) throw ParameterError("backing_probe_limit must be positive");
  if (group_width == 0 || group_width > 32) throw ParameterError("group_width must lie in [1, 32]");
}

uint64_t TcfParams::backing_buckets() const noexcept {
  if (!backing) return 0;
  return static_cast<uint64_t>(std::ceil(static_cast<double>(capacity()) * backing_ratio));
}

std::string_view to_string(InsertOutcome outcome) noexcept {
  switch (outcome) {
    case InsertOutcome::primary: return "primary";
    case InsertOutcome::secondary: return "secondary";
    case InsertOutcome::backing: return "backing";
    case InsertOutcome::full: return "full";
  }
  return "?";
}

namespace {

template <class Word>
class BasicTcf final : public Tcf {
 public:
  explicit BasicTcf(const TcfParams& params)
      : params_(params),
        layout_(params.slot_bits, params.tag_bits),
        block_mask_(params.num_blocks - 1),
        slots_(new std::atomic<Word>[params.capacity()]),
        backing_(params.backing_buckets(), params.backing_probe_limit) {
    for (uint64_t i = 0; i < params_.capacity(); ++i) slots_[i].store(0, std::memory_order_relaxed);
    shortcut_fill_ = static_cast<unsigned>(std::ceil(params_.shortcut_threshold * params_.block_size));
  }

  const TcfParams& params() const noexcept override { return params_; }
  const SlotLayout& layout() const noexcept override { return layout_; }

  bool block_insert(uint64_t block, uint64_t word) override {
    std::atomic<Word>* slots = block_slots(block);
    const unsigned width = params_.group_width;
    Word observed[32];
    // One round per group of `width` slots: every lane loads its slot, the
    // lanes that saw a free slot form a ballot, and the lowest lane in the
    // ballot tries its compare-exchange first.
    for (unsigned base = 0; base < params_.block_size; base += width) {
      const unsigned lanes = std::min(width, params_.block_size - base);
      uint32_t ballot = 0;
      for (unsigned lane = 0; lane < lanes; ++lane) {
        observed[lane] = slots[base + lane].load(std::memory_order_relaxed);
        if (observed[lane] <= kTombstoneWord) ballot |= uint32_t{1} << lane;
      }
      while (ballot != 0) {
        const unsigned leader = static_cast<unsigned>(std::countr_zero(ballot));
        Word expected = observed[leader];
        if (slots[base + leader].compare_exchange_strong(expected, static_cast<Word>(word),
                                                         std::memory_order_acq_rel)) {
          return true;
        }
        ballot &= ballot - 1;
      }
    }
    return false;
  }

  InsertOutcome insert(uint64_t key, uint64_t value) override {
    const Fingerprint fp = fingerprint(key, params_.seed, 64);
    const uint64_t word = layout_.pack(fp.value & layout_.tag_mask(), value);
    const BlockPair blocks = block_pair(fp);
    const InsertOutcome outcome = place(fp.value, blocks, word);
    if (outcome != InsertOutcome::full) inserted_.fetch_add(1, std::memory_order_relaxed);
    if (outcome == InsertOutcome::backing) backing_items_.fetch_add(1, std::memory_order_relaxed);
    return outcome;
  }

  std::optional<uint64_t> query(uint64_t key) const override {
    const Fingerprint fp = fingerprint(key, params_.seed, 64);
    const uint64_t tag = layout_.tag_of(fp.value);
    const BlockPair blocks = block_pair(fp);
    if (auto hit = find_in_block(blocks.primary, tag)) return layout_.unpack(*hit).second;
    if (blocks.secondary != blocks.primary) {
      if (auto hit = find_in_block(blocks.secondary, tag)) return layout_.unpack(*hit).second;
    }
    if (backing_.size() > 0) {
      if (auto hit = backing_.find(fp.value, tag, layout_.tag_mask())) return layout_.unpack(*hit).second;
    }
    return std::nullopt;
  }

  bool erase(uint64_t key) override {
    const Fingerprint fp = fingerprint(key, params_.seed, 64);
    const uint64_t tag = layout_.tag_of(fp.value);
    const BlockPair blocks = block_pair(fp);
    bool removed = erase_in_block(blocks.primary, tag) ||
                   (blocks.secondary != blocks.primary && erase_in_block(blocks.secondary, tag)) ||
                   (backing_.size() > 0 && backing_.erase(fp.value, tag, layout_.tag_mask()));
    if (removed) erased_.fetch_add(1, std::memory_order_relaxed);
    return removed;
  }

  std::vector<TcfEntry> enumerate() const override {
    std::vector<TcfEntry> out;
    for (uint64_t b = 0; b < params_.num_blocks; ++b) {
      for (unsigned i = 0; i < params_.block_size; ++i) {
        const uint64_t w = word_at(b, i);
        if (w > kTombstoneWord) {
          auto [tag, value] = layout_.unpack(w);
          out.push_back({false, b, tag, value});
        }
      }
    }
    for (uint64_t i = 0; i < backing_.size(); ++i) {
      const uint64_t w = backing_.load(i);
      if (w > kTombstoneWord) {
        auto [tag, value] = layout_.unpack(w);
        out.push_back({true, i, tag, value});
      }
    }
    return out;
  }

  double load_factor() const override {
    uint64_t used = 0;
    for (uint64_t b = 0; b < params_.num_blocks; ++b) used += occupancy(b);
    return static_cast<double>(used) / static_cast<double>(params_.capacity());
  }

  unsigned occupancy(uint64_t block) const override {
    const std::atomic<Word>* slots = block_slots(block);
    unsigned n = 0;
    for (unsigned i = 0; i < params_.block_size; ++i) {
      n += slots[i].load(std::memory_order_relaxed) > kTombstoneWord;
    }
    return n;
  }

  uint64_t word_at(uint64_t block, unsigned slot) const override {
    return block_slots(block)[slot].load(std::memory_order_relaxed);
  }

  uint64_t backing_buckets() const noexcept override { return backing_.size(); }
  uint64_t backing_occupied() const override { return backing_.occupied(); }

  TcfStats stats() const noexcept override {
    return {inserted_.load(), backing_items_.load(), erased_.load()};
  }

  uint64_t size_in_bits() const noexcept override {
    return params_.capacity() * sizeof(Word) * 8 + backing_.size_in_bits();
  }

  void validate() const override {
    uint64_t stored = 0;
    for (uint64_t b = 0; b < params_.num_blocks; ++b) {
      for (unsigned i = 0; i < params_.block_size; ++i) {
        const uint64_t w = word_at(b, i);
        if (w <= kTombstoneWord) continue;
        if ((w & layout_.tag_mask()) <= kTombstoneWord) {
          throw InvariantViolation("block " + std::to_string(b) + " slot " + std::to_string(i) +
                                   " holds an unremapped tag");
        }
        ++stored;
      }
    }
    for (uint64_t i = 0; i < backing_.size(); ++i) {
      const uint64_t w = backing_.load(i);
      if (w <= kTombstoneWord) continue;
      if ((w & layout_.tag_mask()) <= kTombstoneWord) {
        throw InvariantViolation("backing bucket " + std::to_string(i) + " holds an unremapped tag");
      }
      ++stored;
    }
    const TcfStats s = stats();
    if (s.backing_items > s.inserted) throw InvariantViolation("backing items exceed inserted items");
    if (stored != s.inserted - s.erased) {
      throw InvariantViolation("stored " + std::to_string(stored) + " entries but counters give " +
                               std::to_string(s.inserted - s.erased));
    }
  }

 private:
  BlockPair block_pair(Fingerprint fp) const noexcept {
    return {mix64_a(fp.value) & block_mask_, mix64_b(fp.value) & block_mask_};
  }

  std::atomic<Word>* block_slots(uint64_t block) const noexcept {
    return slots_.get() + block * params_.block_size;
  }

  InsertOutcome place(uint64_t fp, BlockPair blocks, uint64_t word) {
    if (params_.shortcut && occupancy(blocks.primary) < shortcut_fill_ && block_insert(blocks.primary, word)) {
      return InsertOutcome::primary;
    }
    const bool prefer_secondary = occupancy(blocks.secondary) < occupancy(blocks.primary);
    const uint64_t first = prefer_secondary ? blocks.secondary : blocks.primary;
    const uint64_t second = prefer_secondary ? blocks.primary : blocks.secondary;
    if (block_insert(first, word)) return prefer_secondary ? InsertOutcome::secondary : InsertOutcome::primary;
    if (second != first && block_insert(second, word)) {
      return prefer_secondary ? InsertOutcome::primary : InsertOutcome::secondary;
    }
    if (backing_.size() > 0 && backing_.insert(fp, static_cast<Word>(word))) return InsertOutcome::backing;
    return InsertOutcome::full;
  }

  std::optional<Word> find_in_block(uint64_t block, uint64_t tag) const noexcept {
    const std::atomic<Word>* slots = block_slots(block);
    const uint64_t mask = layout_.tag_mask();
    for (unsigned i = 0; i < params_.block_size; ++i) {
      const Word w = slots[i].load(std::memory_order_acquire);
      if (w > kTombstoneWord && (w & mask) == tag) return w;
    }
    return std::nullopt;
  }

  bool erase_in_block(uint64_t block, uint64_t tag) noexcept {
    std::atomic<Word>* slots = block_slots(block);
    const uint64_t mask = layout_.tag_mask();
    for (unsigned i = 0; i < params_.block_size; ++i) {
      Word w = slots[i].load(std::memory_order_acquire);
      while (w > kTombstoneWord && (w & mask) == tag) {
        if (slots[i].compare_exchange_weak(w, static_cast<Word>(kTombstoneWord), std::memory_order_acq_rel)) {
          return true;
        }
      }
    }
    return false;
  }

  TcfParams params_;
  SlotLayout layout_;
  uint64_t block_mask_;
  unsigned shortcut_fill_ = 0;
  std::unique_ptr<std::atomic<Word>[]> slots_;
  BackingTable<Word> backing_;
  std::atomic<uint64_t> inserted_{0};
  std::atomic<uint64_t> backing_items_{0};
  std::atomic<uint64_t> erased_{0};
};

}  // namespace

std::unique_ptr<Tcf> Tcf::create(const TcfParams& params) {
  params.validate();
  switch (params.slot_bits) {
    case 8: return std::make_unique<BasicTcf<uint8_t>>(params);
    case 16: return std::make_unique<BasicTcf<uint16_t>>(params);
    default: return std::make_unique<BasicTcf<uint32_t>>(params);
  }
}

}  // namespace amqf
