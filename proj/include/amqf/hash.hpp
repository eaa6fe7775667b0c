#pragma once

// Fingerprinting and the bit-level helpers shared by both filter families.

#include <cstdint>
#include <utility>

#include "amqf/error.hpp"

namespace amqf {

/// 64-bit xor-shift-multiply finalizer (murmur3 fmix64 constants).
constexpr uint64_t mix64(uint64_t x) noexcept {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

/// Independent finalizers used to derive block choices from a fingerprint.
/// Constants are Stafford's "mix13" and "mix09" variants.
constexpr uint64_t mix64_a(uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr uint64_t mix64_b(uint64_t x) noexcept {
  x ^= x >> 32;
  x *= 0xd6e8feb86659fd93ULL;
  x ^= x >> 32;
  x *= 0xd6e8feb86659fd93ULL;
  x ^= x >> 32;
  return x;
}

constexpr uint64_t low_mask(unsigned bits) noexcept {
  return bits >= 64 ? ~uint64_t{0} : ((uint64_t{1} << bits) - 1);
}

struct Fingerprint {
  uint64_t value = 0;
  unsigned bits = 64;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

/// p-bit fingerprint of `key`: the mixer output of (key ^ seed) truncated to
/// its low `bits` bits. Throws ParameterError unless 1 <= bits <= 64.
Fingerprint fingerprint(uint64_t key, uint64_t seed, unsigned bits);

struct QuotRem {
  uint64_t quotient = 0;
  uint64_t remainder = 0;
  unsigned quotient_bits = 0;
  unsigned remainder_bits = 0;

  /// Reassembles the fingerprint value (quotient << r) | remainder.
  uint64_t join() const noexcept {
    return remainder_bits >= 64 ? remainder : (quotient << remainder_bits) | remainder;
  }

  friend bool operator==(const QuotRem&, const QuotRem&) = default;
};

/// Quotient is the top `quotient_bits` of the fingerprint, remainder the rest.
QuotRem split(Fingerprint fp, unsigned quotient_bits);

struct BlockPair {
  uint64_t primary = 0;
  uint64_t secondary = 0;

  friend bool operator==(const BlockPair&, const BlockPair&) = default;
};

/// The two candidate blocks of a fingerprint. primary == secondary is allowed.
BlockPair potc_pair(Fingerprint fp, uint64_t num_blocks);

inline constexpr uint64_t kEmptyWord = 0;
inline constexpr uint64_t kTombstoneWord = 1;

/// Layout of a TCF slot word: tag in the low `tag_bits`, value above it.
/// The two smallest word values are reserved as EMPTY and TOMBSTONE. Tags 0
/// and 1 have bit 1 forced on (tag |= 2) whatever the value, at insert and
/// query alike, so a packed word is never a sentinel and a query never needs
/// to know the stored value to match.
class SlotLayout {
 public:
  SlotLayout(unsigned word_bits, unsigned tag_bits);

  unsigned word_bits() const noexcept { return word_bits_; }
  unsigned tag_bits() const noexcept { return tag_bits_; }
  unsigned value_bits() const noexcept { return word_bits_ - tag_bits_; }
  uint64_t tag_mask() const noexcept { return low_mask(tag_bits_); }

  static constexpr uint64_t remap_tag(uint64_t tag) noexcept {
    return tag <= kTombstoneWord ? (tag | 2u) : tag;
  }

  /// Throws ParameterError if tag or value do not fit.
  uint64_t pack(uint64_t tag, uint64_t value) const;

  std::pair<uint64_t, uint64_t> unpack(uint64_t word) const noexcept {
    return {word & tag_mask(), value_bits() == 0 ? 0 : word >> tag_bits_};
  }

  /// Remapped tag taken from the low bits of a fingerprint.
  uint64_t tag_of(uint64_t fp_value) const noexcept {
    return remap_tag(fp_value & tag_mask());
  }

 private:
  unsigned word_bits_;
  unsigned tag_bits_;
};

}  // namespace amqf
