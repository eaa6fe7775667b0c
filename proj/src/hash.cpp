#include "amqf/hash.hpp"

#include <string>

namespace amqf {

Fingerprint fingerprint(uint64_t key, uint64_t seed, unsigned bits) {
  if (bits < 1 || bits > 64) {
    throw ParameterError("fingerprint width must be in [1, 64], got " + std::to_string(bits));
  }
  return {mix64(key ^ seed) & low_mask(bits), bits};
}

QuotRem split(Fingerprint fp, unsigned quotient_bits) {
  if (quotient_bits > fp.bits) {
    throw ParameterError("quotient bits (" + std::to_string(quotient_bits) +
                         ") exceed fingerprint bits (" + std::to_string(fp.bits) + ")");
  }
  const unsigned r = fp.bits - quotient_bits;
  const uint64_t quotient = r >= 64 ? 0 : fp.value >> r;
  return {quotient, fp.value & low_mask(r), quotient_bits, r};
}

BlockPair potc_pair(Fingerprint fp, uint64_t num_blocks) {
  if (num_blocks == 0) throw ParameterError("potc_pair: num_blocks must be >= 1");
  return {mix64_a(fp.value) % num_blocks, mix64_b(fp.value) % num_blocks};
}

SlotLayout::SlotLayout(unsigned word_bits, unsigned tag_bits)
    : word_bits_(word_bits), tag_bits_(tag_bits) {
  if (word_bits != 8 && word_bits != 16 && word_bits != 32) {
    throw ParameterError("slot width must be 8, 16 or 32 bits, got " + std::to_string(word_bits));
  }
  // Two bits are the minimum for the sentinel remap to have somewhere to go.
  if (tag_bits < 2 || tag_bits > word_bits) {
    throw ParameterError("tag bits must be in [2, " + std::to_string(word_bits) + "], got " +
                         std::to_string(tag_bits));
  }
}

uint64_t SlotLayout::pack(uint64_t tag, uint64_t value) const {
  if (tag > tag_mask()) throw ParameterError("tag does not fit in " + std::to_string(tag_bits_) + " bits");
  if (value > low_mask(value_bits())) {
    throw ParameterError("value does not fit in " + std::to_string(value_bits()) + " bits");
  }
  const uint64_t word = remap_tag(tag);
  return value_bits() == 0 ? word : word | (value << tag_bits_);
}

}  // namespace amqf
