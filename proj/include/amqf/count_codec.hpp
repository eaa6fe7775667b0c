#pragma once

// Variable-length counters for the quotient filter.
//
// A distinct fingerprint occupies a "count group" inside its run. With head
// remainder x and r-bit slots:
//
//   count 1        [x]
//   count 2        [x, x]
//   count >= 3     [x, D..., x]          (x > 0)
//                  [0, 0, 0, D..., 0]    (x == 0)
//
// D holds count - 2 in base 2^r - 1, most significant digit first. A digit d
// is stored as d when d < x and as d + 1 otherwise, so no digit slot equals x.
// For x > 0 a leading zero digit is added whenever the first stored digit
// would be >= x. That makes every group self-delimiting inside a run whose
// heads are strictly increasing: after a head x, a slot equal to x closes a
// count-2 group, a slot greater than x is the next head, and a slot less than
// x opens a digit string that ends at the next x.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amqf/error.hpp"
#include "amqf/hash.hpp"

namespace amqf {

struct DecodedGroup {
  uint64_t remainder = 0;
  uint64_t count = 0;
  size_t length = 0;  ///< slots used

  friend bool operator==(const DecodedGroup&, const DecodedGroup&) = default;
};

namespace codec_detail {

inline uint64_t digit_base(unsigned r) noexcept { return low_mask(r); }  // 2^r - 1

/// Digits of v in base 2^r - 1, most significant first. v >= 1.
inline void digits_msf(uint64_t v, unsigned r, std::vector<uint64_t>& out) {
  const uint64_t base = digit_base(r);
  const size_t start = out.size();
  do {
    out.push_back(v % base);
    v /= base;
  } while (v != 0);
  std::reverse(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
}

}  // namespace codec_detail

/// Appends the encoding of (rem, count) to `out`. count >= 1.
template <class Slot>
void encode_group(uint64_t rem, uint64_t count, unsigned r, std::vector<Slot>& out) {
  if (count == 0) throw ParameterError("count group must hold at least one item");
  out.push_back(static_cast<Slot>(rem));
  if (count == 1) return;
  if (count == 2) {
    out.push_back(static_cast<Slot>(rem));
    return;
  }
  thread_local std::vector<uint64_t> digits;
  digits.clear();
  codec_detail::digits_msf(count - 2, r, digits);
  if (rem == 0) {
    out.push_back(0);
    out.push_back(0);
    for (const uint64_t d : digits) out.push_back(static_cast<Slot>(d + 1));
    out.push_back(0);
    return;
  }
  const auto stored = [rem](uint64_t d) { return d < rem ? d : d + 1; };
  if (stored(digits.front()) >= rem) out.push_back(0);
  for (const uint64_t d : digits) out.push_back(static_cast<Slot>(stored(d)));
  out.push_back(static_cast<Slot>(rem));
}

inline size_t encoded_length(uint64_t rem, uint64_t count, unsigned r) {
  if (count <= 2) return static_cast<size_t>(count);
  thread_local std::vector<uint64_t> digits;
  digits.clear();
  codec_detail::digits_msf(count - 2, r, digits);
  if (rem == 0) return digits.size() + 4;
  const uint64_t first = digits.front() < rem ? digits.front() : digits.front() + 1;
  return digits.size() + 2 + (first >= rem ? 1 : 0);
}

/// Decodes the group at the front of `run`, which must extend to the end of
/// the run. Throws InvariantViolation on a malformed encoding.
template <class Slot>
DecodedGroup decode_group(std::span<const Slot> run, unsigned r) {
  if (run.empty()) throw InvariantViolation("decode_group: empty run");
  const uint64_t x = run[0];
  if (run.size() == 1) return {x, 1, 1};
  const uint64_t y = run[1];
  size_t digits_begin = 0;
  if (x == 0) {
    if (y != 0) return {x, 1, 1};
    if (run.size() == 2 || run[2] != 0) return {x, 2, 2};
    digits_begin = 3;
  } else {
    if (y == x) return {x, 2, 2};
    if (y > x) return {x, 1, 1};
    digits_begin = 1;
  }
  const uint64_t base = codec_detail::digit_base(r);
  unsigned __int128 value = 0;
  for (size_t i = digits_begin; i < run.size(); ++i) {
    const uint64_t s = run[i];
    if (s == x) {
      if (i == digits_begin) break;
      value += 2;
      if (value > ~uint64_t{0}) break;
      return {x, static_cast<uint64_t>(value), i + 1};
    }
    const uint64_t d = s < x ? s : s - 1;
    value = value * base + d;
    if (value > ~uint64_t{0}) break;
  }
  throw InvariantViolation("malformed count group for remainder " + std::to_string(x));
}

/// Parses a whole run into its groups.
template <class Slot>
std::vector<DecodedGroup> decode_run(std::span<const Slot> run, unsigned r) {
  std::vector<DecodedGroup> groups;
  for (size_t at = 0; at < run.size();) {
    DecodedGroup g = decode_group(run.subspan(at), r);
    at += g.length;
    groups.push_back(g);
  }
  return groups;
}

}  // namespace amqf
