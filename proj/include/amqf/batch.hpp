#pragma once

// Batch preparation shared by the bulk filters: sorting hashed batches,
// marking per-bucket boundaries, and collapsing duplicates.

#include <cstdint>
#include <span>
#include <vector>

namespace amqf {

/// In-place ascending sort of 64-bit values.
void sort_values(std::span<uint64_t> values);

/// For a sorted array and `buckets` equal-width buckets of `1 << shift`
/// values each, returns buckets + 1 indices where entry b is the index of
/// the first element >= (b << shift), found by successor search. The final
/// entry equals values.size().
std::vector<size_t> successor_boundaries(std::span<const uint64_t> sorted, size_t buckets,
                                         unsigned shift);

struct ValueCount {
  uint64_t value = 0;
  uint64_t count = 0;

  friend bool operator==(const ValueCount&, const ValueCount&) = default;
};

/// Run-length reduces an ascending array to distinct (value, multiplicity)
/// pairs.
std::vector<ValueCount> run_length_reduce(std::span<const uint64_t> sorted);

/// Distinct values of `values` with their multiplicities, ascending; counts
/// sum to values.size().
std::vector<ValueCount> reduce_duplicates(std::span<const uint64_t> values);

}  // namespace amqf
