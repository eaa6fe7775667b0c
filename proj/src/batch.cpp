#include "amqf/batch.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <boost/sort/pdqsort/pdqsort.hpp>

namespace amqf {

void sort_values(std::span<uint64_t> values) {
  boost::sort::pdqsort(values.begin(), values.end());
}

std::vector<size_t> successor_boundaries(std::span<const uint64_t> sorted, size_t buckets,
                                         unsigned shift) {
  std::vector<size_t> bounds(buckets + 1, sorted.size());
  for (size_t b = 0; b < buckets; ++b) {
    const uint64_t lo = shift >= 64 ? 0 : (uint64_t{b} << shift);
    bounds[b] = static_cast<size_t>(std::lower_bound(sorted.begin(), sorted.end(), lo) - sorted.begin());
  }
  return bounds;
}

std::vector<ValueCount> run_length_reduce(std::span<const uint64_t> sorted) {
  std::vector<ValueCount> out;
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.push_back({sorted[i], j - i});
    i = j;
  }
  return out;
}

std::vector<ValueCount> reduce_duplicates(std::span<const uint64_t> values) {
  // Heavily repeated inputs are cheaper to combine in a hash table and sort
  // only the distinct values; the first kSample values decide.
  constexpr size_t kSample = 1 << 14;
  if (values.size() > kSample) {
    absl::flat_hash_map<uint64_t, uint64_t> sample;
    for (size_t i = 0; i < kSample; ++i) ++sample[values[i]];
    if (sample.size() * 4 <= kSample) {
      for (size_t i = kSample; i < values.size(); ++i) ++sample[values[i]];
      std::vector<ValueCount> out;
      out.reserve(sample.size());
      for (const auto& [value, count] : sample) out.push_back({value, count});
      boost::sort::pdqsort(out.begin(), out.end(),
                           [](const ValueCount& a, const ValueCount& b) { return a.value < b.value; });
      return out;
    }
  }
  std::vector<uint64_t> sorted(values.begin(), values.end());
  sort_values(sorted);
  return run_length_reduce(sorted);
}

}  // namespace amqf
