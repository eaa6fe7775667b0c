#pragma once

// Reproducible key streams for benchmarks and tests.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amqf/hash.hpp"

namespace amqf {

/// Counter-based 64-bit generator: the i-th output is mix64 of the i-th
/// point on a Weyl sequence.
class SplitMix64 {
 public:
  using result_type = uint64_t;

  explicit SplitMix64(uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<uint64_t>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

enum class Distribution { uniform, ur_count, zipf, kmer };

/// Accepts "uniform", "ur-count" (or "ur_count"), "zipf", "kmer".
Distribution parse_distribution(std::string_view name);
std::string_view to_string(Distribution dist) noexcept;

struct WorkloadSpec {
  Distribution dist = Distribution::uniform;
  uint64_t n = 0;  ///< stream length; for kmer, 0 keeps every window
  uint64_t seed = 1;
  double zipf_s = 1.5;
  uint64_t count_max = 100;
  unsigned kmer_k = 28;
  uint64_t universe = 0;  ///< zipf rank range; 0 means n
  std::string kmer_file;
};

/// Throws ParameterError on bad parameters and InputError on unreadable or
/// unusable k-mer input.
std::vector<uint64_t> gen_keys(const WorkloadSpec& spec);

/// n keys from the seed's uniform stream.
std::vector<uint64_t> uniform_keys(uint64_t n, uint64_t seed);

struct CountedWorkload {
  std::vector<uint64_t> bases;
  std::vector<uint64_t> counts;  ///< counts[i] copies of bases[i]
  std::vector<uint64_t> stream;  ///< all copies, shuffled
};

/// `distinct` uniform bases, each repeated Uniform{1..count_max} times.
CountedWorkload ur_count_workload(uint64_t distinct, uint64_t count_max, uint64_t seed);

/// Zipf sampler over ranks 1..n with P(i) proportional to i^-s, using
/// rejection-inversion.
class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double s);

  template <class Rng>
  uint64_t operator()(Rng& rng) const {
    while (true) {
      const double u = h_integral_n_ + rng.uniform() * (h_integral_x1_ - h_integral_n_);
      const double x = h_integral_inverse(u);
      double k = std::floor(x + 0.5);
      if (k < 1) k = 1;
      if (k > n_) k = n_;
      if (k - x <= squeeze_ || u >= h_integral(k + 0.5) - h(k)) return static_cast<uint64_t>(k);
    }
  }

 private:
  double h(double x) const;
  double h_integral(double x) const;
  double h_integral_inverse(double x) const;

  double n_;
  double s_;
  double h_integral_x1_;
  double h_integral_n_;
  double squeeze_;
};

/// n Zipf ranks in [1, universe].
std::vector<uint64_t> zipf_ranks(uint64_t n, uint64_t universe, double s, uint64_t seed);

/// Key assigned to a Zipf rank; distinct ranks give distinct keys.
uint64_t zipf_key(uint64_t rank, uint64_t seed) noexcept;

/// Every k-length window of the sequences in FASTA or FASTQ text, 2-bit
/// encoded (A=0, C=1, G=2, T=3, case-insensitive). Windows containing any
/// other character are skipped. Throws InputError if no sequence is at least
/// k bases long and ParameterError unless 1 <= k <= 32.
std::vector<uint64_t> kmers_from_stream(std::istream& in, unsigned k);
std::vector<uint64_t> kmers_from_file(const std::string& path, unsigned k);

/// Query keys for false-positive measurement, drawn from a stream disjoint
/// from uniform_keys(…, seed).
std::vector<uint64_t> fpr_query_keys(uint64_t m, uint64_t seed);

/// Fraction of nonzero answers.
double positive_fraction(std::span<const uint8_t> answers) noexcept;

/// Fraction of m disjoint-stream keys for which contains(key) is true.
template <class Contains>
double measure_fpr(Contains&& contains, uint64_t m, uint64_t seed) {
  if (m == 0) return 0.0;
  uint64_t positives = 0;
  for (const uint64_t key : fpr_query_keys(m, seed)) positives += contains(key) ? 1 : 0;
  return static_cast<double>(positives) / static_cast<double>(m);
}

}  // namespace amqf
