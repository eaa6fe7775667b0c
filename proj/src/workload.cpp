#include "amqf/workload.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <random>
#include <string>

#include "amqf/error.hpp"

namespace amqf {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr uint64_t kZipfSalt = 0x6a09e667f3bcc909ULL;

uint64_t stream_start(uint64_t seed) noexcept { return mix64(seed ^ 0xbb67ae8584caa73bULL); }

// The query stream starts 2^62 steps ahead of the uniform stream of the same
// seed. Both are injective images of one Weyl sequence, so they cannot meet
// before either has produced 2^62 keys.
uint64_t fpr_stream_start(uint64_t seed) noexcept { return stream_start(seed) + (kGolden << 62); }

double helper1(double x) {
  return std::abs(x) > 1e-8 ? std::log1p(x) / x : 1 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
}

double helper2(double x) {
  return std::abs(x) > 1e-8 ? std::expm1(x) / x : 1 + x * 0.5 * (1 + x * (1.0 / 3.0) * (1 + 0.25 * x));
}

int base_code(char c) noexcept {
  switch (c) {
    case 'A': case 'a': return 0;
    case 'C': case 'c': return 1;
    case 'G': case 'g': return 2;
    case 'T': case 't': return 3;
    default: return -1;
  }
}

}  // namespace

Distribution parse_distribution(std::string_view name) {
  if (name == "uniform") return Distribution::uniform;
  if (name == "ur-count" || name == "ur_count") return Distribution::ur_count;
  if (name == "zipf") return Distribution::zipf;
  if (name == "kmer") return Distribution::kmer;
  throw ParameterError("unknown distribution: " + std::string(name));
}

std::string_view to_string(Distribution dist) noexcept {
  switch (dist) {
    case Distribution::uniform: return "uniform";
    case Distribution::ur_count: return "ur-count";
    case Distribution::zipf: return "zipf";
    case Distribution::kmer: return "kmer";
  }
  return "unknown";
}

std::vector<uint64_t> uniform_keys(uint64_t n, uint64_t seed) {
  SplitMix64 rng(stream_start(seed));
  std::vector<uint64_t> keys(n);
  for (uint64_t& k : keys) k = rng();
  return keys;
}

std::vector<uint64_t> fpr_query_keys(uint64_t m, uint64_t seed) {
  SplitMix64 rng(fpr_stream_start(seed));
  std::vector<uint64_t> keys(m);
  for (uint64_t& k : keys) k = rng();
  return keys;
}

double positive_fraction(std::span<const uint8_t> answers) noexcept {
  if (answers.empty()) return 0.0;
  const auto positives = std::count_if(answers.begin(), answers.end(), [](uint8_t a) { return a != 0; });
  return static_cast<double>(positives) / static_cast<double>(answers.size());
}

CountedWorkload ur_count_workload(uint64_t distinct, uint64_t count_max, uint64_t seed) {
  if (count_max == 0) throw ParameterError("count_max must be positive");
  CountedWorkload w;
  w.bases = uniform_keys(distinct, seed);
  w.counts.resize(distinct);
  std::mt19937_64 engine(mix64(seed ^ 0x3c6ef372fe94f82bULL));
  std::uniform_int_distribution<uint64_t> count_dist(1, count_max);
  for (uint64_t& c : w.counts) c = count_dist(engine);
  for (uint64_t i = 0; i < distinct; ++i) w.stream.insert(w.stream.end(), w.counts[i], w.bases[i]);
  std::shuffle(w.stream.begin(), w.stream.end(), engine);
  return w;
}

ZipfSampler::ZipfSampler(uint64_t n, double s) : n_(static_cast<double>(n)), s_(s) {
  if (n == 0) throw ParameterError("zipf universe must be non-empty");
  if (!(s > 0.0)) throw ParameterError("zipf exponent must be positive");
  h_integral_x1_ = h_integral(1.5) - 1.0;
  h_integral_n_ = h_integral(n_ + 0.5);
  squeeze_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
}

double ZipfSampler::h(double x) const { return std::exp(-s_ * std::log(x)); }

double ZipfSampler::h_integral(double x) const {
  const double log_x = std::log(x);
  return helper2((1.0 - s_) * log_x) * log_x;
}

double ZipfSampler::h_integral_inverse(double x) const {
  double t = x * (1.0 - s_);
  if (t < -1.0) t = -1.0;
  return std::exp(helper1(t) * x);
}

std::vector<uint64_t> zipf_ranks(uint64_t n, uint64_t universe, double s, uint64_t seed) {
  const ZipfSampler sampler(universe, s);
  SplitMix64 rng(stream_start(seed ^ kZipfSalt));
  std::vector<uint64_t> ranks(n);
  for (uint64_t& r : ranks) r = sampler(rng);
  return ranks;
}

uint64_t zipf_key(uint64_t rank, uint64_t seed) noexcept { return mix64(rank ^ mix64(seed ^ kZipfSalt)); }

std::vector<uint64_t> kmers_from_stream(std::istream& in, unsigned k) {
  if (k == 0 || k > 32) throw ParameterError("k must lie in [1, 32], got " + std::to_string(k));
  const uint64_t mask = low_mask(2 * k);
  std::vector<uint64_t> out;
  bool long_enough = false;
  std::string seq;
  const auto flush = [&] {
    if (seq.size() >= k) long_enough = true;
    uint64_t value = 0;
    unsigned valid = 0;
    for (const char c : seq) {
      const int code = base_code(c);
      if (code < 0) {
        valid = 0;
        continue;
      }
      value = ((value << 2) | static_cast<uint64_t>(code)) & mask;
      if (++valid >= k) out.push_back(value);
    }
    seq.clear();
  };
  std::string line;
  const auto next_line = [&](std::string& dst) {
    if (!std::getline(in, dst)) return false;
    if (!dst.empty() && dst.back() == '\r') dst.pop_back();
    return true;
  };
  while (next_line(line)) {
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush();
    } else if (line[0] == '@') {
      flush();
      if (next_line(seq)) flush();
      std::string skip;
      next_line(skip);  // '+' separator
      next_line(skip);  // quality
    } else {
      seq += line;
    }
  }
  flush();
  if (!long_enough) throw InputError("no sequence is at least k=" + std::to_string(k) + " bases long");
  return out;
}

std::vector<uint64_t> kmers_from_file(const std::string& path, unsigned k) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  return kmers_from_stream(in, k);
}

std::vector<uint64_t> gen_keys(const WorkloadSpec& spec) {
  switch (spec.dist) {
    case Distribution::uniform:
      return uniform_keys(spec.n, spec.seed);
    case Distribution::ur_count: {
      // Bases are chosen so the expected stream length is n, then the
      // stream is cut to at most n.
      const uint64_t distinct = std::max<uint64_t>(1, 2 * spec.n / (spec.count_max + 1));
      std::vector<uint64_t> stream = ur_count_workload(distinct, spec.count_max, spec.seed).stream;
      if (spec.n > 0 && stream.size() > spec.n) stream.resize(spec.n);
      return stream;
    }
    case Distribution::zipf: {
      const uint64_t universe = spec.universe == 0 ? spec.n : spec.universe;
      std::vector<uint64_t> keys = zipf_ranks(spec.n, std::max<uint64_t>(1, universe), spec.zipf_s, spec.seed);
      for (uint64_t& k : keys) k = zipf_key(k, spec.seed);
      return keys;
    }
    case Distribution::kmer: {
      if (spec.kmer_file.empty()) throw ParameterError("kmer distribution needs a sequence file");
      std::vector<uint64_t> keys = kmers_from_file(spec.kmer_file, spec.kmer_k);
      if (spec.n > 0 && keys.size() > spec.n) keys.resize(spec.n);
      return keys;
    }
  }
  throw ParameterError("unknown distribution");
}

}  // namespace amqf
