#include "amqf/metrics.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "amqf/error.hpp"

namespace amqf {

namespace {

constexpr std::string_view kHeader =
    "filter,api,op,log_slots,load_factor,threads,dist,seed,wall_seconds,ops_per_sec,fpr,bits_per_item";
constexpr size_t kFields = 12;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::string& checked_text(const std::string& field) {
  if (field.find_first_of(",\"\r\n") != std::string::npos) {
    throw ParameterError("CSV text field must not contain separators: " + field);
  }
  return field;
}

std::vector<std::string> split_row(std::string_view row) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = row.find(',', start);
    fields.emplace_back(row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& s, const char* name) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw InputError(std::string("bad ") + name + " value: '" + s + "'");
  }
  return v;
}

uint64_t parse_unsigned(const std::string& s, const char* name) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno == ERANGE) {
    throw InputError(std::string("bad ") + name + " value: '" + s + "'");
  }
  return v;
}

}  // namespace

std::string_view csv_header() noexcept { return kHeader; }

std::string to_csv_row(const MetricsRecord& r) {
  std::string row;
  row += checked_text(r.filter) + ',';
  row += checked_text(r.api) + ',';
  row += checked_text(r.op) + ',';
  row += std::to_string(r.log_slots) + ',';
  row += format_double(r.load_factor) + ',';
  row += std::to_string(r.threads) + ',';
  row += checked_text(r.dist) + ',';
  row += std::to_string(r.seed) + ',';
  row += format_double(r.wall_seconds) + ',';
  row += format_double(r.ops_per_sec) + ',';
  row += (r.fpr ? format_double(*r.fpr) : std::string()) + ',';
  row += format_double(r.bits_per_item);
  return row;
}

MetricsRecord parse_csv_row(std::string_view row) {
  if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
  const std::vector<std::string> f = split_row(row);
  if (f.size() != kFields) {
    throw InputError("expected " + std::to_string(kFields) + " fields, got " + std::to_string(f.size()));
  }
  MetricsRecord r;
  r.filter = f[0];
  r.api = f[1];
  r.op = f[2];
  r.log_slots = static_cast<unsigned>(parse_unsigned(f[3], "log_slots"));
  r.load_factor = parse_double(f[4], "load_factor");
  r.threads = static_cast<unsigned>(parse_unsigned(f[5], "threads"));
  r.dist = f[6];
  r.seed = parse_unsigned(f[7], "seed");
  r.wall_seconds = parse_double(f[8], "wall_seconds");
  r.ops_per_sec = parse_double(f[9], "ops_per_sec");
  if (!f[10].empty()) r.fpr = parse_double(f[10], "fpr");
  r.bits_per_item = parse_double(f[11], "bits_per_item");
  return r;
}

void append_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  if (!fresh) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (first != kHeader) throw InputError(path.string() + " has a different CSV header");
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  if (fresh) out << kHeader << '\n';
  for (const MetricsRecord& r : records) out << to_csv_row(r) << '\n';
  if (!out) throw InputError("write to " + path.string() + " failed");
}

std::vector<MetricsRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw InputError(path.string() + " has a different CSV header");
  std::vector<MetricsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_csv_row(line));
  }
  return out;
}

}  // namespace amqf
