#pragma once

// One benchmark observation and its CSV form.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amqf {

struct MetricsRecord {
  std::string filter;
  std::string api;
  std::string op;
  unsigned log_slots = 0;
  double load_factor = 0.0;
  unsigned threads = 1;
  std::string dist;
  uint64_t seed = 0;
  double wall_seconds = 0.0;
  double ops_per_sec = 0.0;
  std::optional<double> fpr;  ///< empty cell when not measured
  double bits_per_item = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

std::string_view csv_header() noexcept;

/// Doubles are written with 17 significant digits so rows parse back to the
/// same values. Throws ParameterError if a text field holds a comma, quote
/// or line break.
std::string to_csv_row(const MetricsRecord& record);

/// Throws InputError on a malformed row.
MetricsRecord parse_csv_row(std::string_view row);

/// Appends rows, writing the header first when the file is new or empty.
/// Throws InputError if the file cannot be opened or starts with a different
/// header.
void append_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records);

/// Throws InputError on a missing file, a wrong header or a malformed row.
std::vector<MetricsRecord> read_csv(const std::filesystem::path& path);

}  // namespace amqf
