#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trampoline/timeseries.hpp"

namespace trampoline::io {

// TimeSeries files.
//
// CSV: header lines
//   # sample_rate_hz=<v>
//   # calibration_m_per_unit=<v>
//   # center_freq_hz=<v>          (0 for baseband)
//   # t0_s=<v>                    (optional, default 0)
//   # drive_freq_hz=<v>           (optional, drive-sweep records)
//   # warning=<text>              (optional, repeated)
// followed by one value per line, or "in_phase,quadrature" pairs for
// complex-envelope records. Values use shortest round-trip formatting.
//
// Binary, little-endian:
//   0  char[4]  "OMB1"
//   4  uint32   columns (1 or 2)
//   8  uint64   sample count
//   16 float64  sample_rate_hz
//   24 float64  calibration_m_per_unit
//   32 float64  center_freq_hz
//   40 float64  t0_s
//   48 float64  drive_freq_hz (0 when absent)
//   56 float64  samples, interleaved per column
enum class Format { kCsv, kBinary };

Format format_from_name(std::string_view name);  // "csv" | "bin"
std::string_view extension(Format f);             // ".csv" | ".omb"

struct RecordFile {
  TimeSeries series;
  std::optional<double> drive_freq_hz;
};

void write_timeseries(const std::filesystem::path& path, const TimeSeries& ts, Format format,
                      std::optional<double> drive_freq_hz = std::nullopt);

// Detects the format from the leading bytes. Throws IoError.
RecordFile read_timeseries(const std::filesystem::path& path);

// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Column-oriented CSV for plotting: one header row, then rows of numbers.
// Columns may differ in length; short columns leave empty cells.
std::string columns_csv(std::span<const std::string> names,
                        std::span<const std::vector<double>> columns);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace trampoline::io
