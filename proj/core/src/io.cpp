#include "trampoline/io.hpp"

#include <unistd.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "trampoline/errors.hpp"

namespace trampoline::io {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'O', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 56;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

double parse_double(std::string_view s, const fs::path& path) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(path.string() + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

std::string csv_text(const TimeSeries& ts, std::optional<double> drive) {
  std::string out;
  out.reserve(ts.size() * (ts.is_complex() ? 48 : 24) + 256);
  out += "# sample_rate_hz=" + format_double(ts.sample_rate_hz) + "\n";
  out += "# calibration_m_per_unit=" + format_double(ts.calibration) + "\n";
  out += "# center_freq_hz=" + format_double(ts.center_freq_hz) + "\n";
  out += "# t0_s=" + format_double(ts.t0_s) + "\n";
  if (drive) out += "# drive_freq_hz=" + format_double(*drive) + "\n";
  for (const auto& w : ts.warnings) out += "# warning=" + w + "\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out += format_double(ts.values[i]);
    if (ts.is_complex()) {
      out += ',';
      out += format_double(ts.quadrature[i]);
    }
    out += '\n';
  }
  return out;
}

std::string binary_blob(const TimeSeries& ts, std::optional<double> drive) {
  const std::uint32_t cols = ts.is_complex() ? 2 : 1;
  std::string out;
  out.reserve(kHeaderBytes + ts.size() * cols * 8);
  out.append(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, cols);
  put_le<std::uint64_t>(out, ts.size());
  put_le<double>(out, ts.sample_rate_hz);
  put_le<double>(out, ts.calibration);
  put_le<double>(out, ts.center_freq_hz);
  put_le<double>(out, ts.t0_s);
  put_le<double>(out, drive.value_or(0.0));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    put_le<double>(out, ts.values[i]);
    if (cols == 2) put_le<double>(out, ts.quadrature[i]);
  }
  return out;
}

RecordFile parse_csv(const std::string& text, const fs::path& path) {
  RecordFile rec;
  bool have_rate = false;
  std::istringstream in(text);
  std::string line;
  int columns = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = body.substr(0, eq);
      const std::string_view val = body.substr(eq + 1);
      if (key == "sample_rate_hz") {
        rec.series.sample_rate_hz = parse_double(val, path);
        have_rate = true;
      } else if (key == "calibration_m_per_unit") {
        rec.series.calibration = parse_double(val, path);
      } else if (key == "center_freq_hz") {
        rec.series.center_freq_hz = parse_double(val, path);
      } else if (key == "t0_s") {
        rec.series.t0_s = parse_double(val, path);
      } else if (key == "drive_freq_hz") {
        rec.drive_freq_hz = parse_double(val, path);
      } else if (key == "warning") {
        rec.series.warnings.emplace_back(val);
      }
      continue;
    }
    const auto comma = line.find(',');
    const int cols = comma == std::string::npos ? 1 : 2;
    if (columns == 0) columns = cols;
    if (cols != columns) throw IoError(path.string() + ": inconsistent column count");
    if (cols == 1) {
      rec.series.values.push_back(parse_double(line, path));
    } else {
      std::string_view sv(line);
      rec.series.values.push_back(parse_double(sv.substr(0, comma), path));
      rec.series.quadrature.push_back(parse_double(sv.substr(comma + 1), path));
    }
  }
  if (!have_rate) throw IoError(path.string() + ": missing '# sample_rate_hz=' header");
  return rec;
}

RecordFile parse_binary(const std::string& blob, const fs::path& path) {
  if (blob.size() < kHeaderBytes) throw IoError(path.string() + ": truncated OMB1 header");
  const char* p = blob.data();
  const auto cols = get_le<std::uint32_t>(p + 4);
  const auto count = get_le<std::uint64_t>(p + 8);
  if (cols != 1 && cols != 2) throw IoError(path.string() + ": OMB1 column count must be 1 or 2");
  if (count > (blob.size() - kHeaderBytes) / (8 * cols) ||
      blob.size() != kHeaderBytes + count * cols * 8) {
    throw IoError(path.string() + ": OMB1 payload size does not match header");
  }
  RecordFile rec;
  rec.series.sample_rate_hz = get_le<double>(p + 16);
  rec.series.calibration = get_le<double>(p + 24);
  rec.series.center_freq_hz = get_le<double>(p + 32);
  rec.series.t0_s = get_le<double>(p + 40);
  const double drive = get_le<double>(p + 48);
  if (drive != 0.0) rec.drive_freq_hz = drive;
  rec.series.values.resize(count);
  if (cols == 2) rec.series.quadrature.resize(count);
  const char* data = p + kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) {
    rec.series.values[i] = get_le<double>(data + (i * cols) * 8);
    if (cols == 2) rec.series.quadrature[i] = get_le<double>(data + (i * cols + 1) * 8);
  }
  return rec;
}

}  // namespace

Format format_from_name(std::string_view name) {
  if (name == "csv") return Format::kCsv;
  if (name == "bin" || name == "binary" || name == "omb") return Format::kBinary;
  throw std::invalid_argument("unknown record format '" + std::string(name) + "' (expected csv or bin)");
}

std::string_view extension(Format f) { return f == Format::kCsv ? ".csv" : ".omb"; }

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_timeseries(const fs::path& path, const TimeSeries& ts, Format format,
                      std::optional<double> drive_freq_hz) {
  ts.validate();
  write_file_atomic(path, format == Format::kCsv ? csv_text(ts, drive_freq_hz)
                                                 : binary_blob(ts, drive_freq_hz));
}

RecordFile read_timeseries(const fs::path& path) {
  const std::string data = read_file(path);
  RecordFile rec = data.size() >= 4 && std::memcmp(data.data(), kMagic.data(), 4) == 0
                       ? parse_binary(data, path)
                       : parse_csv(data, path);
  try {
    rec.series.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return rec;
}

std::string columns_csv(std::span<const std::string> names, std::span<const std::vector<double>> columns) {
  if (names.size() != columns.size()) throw std::invalid_argument("columns_csv: name/column count mismatch");
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c > 0) out += ',';
    out += names[c];
  }
  out += '\n';
  std::size_t rows = 0;
  for (const auto& col : columns) rows = std::max(rows, col.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c > 0) out += ',';
      if (r < columns[c].size()) out += format_double(columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace trampoline::io
