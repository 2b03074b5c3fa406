#include "trampoline/result_doc.hpp"

#include <cmath>
#include <cstdio>

#include "trampoline/errors.hpp"
#include "trampoline/io.hpp"

namespace trampoline {

using nlohmann::json;

json ResultDoc::to_json() const {
  return {{"schema", kResultSchema}, {"command", command}, {"config", config}, {"outputs", outputs}};
}

ResultDoc ResultDoc::from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string()) {
    throw ConfigError("result document has no schema id");
  }
  const auto schema = j["schema"].get<std::string>();
  if (schema != kResultSchema) {
    throw ConfigError("unsupported result schema '" + schema + "' (expected " + std::string(kResultSchema) + ")");
  }
  ResultDoc doc;
  doc.command = j.value("command", "");
  if (j.contains("config")) doc.config = j["config"];
  if (j.contains("outputs")) doc.outputs = j["outputs"];
  return doc;
}

std::string dump(const ResultDoc& doc) { return doc.to_json().dump(2) + "\n"; }

void write_result_doc(const std::filesystem::path& path, const ResultDoc& doc) {
  io::write_file_atomic(path, dump(doc));
}

ResultDoc read_result_doc(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return ResultDoc::from_json(j);
}

namespace {

json params_json(const std::vector<estimate::FitParam>& ps) {
  json out = json::object();
  for (const auto& p : ps) out[p.name] = {{"value", p.value}, {"sigma", p.sigma}};
  return out;
}

std::string group_thousands(const std::string& digits) {
  // digits: optional '-', integer part, optional fraction.
  std::size_t start = digits.front() == '-' ? 1 : 0;
  std::size_t dot = digits.find('.');
  if (dot == std::string::npos) dot = digits.size();
  std::string out = digits.substr(0, start);
  const std::string ip = digits.substr(start, dot - start);
  for (std::size_t i = 0; i < ip.size(); ++i) {
    if (i > 0 && (ip.size() - i) % 3 == 0) out += ',';
    out += ip[i];
  }
  return out + digits.substr(dot);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) {
    if (s.front() == '-') s.erase(0, 1);
  }
  return group_thousands(s);
}

}  // namespace

json to_json(const estimate::FitResult& fit) {
  json j = {{"model", fit.model},
            {"converged", fit.converged},
            {"sigma_source", "fit curvature"},
            {"params", params_json(fit.params)},
            {"derived", params_json(fit.derived)},
            {"residual_norm", fit.residual_norm},
            {"n_points", fit.n_points},
            {"iterations", fit.iterations},
            {"warnings", fit.warnings}};
  return j;
}

json to_json(const estimate::TransferEstimate& est) {
  return {{"bin_centers_hz", est.bin_centers_hz},
          {"magnitude_db", est.magnitude_db},
          {"errbar_db", est.errbar_db},
          {"counts", est.counts},
          {"dc_reference_db", est.dc_reference_db},
          {"dc_normalized", est.dc_normalized},
          {"excluded_records", est.excluded}};
}

std::string format_uncertain(double value, double sigma) {
  if (!std::isfinite(value)) return "nan";
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return std::string(buf) + " ± ?";
  }
  int place = static_cast<int>(std::floor(std::log10(sigma))) - 1;
  // Rounding may carry into a third digit (99.7 -> 100); keep two.
  if (std::round(sigma / std::pow(10.0, place)) >= 100.0) ++place;
  const double unit = std::pow(10.0, place);
  const double v = std::round(value / unit) * unit;
  const double s = std::round(sigma / unit) * unit;
  const int decimals = place < 0 ? -place : 0;
  return fixed(v, decimals) + " ± " + fixed(s, decimals);
}

std::string format_param(std::string_view label, const estimate::FitParam& p) {
  return std::string(label) + " = " + format_uncertain(p.value, p.sigma);
}

}  // namespace trampoline
