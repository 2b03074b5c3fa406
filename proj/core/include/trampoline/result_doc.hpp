#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "trampoline/estimate.hpp"

namespace trampoline {

inline constexpr std::string_view kResultSchema = "trampoline.result/1";

// Self-describing output manifest. Numeric payloads depend only on the
// command, its configuration and inputs; nothing time- or host-dependent is
// recorded.
struct ResultDoc {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();

  nlohmann::json to_json() const;
  // Throws ConfigError when the schema id is missing or differs.
  static ResultDoc from_json(const nlohmann::json& j);
};

std::string dump(const ResultDoc& doc);
void write_result_doc(const std::filesystem::path& path, const ResultDoc& doc);
ResultDoc read_result_doc(const std::filesystem::path& path);

// Fit parameters keyed by name with value and 1-sigma curvature uncertainty.
nlohmann::json to_json(const estimate::FitResult& fit);
nlohmann::json to_json(const estimate::TransferEstimate& est);

// Value and uncertainty rounded to two significant digits of the
// uncertainty, with thousands separators: "418,000 ± 11,000".
std::string format_uncertain(double value, double sigma);

// "Q = 418,000 ± 11,000"
std::string format_param(std::string_view label, const estimate::FitParam& p);

}  // namespace trampoline
