#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "trampoline/config.hpp"
#include "trampoline/io.hpp"
#include "trampoline/result_doc.hpp"

namespace trampoline::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitFit = 4,
};

struct Context {
  Config config;
  std::filesystem::path out_dir;
  io::Format format = io::Format::kCsv;
  std::ostream* log = nullptr;  // human-readable summary, may be null
};

// Every command writes its files plus a ResultDoc under ctx.out_dir and
// returns the document. Fit commands report non-convergence through
// `converged` flags; fit_failed() tells the caller to exit with kExitFit.
ResultDoc simulate_brownian(const Context& ctx);
ResultDoc simulate_ringdown_optical(const Context& ctx);
ResultDoc simulate_ringdown_mech(const Context& ctx);
ResultDoc simulate_sweep(const Context& ctx, bool nested);
ResultDoc simulate_lock(const Context& ctx);

ResultDoc analyze_q(const Context& ctx, const std::vector<std::filesystem::path>& inputs);
ResultDoc analyze_finesse(const Context& ctx, const std::vector<std::filesystem::path>& inputs);
ResultDoc analyze_mech_q(const Context& ctx, const std::vector<std::filesystem::path>& inputs);
ResultDoc analyze_psd(const Context& ctx, const std::vector<std::filesystem::path>& inputs);
// Either one sweep manifest (simulate-sweep.json) or matched base/response lists.
ResultDoc analyze_transfer(const Context& ctx, const std::filesystem::path& manifest);
ResultDoc analyze_transfer(const Context& ctx, const std::vector<std::filesystem::path>& base,
                           const std::vector<std::filesystem::path>& response);

ResultDoc design_check(const Context& ctx);
ResultDoc report(const Context& ctx);

bool fit_failed(const ResultDoc& doc);

}  // namespace trampoline::cli
