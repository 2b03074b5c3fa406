#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace trampoline::fit {

// Residual callback. Writes m residuals into `r`; when `jac` is non-empty it
// also writes the m x p Jacobian d r_i / d p_j in row-major order.
using ResidualFn =
    std::function<void(std::span<const double> p, std::span<double> r, std::span<double> jac)>;

struct LmOptions {
  int max_iterations = 300;
  double gtol = 1e-12;  // cosine between residual and Jacobian columns
  double xtol = 1e-13;  // relative step size
  double ftol = 1e-15;  // relative cost decrease
};

struct LmOutcome {
  std::vector<double> params;
  // (J^T J)^-1 at the solution, p x p row-major, not scaled by the residual
  // variance.
  std::vector<double> inv_hessian;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
};

// Damped Gauss-Newton (Levenberg-Marquardt) with Marquardt diagonal scaling
// and Nielsen's damping update.
LmOutcome levenberg_marquardt(const ResidualFn& fn, std::vector<double> p0, std::size_t m,
                              const LmOptions& opts = {});

}  // namespace trampoline::fit
