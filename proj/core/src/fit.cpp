#include "trampoline/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trampoline::fit {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Evaluation {
  Vector r;
  Matrix jac;
  double cost = 0.0;
};

void evaluate(const ResidualFn& fn, const Vector& p, std::size_t m, bool with_jac,
              Evaluation& out) {
  out.r.resize(static_cast<Eigen::Index>(m));
  if (with_jac) out.jac.resize(static_cast<Eigen::Index>(m), p.size());
  std::span<double> jac_span;
  if (with_jac) jac_span = {out.jac.data(), static_cast<std::size_t>(out.jac.size())};
  fn({p.data(), static_cast<std::size_t>(p.size())}, {out.r.data(), m}, jac_span);
  out.cost = 0.5 * out.r.squaredNorm();
}

bool all_finite(const Vector& v) {
  return std::all_of(v.data(), v.data() + v.size(), [](double x) { return std::isfinite(x); });
}

}  // namespace

LmOutcome levenberg_marquardt(const ResidualFn& fn, std::vector<double> p0, std::size_t m,
                              const LmOptions& opts) {
  const auto np = static_cast<Eigen::Index>(p0.size());
  if (np == 0) throw std::invalid_argument("levenberg_marquardt: no parameters");
  if (m < p0.size()) throw std::invalid_argument("levenberg_marquardt: fewer residuals than parameters");

  Vector p = Eigen::Map<const Vector>(p0.data(), np);
  Evaluation cur;
  evaluate(fn, p, m, true, cur);
  if (!all_finite(cur.r)) throw std::invalid_argument("levenberg_marquardt: non-finite residual at start");

  Matrix hess = cur.jac.transpose() * cur.jac;
  Vector grad = cur.jac.transpose() * cur.r;
  Vector scale = hess.diagonal().cwiseMax(std::numeric_limits<double>::min());
  double mu = 1e-3;
  double nu = 2.0;

  LmOutcome out;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const double rnorm = std::sqrt(2.0 * cur.cost);
    if (rnorm == 0.0) {
      out.converged = true;
      out.stop_reason = "zero residual";
      break;
    }
    double gcos = 0.0;
    for (Eigen::Index j = 0; j < np; ++j) {
      const double colnorm = std::sqrt(hess(j, j));
      if (colnorm > 0.0) gcos = std::max(gcos, std::abs(grad(j)) / (colnorm * rnorm));
    }
    if (gcos <= opts.gtol) {
      out.converged = true;
      out.stop_reason = "gradient";
      break;
    }

    Matrix damped = hess;
    damped.diagonal() += mu * scale;
    const Vector step = damped.ldlt().solve(-grad);
    if (!all_finite(step)) {
      mu *= nu;
      nu *= 2.0;
      continue;
    }
    if (step.norm() <= opts.xtol * (p.norm() + opts.xtol)) {
      out.converged = true;
      out.stop_reason = "step";
      break;
    }

    const Vector trial = p + step;
    Evaluation next;
    evaluate(fn, trial, m, false, next);
    const double predicted = 0.5 * step.dot(mu * scale.cwiseProduct(step) - grad);
    const double actual = cur.cost - next.cost;
    const double rho = (predicted > 0.0 && all_finite(next.r)) ? actual / predicted : -1.0;

    if (rho > 0.0) {
      p = trial;
      evaluate(fn, p, m, true, cur);
      hess = cur.jac.transpose() * cur.jac;
      grad = cur.jac.transpose() * cur.r;
      scale = scale.cwiseMax(hess.diagonal());
      const double t = 2.0 * rho - 1.0;
      mu *= std::max(1.0 / 3.0, 1.0 - t * t * t);
      nu = 2.0;
      if (actual <= opts.ftol * (cur.cost + actual)) {
        out.converged = true;
        out.stop_reason = "cost";
        ++it;
        break;
      }
    } else {
      mu *= nu;
      nu *= 2.0;
      if (mu > 1e30) {
        out.stop_reason = "damping overflow";
        break;
      }
    }
  }
  if (out.stop_reason.empty()) out.stop_reason = "max iterations";

  out.iterations = it;
  out.params.assign(p.data(), p.data() + np);
  out.residual_norm = std::sqrt(2.0 * cur.cost);
  Matrix inv = hess.completeOrthogonalDecomposition().pseudoInverse();
  out.inv_hessian.assign(inv.data(), inv.data() + inv.size());
  return out;
}

}  // namespace trampoline::fit
