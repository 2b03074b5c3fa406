#include "trampoline/timeseries.hpp"

#include <cmath>
#include <stdexcept>

namespace trampoline {

void TimeSeries::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw std::invalid_argument("TimeSeries: sample_rate must be positive");
  }
  if (values.size() < 2) throw std::invalid_argument("TimeSeries: need at least two samples");
  if (!quadrature.empty() && quadrature.size() != values.size()) {
    throw std::invalid_argument("TimeSeries: quadrature length mismatch");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("TimeSeries: non-finite sample");
  }
  for (double v : quadrature) {
    if (!std::isfinite(v)) throw std::invalid_argument("TimeSeries: non-finite sample");
  }
}

}  // namespace trampoline
