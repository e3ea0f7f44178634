#pragma once
// Least-squares power-law fits on log-log data.
#include <string>
#include <vector>

namespace nctori {

struct SlopeFit {
  double exponent = 0.0;
  double intercept = 0.0;  ///< log y at log x = 0
  double residual = 0.0;   ///< rms of the log residuals
  double x_lo = 0.0, x_hi = 0.0;
  std::size_t count = 0;
  /// Fewer than two usable points, or a zero/flat series.
  bool degenerate = false;
  std::string note;
};

/// Fits log y = intercept + exponent log x over points with x in [lo, hi]
/// and y > floor. Points with y <= floor are dropped.
SlopeFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double lo = 0.0,
                       double hi = 1e300, double floor = 0.0);

}  // namespace nctori
