#include "nctori/fit.hpp"

#include <cmath>

#include "nctori/errors.hpp"

namespace nctori {

SlopeFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi,
                       double floor) {
  if (x.size() != y.size()) throw DimensionMismatch("fit_power_law: x and y differ in length");
  std::vector<double> lx, ly;
  SlopeFit fit;
  fit.x_lo = hi;
  fit.x_hi = lo;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo && x[i] <= hi) || !(x[i] > 0.0) || !(y[i] > floor)) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
    fit.x_lo = std::min(fit.x_lo, x[i]);
    fit.x_hi = std::max(fit.x_hi, x[i]);
  }
  fit.count = lx.size();
  if (lx.size() < 2) {
    fit.degenerate = true;
    fit.note = "fewer than two points above the floor";
    return fit;
  }
  const double m = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double den = m * sxx - sx * sx;
  if (den <= 0.0) {
    fit.degenerate = true;
    fit.note = "all abscissae coincide";
    return fit;
  }
  fit.exponent = (m * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.exponent * sx) / m;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.intercept - fit.exponent * lx[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

}  // namespace nctori
