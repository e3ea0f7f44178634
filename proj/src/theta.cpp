#include "nctori/theta.hpp"

#include <atomic>
#include <numbers>

#include "nctori/errors.hpp"
#include "nctori/lattice.hpp"

namespace nctori {

namespace {
std::atomic<bool> g_phase_fault{false};
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

ThetaPtr ThetaMatrix::make(int n, std::vector<double> row_major) {
  if (n < 2 || n > kMaxDim) throw DimensionMismatch("theta dimension must be in [2, 4]");
  if (static_cast<int>(row_major.size()) != n * n)
    throw DimensionMismatch("theta needs n*n entries");
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l)
      if (row_major[j * n + l] != -row_major[l * n + j])
        throw InvalidArgument("theta must be antisymmetric");
  return ThetaPtr(new ThetaMatrix(n, std::move(row_major)));
}

ThetaPtr ThetaMatrix::zero(int n) { return make(n, std::vector<double>(n * n, 0.0)); }

ThetaPtr ThetaMatrix::planar(double t) { return make(2, {0.0, t, -t, 0.0}); }

void ThetaMatrix::pair_weights(std::span<const int> l, std::span<double> out) const {
  for (int m = 0; m < n_; ++m) {
    double a = 0.0;
    for (int j = 0; j < m; ++j) a += (*this)(j, m) * l[j];
    out[m] = a;
  }
}

double ThetaMatrix::pair_angle(std::span<const int> k, std::span<const int> l) const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j)
    for (int m = j + 1; m < n_; ++m) s += (*this)(j, m) * l[j] * k[m];
  double angle = kTwoPi * s;
  if (g_phase_fault.load(std::memory_order_relaxed)) {
    const double kl = static_cast<double>(k[0]) * l[0];
    angle += 0.37 * kl * kl;
  }
  return angle;
}

double ThetaMatrix::star_angle(std::span<const int> k) const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j)
    for (int m = j + 1; m < n_; ++m) s += (*this)(j, m) * k[j] * k[m];
  return kTwoPi * s;
}

bool same_theta(const ThetaPtr& a, const ThetaPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

namespace debug {
void set_phase_fault(bool enabled) { g_phase_fault.store(enabled); }
bool phase_fault() { return g_phase_fault.load(); }
}  // namespace debug

}  // namespace nctori
