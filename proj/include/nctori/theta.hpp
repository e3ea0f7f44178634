#pragma once

#include <memory>
#include <span>
#include <vector>

namespace nctori {

class ThetaMatrix;
using ThetaPtr = std::shared_ptr<const ThetaMatrix>;

/// Real antisymmetric n x n deformation matrix.
///
/// Phase convention. U^k is the normal-ordered word U_1^{k_1} ... U_n^{k_n}
/// and the generators satisfy U_m U_j = e^{2 pi i theta_jm} U_j U_m. Moving
/// every U_j^{l_j} of U^l left past U_m^{k_m} (m > j) gives
///
///   U^k U^l = chi(k, l) U^{k+l},   chi(k, l) = exp(2 pi i sum_{j<m} theta_jm l_j k_m),
///
/// and from U^k U^{-k} = chi(k, -k) the adjoint of a monomial is
///
///   (U^k)^* = chi_star(k) U^{-k},  chi_star(k) = exp(2 pi i sum_{j<m} theta_jm k_j k_m).
class ThetaMatrix {
 public:
  /// Row-major entries; throws unless the matrix is exactly antisymmetric.
  static ThetaPtr make(int n, std::vector<double> row_major);
  static ThetaPtr zero(int n);
  /// n = 2 matrix with theta_12 = t, theta_21 = -t.
  static ThetaPtr planar(double t);

  int dim() const { return n_; }
  double operator()(int j, int l) const { return entries_[j * n_ + l]; }
  const std::vector<double>& entries() const { return entries_; }
  bool operator==(const ThetaMatrix& other) const = default;

  /// Argument of chi(k, l).
  double pair_angle(std::span<const int> k, std::span<const int> l) const;
  /// Argument of chi_star(k).
  double star_angle(std::span<const int> k) const;

  /// a(l)_m = sum_{j<m} theta_jm l_j; then arg chi(k, l) = 2 pi k . a(l).
  void pair_weights(std::span<const int> l, std::span<double> out) const;

 private:
  ThetaMatrix(int n, std::vector<double> e) : n_(n), entries_(std::move(e)) {}
  int n_;
  std::vector<double> entries_;
};

bool same_theta(const ThetaPtr& a, const ThetaPtr& b);

namespace debug {
/// Fault-injection hook: perturbs the pair phase so that it stops being a
/// 2-cocycle. Only for exercising the self-test; never enable otherwise.
void set_phase_fault(bool enabled);
bool phase_fault();
}  // namespace debug

}  // namespace nctori
