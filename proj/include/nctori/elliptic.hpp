#pragma once
// Ellipticity, the parametrix jet, Laplace-Beltrami operators of a metric
// over A_theta, elliptic estimate probes and truncated solves.
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "nctori/psido.hpp"
#include "nctori/representation.hpp"

namespace nctori {

struct EllipticityReport {
  double min_singular_value = 0.0;
  /// min eigenvalue of L_{rho_q(xi)} over the samples, when every value is selfadjoint
  std::optional<double> positivity;
  bool elliptic = false;
  double gap = 0.0;
  std::vector<double> worst_direction;
  std::size_t samples = 0;
};

/// Checks rho_q(xi) on unit vectors through the compression of L_{rho_q(xi)}
/// to the box of `trunc`, block by block over its coupling classes.
EllipticityReport is_elliptic(const HomogeneousComponent& principal, const std::vector<std::vector<double>>& samples,
                              const Truncation& trunc, double gap = 1e-8);

struct ParametrixOptions {
  /// Truncation for inverse_element; margin must cover the principal symbol's support.
  Truncation trunc{30, 8};
  double gap = 1e-8;
  /// Coefficients below prune * max are dropped after each product.
  double prune = 1e-17;
  /// Box used for the ellipticity precheck (64 directions for n = 2).
  Truncation check{8, 8};
  int check_samples = 64;
};

/// sigma_{-q-j}, j < N, of a parametrix for a classical symbol rho:
///   sigma_{-q}   = rho_q^{-1}
///   sigma_{-q-j} = - sum_{k+l+|alpha|=j, l<j} (1/alpha!) sigma_{-q} d^alpha rho_{q-k} delta^alpha sigma_{-q-l}
/// Values at integer xi are cached.
class ParametrixJet {
 public:
  enum class OriginValue { Zero, Identity };

  ParametrixJet(std::shared_ptr<const ClassicalSymbol> rho, int N, ParametrixOptions opts = {});

  int size() const;
  cplx base_order() const;
  const ClassicalSymbol& symbol() const;
  const ParametrixOptions& options() const;

  /// sigma_{-q}(xi), ..., sigma_{-q-N+1}(xi); xi must be nonzero.
  std::vector<Element> values(std::span<const double> xi) const;
  Element component_at(int j, std::span<const double> xi) const;
  /// Component j as a homogeneous symbol of degree -q-j.
  HomogeneousComponent component(int j) const;
  /// sigma_{-q} + ... + sigma_{-q-N+1} as a symbol, with the value at xi = 0
  /// replaced by 0 or 1.
  SymbolPtr partial_sum(int N, OriginValue origin = OriginValue::Zero) const;
  std::size_t cached_points() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

/// E(R) = max_{|k|_inf = R} ||(sigma # rho)(k) - 1||_0 with the exact lattice
/// composite (left), or of rho # sigma - 1 (right), and the power-law fit.
ShellNorms parametrix_residuals(const Symbol& sigma, const Symbol& rho, const std::vector<int>& radii, bool left);

/// Throws InvalidArgument when the principal symbol fails the sphere check.
std::shared_ptr<const ParametrixJet> parametrix_jet(std::shared_ptr<const ClassicalSymbol> rho, int N,
                                                   ParametrixOptions opts = {});

struct MetricOptions {
  /// Truncation for the matrix logarithm, inverse and exponentials.
  Truncation trunc{24, 2};
  /// Coefficients of the derived elements are kept on |k|_inf <= support.
  int support = 8;
  double gap = 1e-8;
  double prune = 1e-15;
  double symmetry_tol = 1e-12;
};

/// g = (g_ij) in M_n(A_theta), selfadjoint entries, symmetric, positive at truncation.
class RiemannianMetric {
 public:
  RiemannianMetric(std::vector<std::vector<Element>> g, MetricOptions opts = {});
  static RiemannianMetric identity(const ThetaPtr& theta, MetricOptions opts = {});

  int dim() const { return static_cast<int>(g_.size()); }
  const ThetaPtr& theta() const { return g_[0][0].theta(); }
  const MetricOptions& options() const { return opts_; }
  const Element& g(int i, int j) const { return g_[i][j]; }
  /// (g^{-1})_{ij}
  const Element& g_inv(int i, int j) const { return g_inv_[i][j]; }
  /// Tr log g
  const Element& trace_log() const { return trace_log_; }
  /// nu(g)^p for p = 1, 1/2, -1/2, -1, where nu(g) = exp(Tr log g / 2).
  const Element& nu() const { return nu_[0]; }
  const Element& nu_half() const { return nu_[1]; }
  const Element& nu_neg_half() const { return nu_[2]; }
  const Element& nu_inv() const { return nu_[3]; }
  /// h^{ij} = nu^{1/2} g^{ij} nu^{1/2}
  const Element& h(int i, int j) const { return h_[i][j]; }
  /// Smallest eigenvalue of the block matrix (L_{g_ij}) over the truncation box.
  double min_eigenvalue() const { return min_eig_; }

 private:
  std::vector<std::vector<Element>> g_, g_inv_, h_;
  Element trace_log_;
  std::vector<Element> nu_;
  double min_eig_ = 0.0;
  MetricOptions opts_;
};

/// Delta_g = nu^{-1} sum_ij delta_i (h^{ij} delta_j .) as sum_alpha a_alpha xi^alpha:
///   a_{e_i+e_j} += nu^{-1/2} g^{ij} nu^{1/2},  a_{e_j} = nu^{-1} sum_i delta_i(h^{ij}).
std::shared_ptr<const PolynomialSymbol> laplace_beltrami(const RiemannianMetric& metric);
/// nu Delta_g = sum_ij delta_i h^{ij} delta_j, Hermitian on every box.
std::shared_ptr<const PolynomialSymbol> divergence_form(const RiemannianMetric& metric);

struct EstimateProbe {
  double constant = 0.0;  ///< max ratio
  double mean = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  int radius = 0;  ///< probes live on |k|_inf <= radius
};

/// ||u||_{s+m} / (||P u||_s + ||u||_t)
double estimate_ratio(const PsiDO& P, const Element& u, double s, double t);

/// max over random u of ||u||_{s+m} / (||P u||_s + ||u||_t), with u seeded
/// complex Gaussians on |k|_inf <= K/2.
EstimateProbe elliptic_estimate_probe(const PsiDO& P, double s, double t, int sample_count, const Truncation& trunc,
                                      std::uint64_t seed = 20240601);

struct SolveOptions {
  enum class Method { Direct, Gmres };
  Method method = Method::Direct;
  int max_iterations = 200;
  int restart = 30;
  double tolerance = 1e-12;
  /// Right preconditioner for GMRES: the solve runs on A Q and returns Q y.
  SymbolPtr preconditioner;
};

struct SolveResult {
  Element solution;
  double residual = 0.0;  ///< ||P u - f|| on the trusted window
  int iterations = 0;
  bool converged = true;
};

/// Solves the trusted-window system of P for f restricted to that window.
SolveResult truncated_solve(const PsiDO& P, const Element& f, const Truncation& trunc, const SolveOptions& opts = {});

}  // namespace nctori
