#pragma once
// Lattice, matrix-diagonal and integral traces; the Meyer window phi and
// normalized symbols rho~(xi) = sum_k phi(xi - k) rho(k).
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nctori/psido.hpp"

namespace nctori {

struct MeyerOptions {
  /// Half-width of the transition of the smoothed step; theta_1 = 1/(2 pi) on |t| <= pi - width.
  double width = 0.9 * std::numbers::pi;
  /// theta_1 is sampled at j 2pi/grid, j = -grid .. grid-1.
  int grid = 256;
  /// phi(xi - k) is treated as 0 beyond this |.|_inf distance.
  int neighbor_radius = 32;
  int check_radius = 8;
  /// phi_1 is tabulated on multiples of this step.
  double table_step = 0.125;
  double origin_tol = 1e-10;
  double lattice_tol = 1e-10;
  double integral_tol = 1e-6;
};

struct MeyerChecks {
  double partition_error = 0.0;  ///< max |theta_1(t) + theta_1(2pi - t) - 1/(2pi)|
  double origin_error = 0.0;     ///< |phi(0) - 1|
  double lattice_max = 0.0;      ///< max |phi(k)|, 0 < |k|_inf <= check radius
  double integral_error = 0.0;   ///< |int phi - 1|
};

/// phi = Fourier transform of theta_1(x_1)...theta_1(x_n).
class MeyerWindow {
 public:
  MeyerWindow(int n, MeyerOptions opts = {});

  int dim() const { return n_; }
  const MeyerOptions& options() const { return opts_; }
  const MeyerChecks& checks() const { return checks_; }
  int neighbor_radius() const { return opts_.neighbor_radius; }

  double theta1(double t) const;
  /// int theta_1(t) e^{-i t x} dt by the trapezoid rule on the sampling grid.
  double phi1(double x) const;
  double phi(std::span<const double> xi) const;
  double phi_at(std::span<const int> k) const;

 private:
  double phi1_direct(double x) const;

  int n_;
  MeyerOptions opts_;
  MeyerChecks checks_;
  std::vector<double> nodes_, weights_;  // t_j >= 0 and the folded trapezoid weights
  std::vector<double> table_;            // phi_1(i * table_step), i = 0 .. size-1
};

/// Throws NumericError when one of phi(0) = 1, phi(k) = 0, int phi = 1 or the
/// partition identity fails its tolerance.
std::shared_ptr<const MeyerWindow> build_meyer_phi(int n, MeyerOptions opts = {});

struct QuadratureSpec {
  enum class Rule { Trapezoid, Simpson };
  double h = 0.25;
  double X = 64.0;
  Rule rule = Rule::Trapezoid;
  /// Order-based tail estimates above this make integral_trace refuse the box.
  double tail_tolerance = 1e-3;
  void validate() const;
  int intervals() const;
};

std::string to_string(QuadratureSpec::Rule rule);

struct TraceReport {
  std::string method;
  cplx value = 0.0;
  double tail_bound = 0.0;
  int K = 0;
  std::optional<QuadratureSpec> quadrature;
  std::size_t nodes = 0;
};

std::string trace_report_json(const TraceReport& r);

/// Estimate of sum_{|k|_inf > K} |tau rho(k)|, from C (1+|k|)^m with C
/// fitted on the shell |k|_inf = K. Infinite when m >= -n.
double lattice_tail_bound(const Symbol& rho, int K);

/// sum_{|k|_inf <= K} tau(rho(k))
TraceReport trace_lattice(const Symbol& rho, int K);

/// Sum of the diagonal of the operator matrix over the trusted window.
TraceReport trace_matrix_diag(const PsiDO& P, const Truncation& trunc);

/// xi -> sum_{|k|_inf <= K} phi(xi - k) rho(k)
class NormalizedSymbol : public Symbol {
 public:
  NormalizedSymbol(const Symbol& rho, std::shared_ptr<const MeyerWindow> phi, int K);

  Element eval(std::span<const double> xi) const override;
  std::string describe() const override { return "normalized(" + name_ + ")"; }

  /// tau(rho~(xi)) without forming the element.
  cplx trace_density(std::span<const double> xi) const;
  int lattice_radius() const { return K_; }
  const MeyerWindow& window() const { return *phi_; }
  /// tau(rho(k)) in BoxBasis(n, K) order.
  const std::vector<cplx>& lattice_traces() const { return traces_; }
  /// Tail of the lattice sum beyond K.
  double tail_bound() const { return tail_; }

 private:
  template <class F>
  void for_neighbors(std::span<const double> xi, F&& f) const;

  std::shared_ptr<const MeyerWindow> phi_;
  int K_;
  BoxBasis box_;
  std::vector<Element> values_;
  std::vector<cplx> traces_;
  double tail_;
  std::string name_;
};

std::shared_ptr<const NormalizedSymbol> normalize_symbol(const Symbol& rho, std::shared_ptr<const MeyerWindow> phi,
                                                         int K);

/// Quadrature of tau(rho~) over [-X, X]^n. The box has to reach K plus the
/// window's neighbor radius, otherwise InvalidArgument ("box too small").
TraceReport integral_trace(const NormalizedSymbol& rho, const QuadratureSpec& quad);

/// Quadrature of tau(rho(xi)) for a symbol taken as given, off-lattice values
/// included. Throws InvalidArgument when the order-based tail beyond X
/// exceeds quad.tail_tolerance or m >= -n.
TraceReport integral_trace(const Symbol& rho, const QuadratureSpec& quad);

}  // namespace nctori
