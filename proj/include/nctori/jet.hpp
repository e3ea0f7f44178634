#pragma once
// Truncated multivariate Taylor polynomials ("jets") with complex
// coefficients. Used to get exact xi-derivatives of scalar profiles.
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "nctori/lattice.hpp"

namespace nctori {

using cplx = std::complex<double>;

/// Monomial layout for jets in n variables up to total degree D.
class JetSpace {
 public:
  static std::shared_ptr<const JetSpace> get(int n, int D);

  int dim() const { return n_; }
  int degree() const { return D_; }
  std::size_t size() const { return orders_.size(); }
  const Index& order(std::size_t i) const { return orders_[i]; }
  /// Position of alpha, or size() if |alpha| > D.
  std::size_t position(std::span<const int> alpha) const;
  // pairs (i, j) with order(i) + order(j) == order(r)
  const std::vector<std::pair<std::size_t, std::size_t>>& products(std::size_t r) const { return products_[r]; }

  JetSpace(int n, int D);

 private:
  int n_, D_;
  std::vector<Index> orders_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> products_;
};

class Jet {
 public:
  Jet(std::shared_ptr<const JetSpace> space, cplx constant = 0.0);
  static Jet variable(std::shared_ptr<const JetSpace> space, int i, double value);

  const JetSpace& space() const { return *space_; }
  const std::shared_ptr<const JetSpace>& space_ptr() const { return space_; }
  cplx value() const { return c_[0]; }
  cplx coeff(std::span<const int> alpha) const;
  /// d^alpha at the expansion point: alpha! times the Taylor coefficient.
  cplx derivative(std::span<const int> alpha) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(cplx s);
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, cplx s) { return a *= s; }
  friend Jet operator*(cplx s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b);

  /// f(value + eps) = sum_m taylor[m] eps^m, eps the nilpotent part.
  Jet compose(std::span<const cplx> taylor) const;

 private:
  std::shared_ptr<const JetSpace> space_;
  std::vector<cplx> c_;
};

Jet pow(const Jet& x, cplx s);
Jet exp(const Jet& x);
Jet log(const Jet& x);

}  // namespace nctori
