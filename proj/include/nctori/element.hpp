#pragma once

// Finitely supported elements of the smooth noncommutative torus.

#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "nctori/lattice.hpp"
#include "nctori/theta.hpp"

namespace nctori {

using cplx = std::complex<double>;

struct Term {
  Key key;
  cplx value;
};

/// u = sum_k u_k U^k with finitely many nonzero u_k.
///
/// Terms are kept sorted by key (lexicographic in k) and exact zeros are
/// dropped, so iteration and serialization are deterministic. Elements are
/// values: every operation returns a new element.
class Element {
 public:
  explicit Element(ThetaPtr theta);

  static Element scalar(cplx c, ThetaPtr theta);
  static Element monomial(std::span<const int> k, cplx c, ThetaPtr theta);
  static Element monomial(std::initializer_list<int> k, cplx c, ThetaPtr theta) {
    return monomial(std::span<const int>(k.begin(), k.size()), c, std::move(theta));
  }
  /// Duplicate modes are summed.
  static Element from_terms(ThetaPtr theta, std::vector<std::pair<Index, cplx>> terms);
  /// Takes ownership of (key, value) pairs; sorts and merges them.
  static Element from_keyed(ThetaPtr theta, std::vector<Term> terms);

  int dim() const { return theta_->dim(); }
  const ThetaPtr& theta() const { return theta_; }
  std::span<const Term> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  cplx coeff(std::span<const int> k) const;
  cplx coeff(std::initializer_list<int> k) const {
    return coeff(std::span<const int>(k.begin(), k.size()));
  }
  cplx coeff(Key key) const;

  /// max |k|_inf over the support; 0 for the zero element.
  int support_radius() const;
  /// Fourier l2 norm (the Hilbert norm ||u||_0).
  double l2_norm() const;
  double max_abs() const;

  /// Drops modes with |k|_inf > r.
  Element truncated(int r) const;
  /// Drops coefficients with |u_k| <= tol.
  Element pruned(double tol) const;

  Element& operator+=(const Element& other);
  Element& operator-=(const Element& other);
  Element& operator*=(cplx c);

 private:
  ThetaPtr theta_;
  std::vector<Term> terms_;
};

void require_same_theta(const Element& u, const Element& v);

Element operator+(Element u, const Element& v);
Element operator-(Element u, const Element& v);
Element operator-(Element u);
Element operator*(cplx c, Element u);
Element operator*(Element u, cplx c);

/// Twisted convolution (uv)_m = sum_{k+l=m} u_k v_l chi(k, l).
Element mul(const Element& u, const Element& v);
inline Element operator*(const Element& u, const Element& v) { return mul(u, v); }

/// u^*, with (u^*)_{-k} = conj(u_k) chi_star(k).
Element involution(const Element& u);

/// tau(u) = u_0.
cplx tau(const Element& u);

/// <u, v> = tau(u v^*) = sum_k u_k conj(v_k).
cplx inner(const Element& u, const Element& v);

/// delta^alpha u, coefficient-wise (delta^alpha u)_k = k^alpha u_k.
Element delta(std::span<const int> alpha, const Element& u);

/// alpha_s(u), coefficient-wise phase e^{i s.k}.
Element alpha_act(std::span<const double> s, const Element& u);

/// ||u - v||_0.
double l2_distance(const Element& u, const Element& v);

}  // namespace nctori
