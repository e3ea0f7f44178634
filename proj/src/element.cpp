#include "nctori/element.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "nctori/errors.hpp"

namespace nctori {

namespace {

void sort_merge(std::vector<Term>& terms) {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.key < b.key; });
  std::size_t w = 0;
  for (std::size_t r = 0; r < terms.size();) {
    Term acc = terms[r++];
    while (r < terms.size() && terms[r].key == acc.key) acc.value += terms[r++].value;
    if (acc.value != cplx(0.0, 0.0)) terms[w++] = acc;
  }
  terms.resize(w);
}

template <typename Op>
Element combine(const Element& u, const Element& v, Op op) {
  require_same_theta(u, v);
  std::vector<Term> out;
  out.reserve(u.size() + v.size());
  auto a = u.terms();
  auto b = v.terms();
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].key < b[j].key)) {
      out.push_back({a[i].key, op(a[i].value, cplx(0.0))});
      ++i;
    } else if (i == a.size() || b[j].key < a[i].key) {
      out.push_back({b[j].key, op(cplx(0.0), b[j].value)});
      ++j;
    } else {
      out.push_back({a[i].key, op(a[i].value, b[j].value)});
      ++i;
      ++j;
    }
  }
  return Element::from_keyed(u.theta(), std::move(out));
}

}  // namespace

Element::Element(ThetaPtr theta) : theta_(std::move(theta)) {
  if (!theta_) throw InvalidArgument("element requires a theta matrix");
}

Element Element::scalar(cplx c, ThetaPtr theta) {
  Element e(std::move(theta));
  if (c != cplx(0.0)) e.terms_.push_back({zero_key(e.dim()), c});
  return e;
}

Element Element::monomial(std::span<const int> k, cplx c, ThetaPtr theta) {
  Element e(std::move(theta));
  if (static_cast<int>(k.size()) != e.dim())
    throw DimensionMismatch("monomial index has length " + std::to_string(k.size()) +
                            ", theta has dimension " + std::to_string(e.dim()));
  if (c != cplx(0.0)) e.terms_.push_back({pack(k), c});
  return e;
}

Element Element::from_terms(ThetaPtr theta, std::vector<std::pair<Index, cplx>> terms) {
  const int n = theta->dim();
  std::vector<Term> keyed;
  keyed.reserve(terms.size());
  for (auto& [k, c] : terms) {
    if (static_cast<int>(k.size()) != n) throw DimensionMismatch("term index dimension differs from theta");
    keyed.push_back({pack(k), c});
  }
  return from_keyed(std::move(theta), std::move(keyed));
}

Element Element::from_keyed(ThetaPtr theta, std::vector<Term> terms) {
  Element e(std::move(theta));
  sort_merge(terms);
  e.terms_ = std::move(terms);
  return e;
}

cplx Element::coeff(Key key) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                             [](const Term& t, Key k) { return t.key < k; });
  return (it != terms_.end() && it->key == key) ? it->value : cplx(0.0);
}

cplx Element::coeff(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim()) throw DimensionMismatch("coefficient index dimension");
  return coeff(pack(k));
}

int Element::support_radius() const {
  int r = 0;
  for (const auto& t : terms_) r = std::max(r, linf_norm(t.key, dim()));
  return r;
}

double Element::l2_norm() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::norm(t.value);
  return std::sqrt(s);
}

double Element::max_abs() const {
  double m = 0.0;
  for (const auto& t : terms_) m = std::max(m, std::abs(t.value));
  return m;
}

Element Element::truncated(int r) const {
  Element e(theta_);
  for (const auto& t : terms_)
    if (linf_norm(t.key, dim()) <= r) e.terms_.push_back(t);
  return e;
}

Element Element::pruned(double tol) const {
  Element e(theta_);
  for (const auto& t : terms_)
    if (std::abs(t.value) > tol) e.terms_.push_back(t);
  return e;
}

Element& Element::operator+=(const Element& other) {
  *this = combine(*this, other, [](cplx a, cplx b) { return a + b; });
  return *this;
}

Element& Element::operator-=(const Element& other) {
  *this = combine(*this, other, [](cplx a, cplx b) { return a - b; });
  return *this;
}

Element& Element::operator*=(cplx c) {
  if (c == cplx(0.0)) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.value *= c;
  std::erase_if(terms_, [](const Term& t) { return t.value == cplx(0.0); });
  return *this;
}

void require_same_theta(const Element& u, const Element& v) {
  if (!same_theta(u.theta(), v.theta())) throw ThetaMismatch("elements live over different theta matrices");
}

Element operator+(Element u, const Element& v) { return u += v; }
Element operator-(Element u, const Element& v) { return u -= v; }
Element operator-(Element u) { return u *= cplx(-1.0); }
Element operator*(cplx c, Element u) { return u *= c; }
Element operator*(Element u, cplx c) { return u *= c; }

Element mul(const Element& u, const Element& v) {
  require_same_theta(u, v);
  const int n = u.dim();
  const ThetaMatrix& th = *u.theta();
  if (u.empty() || v.empty()) return Element(u.theta());

  std::vector<int> uk(u.size() * n), vl(v.size() * n);
  for (std::size_t i = 0; i < u.size(); ++i) unpack(u.terms()[i].key, n, {uk.data() + i * n, std::size_t(n)});
  for (std::size_t j = 0; j < v.size(); ++j) unpack(v.terms()[j].key, n, {vl.data() + j * n, std::size_t(n)});

  std::unordered_map<Key, cplx> acc;
  acc.reserve(u.size() * v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::span<const int> k(uk.data() + i * n, n);
    const cplx a = u.terms()[i].value;
    for (std::size_t j = 0; j < v.size(); ++j) {
      std::span<const int> l(vl.data() + j * n, n);
      const double angle = th.pair_angle(k, l);
      acc[key_add(u.terms()[i].key, v.terms()[j].key, n)] += a * v.terms()[j].value * std::polar(1.0, angle);
    }
  }
  std::vector<Term> out;
  out.reserve(acc.size());
  for (const auto& [key, value] : acc) out.push_back({key, value});
  return Element::from_keyed(u.theta(), std::move(out));
}

Element involution(const Element& u) {
  const int n = u.dim();
  std::vector<Term> out;
  out.reserve(u.size());
  int k[kMaxDim];
  for (const auto& t : u.terms()) {
    unpack(t.key, n, std::span<int>(k, n));
    const double angle = u.theta()->star_angle(std::span<const int>(k, n));
    out.push_back({key_neg(t.key, n), std::conj(t.value) * std::polar(1.0, angle)});
  }
  return Element::from_keyed(u.theta(), std::move(out));
}

cplx tau(const Element& u) { return u.coeff(zero_key(u.dim())); }

cplx inner(const Element& u, const Element& v) {
  require_same_theta(u, v);
  cplx s = 0.0;
  for (const auto& t : u.terms()) s += t.value * std::conj(v.coeff(t.key));
  return s;
}

Element delta(std::span<const int> alpha, const Element& u) {
  const int n = u.dim();
  if (static_cast<int>(alpha.size()) != n) throw DimensionMismatch("derivation multi-order dimension");
  std::vector<Term> out;
  out.reserve(u.size());
  int k[kMaxDim];
  for (const auto& t : u.terms()) {
    unpack(t.key, n, std::span<int>(k, n));
    double w = 1.0;
    for (int i = 0; i < n; ++i)
      for (int p = 0; p < alpha[i]; ++p) w *= k[i];
    if (w != 0.0) out.push_back({t.key, t.value * w});
  }
  return Element::from_keyed(u.theta(), std::move(out));
}

Element alpha_act(std::span<const double> s, const Element& u) {
  const int n = u.dim();
  if (static_cast<int>(s.size()) != n) throw DimensionMismatch("group action parameter dimension");
  std::vector<Term> out;
  out.reserve(u.size());
  int k[kMaxDim];
  for (const auto& t : u.terms()) {
    unpack(t.key, n, std::span<int>(k, n));
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += s[i] * k[i];
    out.push_back({t.key, t.value * std::polar(1.0, dot)});
  }
  return Element::from_keyed(u.theta(), std::move(out));
}

double l2_distance(const Element& u, const Element& v) { return (u - v).l2_norm(); }

}  // namespace nctori
