#include "nctori/jet.hpp"

#include <map>
#include <mutex>

#include "nctori/errors.hpp"

namespace nctori {

JetSpace::JetSpace(int n, int D) : n_(n), D_(D), orders_(multi_orders_below(n, D + 1)) {
  products_.resize(orders_.size());
  Index sum(n);
  for (std::size_t i = 0; i < orders_.size(); ++i)
    for (std::size_t j = 0; j < orders_.size(); ++j) {
      for (int t = 0; t < n; ++t) sum[t] = orders_[i][t] + orders_[j][t];
      const std::size_t r = position(sum);
      if (r < orders_.size()) products_[r].emplace_back(i, j);
    }
}

std::shared_ptr<const JetSpace> JetSpace::get(int n, int D) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
  if (n < 1 || D < 0) throw InvalidArgument("JetSpace: bad shape");
  std::lock_guard lock(mu);
  auto& slot = cache[{n, D}];
  if (!slot) slot = std::make_shared<JetSpace>(n, D);
  return slot;
}

std::size_t JetSpace::position(std::span<const int> alpha) const {
  if (nctori::degree(alpha) > D_) return orders_.size();
  // orders_ is short; a linear scan keeps the layout trivially consistent
  for (std::size_t i = 0; i < orders_.size(); ++i)
    if (std::equal(alpha.begin(), alpha.end(), orders_[i].begin())) return i;
  return orders_.size();
}

Jet::Jet(std::shared_ptr<const JetSpace> space, cplx constant) : space_(std::move(space)), c_(space_->size(), 0.0) {
  c_[0] = constant;
}

Jet Jet::variable(std::shared_ptr<const JetSpace> space, int i, double value) {
  Jet x(space, value);
  if (space->degree() > 0) {
    Index e(space->dim(), 0);
    e[i] = 1;
    x.c_[space->position(e)] = 1.0;
  }
  return x;
}

cplx Jet::coeff(std::span<const int> alpha) const {
  const std::size_t p = space_->position(alpha);
  return p < c_.size() ? c_[p] : cplx(0.0);
}

cplx Jet::derivative(std::span<const int> alpha) const {
  if (degree(alpha) > space_->degree()) throw InvalidArgument("Jet::derivative: order exceeds jet degree");
  return coeff(alpha) * multi_factorial(alpha);
}

Jet& Jet::operator+=(const Jet& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(cplx s) {
  for (auto& c : c_) c *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.space_);
  for (std::size_t k = 0; k < r.c_.size(); ++k) {
    cplx acc = 0.0;
    for (auto [i, j] : a.space_->products(k)) acc += a.c_[i] * b.c_[j];
    r.c_[k] = acc;
  }
  return r;
}

Jet Jet::compose(std::span<const cplx> taylor) const {
  Jet eps = *this;
  eps.c_[0] = 0.0;
  const int D = std::min<int>(space_->degree(), static_cast<int>(taylor.size()) - 1);
  Jet r(space_, taylor[D]);
  for (int m = D - 1; m >= 0; --m) {
    r = r * eps;
    r.c_[0] += taylor[m];
  }
  return r;
}

Jet pow(const Jet& x, cplx s) {
  const int D = x.space().degree();
  const cplx x0 = x.value();
  if (x0 == 0.0 && !(D == 0 && s.real() > 0.0)) throw NumericError("Jet pow: expansion point at zero");
  std::vector<cplx> t(D + 1);
  cplx binom = 1.0;
  for (int m = 0; m <= D; ++m) {
    t[m] = binom * std::pow(x0, s - static_cast<double>(m));
    binom *= (s - static_cast<double>(m)) / static_cast<double>(m + 1);
  }
  if (x0 == 0.0) t[0] = 0.0;
  return x.compose(t);
}

Jet exp(const Jet& x) {
  const int D = x.space().degree();
  std::vector<cplx> t(D + 1);
  const cplx e = std::exp(x.value());
  for (int m = 0; m <= D; ++m) t[m] = e / factorial(m);
  return x.compose(t);
}

Jet log(const Jet& x) {
  const int D = x.space().degree();
  const cplx x0 = x.value();
  if (x0 == 0.0) throw NumericError("Jet log: expansion point at zero");
  std::vector<cplx> t(D + 1);
  t[0] = std::log(x0);
  for (int m = 1; m <= D; ++m) t[m] = (m % 2 ? 1.0 : -1.0) / (static_cast<double>(m) * std::pow(x0, m));
  return x.compose(t);
}

}  // namespace nctori
