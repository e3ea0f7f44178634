#include "nctori/representation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "nctori/errors.hpp"
#include "nctori/parallel.hpp"

namespace nctori {

namespace {

void require_margin(const Element& u, const Truncation& trunc, const char* what) {
  trunc.validate();
  if (u.support_radius() > trunc.margin)
    throw MarginViolation(std::string(what) + ": support radius " + std::to_string(u.support_radius()) +
                          " exceeds margin " + std::to_string(trunc.margin));
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<std::size_t> origin_class(const Element& u, const BoxBasis& box) {
  const std::size_t origin = *box.position(zero_key(box.dim()));
  for (auto& cls : coupling_classes(u, box))
    if (std::binary_search(cls.begin(), cls.end(), origin)) return cls;
  return {origin};
}

double cut_distance(cplx z, ScalarFunction::Cut cut) {
  switch (cut) {
    case ScalarFunction::Cut::None:
      return std::numeric_limits<double>::infinity();
    case ScalarFunction::Cut::Zero:
      return std::abs(z);
    case ScalarFunction::Cut::NegativeReal:
      return z.real() > 0.0 ? std::abs(z) : std::abs(z.imag());
  }
  return 0.0;
}

void check_gap(const Eigen::VectorXcd& eig, const ScalarFunction& f, double gap) {
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double d = cut_distance(eig[i], f.cut);
    if (d <= gap)
      throw SpectralGapError("funcalc(" + f.name + "): eigenvalue (" + std::to_string(eig[i].real()) + "," +
                             std::to_string(eig[i].imag()) + ") within gap " + std::to_string(gap) +
                             " of the singular set");
  }
}

}  // namespace

Matrix left_mult_block(const Element& u, const BoxBasis& box, const std::vector<std::size_t>& positions) {
  const int n = u.dim();
  std::unordered_map<std::size_t, std::size_t> local;
  local.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) local[positions[i]] = i;

  std::vector<Index> supp;
  for (const auto& t : u.terms()) supp.push_back(unpack(t.key, n));

  Matrix L = Matrix::Zero(positions.size(), positions.size());
  Index k(n);
  for (std::size_t col = 0; col < positions.size(); ++col) {
    auto l = box.coords(positions[col]);
    for (std::size_t t = 0; t < supp.size(); ++t) {
      for (int i = 0; i < n; ++i) k[i] = l[i] + supp[t][i];
      auto p = box.position(k);
      if (!p) continue;
      auto it = local.find(*p);
      if (it == local.end()) continue;
      L(it->second, col) = u.terms()[t].value * std::polar(1.0, u.theta()->pair_angle(supp[t], l));
    }
  }
  return L;
}

Matrix left_mult_matrix(const Element& u, const Truncation& trunc) {
  require_margin(u, trunc, "left_mult_matrix");
  const int n = u.dim();
  BoxBasis box(n, trunc.K);
  std::vector<Index> supp;
  for (const auto& t : u.terms()) supp.push_back(unpack(t.key, n));

  Matrix L = Matrix::Zero(box.size(), box.size());
  parallel_for(box.size(), [&](std::size_t col) {
    auto l = box.coords(col);
    Index k(n);
    for (std::size_t t = 0; t < supp.size(); ++t) {
      for (int i = 0; i < n; ++i) k[i] = l[i] + supp[t][i];
      if (auto row = box.position(k))
        L(*row, col) = u.terms()[t].value * std::polar(1.0, u.theta()->pair_angle(supp[t], l));
    }
  });
  return L;
}

std::vector<std::vector<std::size_t>> coupling_classes(const Element& u, const BoxBasis& box) {
  const int n = box.dim();
  if (u.dim() != n) throw DimensionMismatch("coupling_classes: element and box dimensions differ");
  UnionFind uf(box.size());
  std::vector<Index> supp;
  for (const auto& t : u.terms()) supp.push_back(unpack(t.key, n));
  Index k(n);
  for (std::size_t p = 0; p < box.size(); ++p) {
    auto l = box.coords(p);
    for (const auto& s : supp) {
      for (int i = 0; i < n; ++i) k[i] = l[i] + s[i];
      if (auto q = box.position(k)) uf.unite(p, *q);
    }
  }
  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t p = 0; p < box.size(); ++p) {
    const std::size_t r = uf.find(p);
    auto [it, inserted] = slot.emplace(r, classes.size());
    if (inserted) classes.emplace_back();
    classes[it->second].push_back(p);
  }
  return classes;
}

Element element_from_vector(const Vector& x, const std::vector<std::size_t>& positions, const BoxBasis& box,
                            const ThetaPtr& theta, int radius) {
  std::vector<Term> terms;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (linf_norm(box.coords(positions[i])) > radius) continue;
    if (x[i] != cplx(0.0)) terms.push_back({box.key(positions[i]), x[i]});
  }
  return Element::from_keyed(theta, std::move(terms));
}

namespace fn {
ScalarFunction identity() { return {[](cplx z) { return z; }, ScalarFunction::Cut::None, "identity"}; }
ScalarFunction exp() { return {[](cplx z) { return std::exp(z); }, ScalarFunction::Cut::None, "exp"}; }
ScalarFunction log() { return {[](cplx z) { return std::log(z); }, ScalarFunction::Cut::NegativeReal, "log"}; }
ScalarFunction sqrt() {
  return {[](cplx z) { return std::sqrt(z); }, ScalarFunction::Cut::NegativeReal, "sqrt"};
}
ScalarFunction reciprocal() { return {[](cplx z) { return 1.0 / z; }, ScalarFunction::Cut::Zero, "reciprocal"}; }
ScalarFunction power(double s) {
  return {[s](cplx z) { return std::pow(z, s); }, ScalarFunction::Cut::NegativeReal, "power"};
}
}  // namespace fn

Element funcalc(const ScalarFunction& f, const Element& u, const Truncation& trunc, const FuncalcOptions& opts) {
  require_margin(u, trunc, "funcalc");
  const int n = u.dim();
  BoxBasis box(n, trunc.K);
  const auto cls = origin_class(u, box);
  const std::size_t origin = std::lower_bound(cls.begin(), cls.end(), *box.position(zero_key(n))) - cls.begin();
  Matrix L = left_mult_block(u, box, cls);

  const double scale = std::max(1.0, u.l2_norm());
  Vector x;
  if (l2_distance(u, involution(u)) <= opts.hermitian_tol * scale) {
    Matrix H = 0.5 * (L + L.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) throw NumericError("funcalc: selfadjoint eigensolver failed");
    Eigen::VectorXcd ev = es.eigenvalues().cast<cplx>();
    check_gap(ev, f, opts.gap);
    Vector fx(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) fx[i] = f.f(ev[i]);
    const Matrix& V = es.eigenvectors();
    x = V * fx.asDiagonal() * V.row(origin).adjoint();
  } else {
    const double comm = l2_distance(mul(u, involution(u)), mul(involution(u), u));
    if (comm > opts.normal_tol * scale * scale) throw InvalidArgument("funcalc: element is not normal");
    Eigen::ComplexEigenSolver<Matrix> es(L);
    if (es.info() != Eigen::Success) throw NumericError("funcalc: eigensolver failed");
    check_gap(es.eigenvalues(), f, opts.gap);
    const Matrix& V = es.eigenvectors();
    Eigen::JacobiSVD<Matrix> svd(V);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] <= 0.0 || sv[0] / sv[sv.size() - 1] > opts.max_eigvec_cond)
      throw NumericError("funcalc: truncated matrix is too far from diagonalizable");
    Vector fx(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < fx.size(); ++i) fx[i] = f.f(es.eigenvalues()[i]);
    Vector e0 = Vector::Zero(L.rows());
    e0[origin] = 1.0;
    x = V * fx.asDiagonal() * V.partialPivLu().solve(e0);
  }
  return element_from_vector(x, cls, box, u.theta(), trunc.inner());
}

double funcalc_convergence(const ScalarFunction& f, const Element& u, const Truncation& trunc,
                           const FuncalcOptions& opts) {
  const Element coarse = funcalc(f, u, trunc, opts);
  const Element fine = funcalc(f, u, Truncation{2 * trunc.K, trunc.margin}, opts).truncated(trunc.inner());
  return l2_distance(coarse, fine);
}

double min_singular_value_at_origin(const Element& u, const Truncation& trunc) {
  require_margin(u, trunc, "min_singular_value_at_origin");
  BoxBasis box(u.dim(), trunc.K);
  Matrix L = left_mult_block(u, box, origin_class(u, box));
  Eigen::BDCSVD<Matrix> svd(L);
  return svd.singularValues()[svd.singularValues().size() - 1];
}

Element inverse_element(const Element& u, const Truncation& trunc, double gap) {
  require_margin(u, trunc, "inverse_element");
  const int n = u.dim();
  BoxBasis box(n, trunc.K);
  const auto cls = origin_class(u, box);
  const std::size_t origin = std::lower_bound(cls.begin(), cls.end(), *box.position(zero_key(n))) - cls.begin();
  Matrix L = left_mult_block(u, box, cls);

  Eigen::BDCSVD<Matrix> svd(L);
  const double smin = svd.singularValues()[svd.singularValues().size() - 1];
  if (!(smin > gap))
    throw NumericError("inverse_element: smallest singular value " + std::to_string(smin) + " <= gap " +
                       std::to_string(gap));
  Vector e0 = Vector::Zero(L.rows());
  e0[origin] = 1.0;
  Vector x = L.partialPivLu().solve(e0);
  Element inv = element_from_vector(x, cls, box, u.theta(), trunc.inner());

  // The truncated system reproduces u x = 1 exactly on |k|_inf <= K - 2M.
  const int check = trunc.K - 2 * trunc.margin;
  if (check >= 0) {
    const double resid = l2_distance(mul(u, inv).truncated(check), Element::scalar(1.0, u.theta()));
    const double sigma_max = svd.singularValues()[0];
    if (resid > 1e-9 * std::max(1.0, sigma_max / smin))
      throw NumericError("inverse_element: residual check failed (" + std::to_string(resid) + ")");
  }
  return inv;
}

}  // namespace nctori
