#include "nctori/psido.hpp"

#include <fstream>
#include <iomanip>

#include "json.hpp"

#include "nctori/errors.hpp"
#include "nctori/parallel.hpp"

namespace nctori {

PsiDO::PsiDO(SymbolPtr symbol) : symbol_(std::move(symbol)) {
  if (!symbol_) throw InvalidArgument("PsiDO: null symbol");
}

Element apply(const PsiDO& P, const Element& u) {
  require_same_theta(Element(P.symbol().theta()), u);
  const int n = u.dim();
  std::vector<Term> acc;
  Index k(n);
  for (const auto& t : u.terms()) {
    unpack(t.key, n, k);
    Element img = mul(P.symbol().eval_at(k), Element::monomial(k, t.value, u.theta()));
    acc.insert(acc.end(), img.terms().begin(), img.terms().end());
  }
  return Element::from_keyed(u.theta(), std::move(acc));
}

Matrix OperatorMatrix::trusted_block() const {
  const auto w = trusted();
  Matrix b(w.size(), w.size());
  for (std::size_t c = 0; c < w.size(); ++c)
    for (std::size_t r = 0; r < w.size(); ++r) b(r, c) = entries(w[r], w[c]);
  return b;
}

OperatorMatrix build_matrix(const PsiDO& P, const Truncation& trunc) { return build_matrix(P.symbol(), trunc); }

OperatorMatrix build_matrix(const Symbol& rho, const Truncation& trunc) {
  trunc.validate();
  if (rho.support_radius() > trunc.margin)
    throw MarginViolation("build_matrix: symbol support radius " + std::to_string(rho.support_radius()) +
                          " exceeds margin " + std::to_string(trunc.margin));
  OperatorMatrix out{Matrix(), trunc, std::make_shared<const BoxBasis>(rho.dim(), trunc.K)};
  const BoxBasis& box = *out.box;
  out.entries = Matrix::Zero(box.size(), box.size());
  const int declared = rho.support_radius();
  parallel_for(box.size(), [&](std::size_t col) {
    auto l = box.coords(col);
    Element value = rho.eval_at(l);
    if (value.support_radius() > declared)
      throw MarginViolation("build_matrix: value at " + to_string(l) + " has support radius " +
                            std::to_string(value.support_radius()) + " beyond the declared " +
                            std::to_string(declared));
    Element img = mul(value, Element::monomial(l, 1.0, rho.theta()));
    for (const auto& t : img.terms())
      if (auto p = box.position(t.key)) out.entries(*p, col) = t.value;
  });
  return out;
}

Matrix delta_matrix(const BoxBasis& box, int j) {
  Matrix d = Matrix::Zero(box.size(), box.size());
  for (std::size_t p = 0; p < box.size(); ++p) d(p, p) = box.coords(p)[j];
  return d;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()[0];
}

Element exact_sharp_at(const Symbol& rho1, const Symbol& rho2, std::span<const int> k) {
  if (!same_theta(rho1.theta(), rho2.theta())) throw ThetaMismatch("exact_sharp_at: symbols on different theta");
  const auto& theta = rho1.theta();
  const int n = rho1.dim();
  Element v = mul(rho2.eval_at(k), Element::monomial(k, 1.0, theta));
  std::vector<Term> acc;
  Index l(n);
  for (const auto& t : v.terms()) {
    unpack(t.key, n, l);
    Element img = mul(rho1.eval_at(l), Element::monomial(l, t.value, theta));
    acc.insert(acc.end(), img.terms().begin(), img.terms().end());
  }
  Element w = Element::from_keyed(theta, std::move(acc));
  return mul(w, involution(Element::monomial(k, 1.0, theta)));
}

SymbolPtr exact_sharp_symbol(SymbolPtr rho1, SymbolPtr rho2) {
  const int r = rho1->support_radius() + rho2->support_radius();
  const SymbolOrder q{rho1->order().q + rho2->order().q};
  auto name = "exact(" + rho1->describe() + " # " + rho2->describe() + ")";
  return std::make_shared<LatticeSymbol>(
      rho1->theta(), q, r, [rho1, rho2](std::span<const int> k) { return exact_sharp_at(*rho1, *rho2, k); }, name);
}

Element sharp_expansion(const Symbol& rho1, const Symbol& rho2, int N, std::span<const double> xi) {
  if (!same_theta(rho1.theta(), rho2.theta())) throw ThetaMismatch("sharp_expansion: symbols on different theta");
  if (N < 1) throw InvalidArgument("sharp_expansion: N must be positive");
  const Element r2 = rho2.eval(xi);
  Element sum(rho1.theta());
  for (const auto& alpha : multi_orders_below(rho1.dim(), N)) {
    Element d2 = delta(alpha, r2);
    if (d2.empty()) continue;
    sum += (1.0 / multi_factorial(alpha)) * mul(rho1.derivative(alpha, xi), d2);
  }
  return sum;
}

SymbolPtr sharp_expansion_symbol(SymbolPtr rho1, SymbolPtr rho2, int N) {
  const int r = rho1->support_radius() + rho2->support_radius();
  const SymbolOrder q{rho1->order().q + rho2->order().q};
  return std::make_shared<FunctionSymbol>(
      rho1->theta(), q, r,
      [rho1, rho2, N](std::span<const double> xi) { return sharp_expansion(*rho1, *rho2, N, xi); }, nullptr,
      "sharp_" + std::to_string(N) + "(" + rho1->describe() + ", " + rho2->describe() + ")");
}

ShellNorms remainder_shell_norms(const Symbol& rho1, const Symbol& rho2, int N, const std::vector<int>& radii) {
  ShellNorms out;
  out.radii = radii;
  std::vector<double> xs;
  for (int R : radii) {
    const auto pts = shell(rho1.dim(), R);
    std::vector<double> err(pts.size(), 0.0), scale(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t i) {
      std::vector<double> xi(pts[i].begin(), pts[i].end());
      Element exact = exact_sharp_at(rho1, rho2, pts[i]);
      err[i] = l2_distance(exact, sharp_expansion(rho1, rho2, N, xi));
      scale[i] = exact.l2_norm();
    });
    out.errors.push_back(*std::max_element(err.begin(), err.end()));
    out.scales.push_back(*std::max_element(scale.begin(), scale.end()));
  }
  std::vector<double> ys;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (out.errors[i] <= 1e-13 * out.scales[i]) continue;
    xs.push_back(radii[i]);
    ys.push_back(out.errors[i]);
  }
  out.fit = fit_power_law(xs, ys);
  return out;
}

Element exact_adjoint_at(const Symbol& rho, std::span<const int> l) {
  const auto& theta = rho.theta();
  const int n = rho.dim();
  const int r = rho.support_radius();
  const Key lk = pack(l);
  std::vector<std::pair<Index, cplx>> terms;
  // only k with |k - l|_inf <= r can reach U^l
  BoxBasis local(n, r);
  Index k(n);
  for (std::size_t p = 0; p < local.size(); ++p) {
    auto d = local.coords(p);
    for (int i = 0; i < n; ++i) k[i] = l[i] + d[i];
    const cplx entry = mul(rho.eval_at(k), Element::monomial(k, 1.0, theta)).coeff(lk);
    if (entry != 0.0) terms.emplace_back(k, std::conj(entry));
  }
  Element image = Element::from_terms(theta, std::move(terms));
  return mul(image, involution(Element::monomial(l, 1.0, theta)));
}

SymbolPtr exact_adjoint_symbol(SymbolPtr rho) {
  const int r = rho->support_radius();
  const SymbolOrder q{std::conj(rho->order().q)};
  auto name = "exact_adjoint(" + rho->describe() + ")";
  return std::make_shared<LatticeSymbol>(
      rho->theta(), q, r, [rho](std::span<const int> l) { return exact_adjoint_at(*rho, l); }, name);
}

Element star_expansion(const Symbol& rho, int N, std::span<const double> xi) {
  if (N < 1) throw InvalidArgument("star_expansion: N must be positive");
  Element sum(rho.theta());
  for (const auto& alpha : multi_orders_below(rho.dim(), N))
    sum += (1.0 / multi_factorial(alpha)) * delta(alpha, involution(rho.derivative(alpha, xi)));
  return sum;
}

SymbolPtr star_expansion_symbol(SymbolPtr rho, int N) {
  const int r = rho->support_radius();
  const SymbolOrder q{std::conj(rho->order().q)};
  return std::make_shared<FunctionSymbol>(
      rho->theta(), q, r, [rho, N](std::span<const double> xi) { return star_expansion(*rho, N, xi); }, nullptr,
      "star_" + std::to_string(N) + "(" + rho->describe() + ")");
}

std::shared_ptr<const ClassicalSymbol> compose_classical(const ClassicalSymbol& rho, const ClassicalSymbol& sigma,
                                                         int J) {
  if (J < 1) throw InvalidArgument("compose_classical: J must be positive");
  if (static_cast<int>(rho.components().size()) < J || static_cast<int>(sigma.components().size()) < J)
    throw InvalidArgument("compose_classical: jets shorter than " + std::to_string(J) + " components");
  if (!rho.exact_derivatives()) throw InvalidArgument("compose_classical: left jet lacks analytic derivatives");
  if (!same_theta(rho.theta(), sigma.theta())) throw ThetaMismatch("compose_classical: jets on different theta");
  const int n = rho.dim();
  const cplx q = rho.order().q + sigma.order().q;
  std::vector<HomogeneousComponent> comps;
  for (int j = 0; j < J; ++j) {
    const cplx d = q - static_cast<double>(j);
    std::vector<std::pair<cplx, SymbolPtr>> terms;
    for (int a = 0; a <= j; ++a)
      for (const auto& alpha : multi_orders_of_degree(n, a))
        for (int k = 0; k + a <= j; ++k) {
          const int l = j - a - k;
          const auto& rk = rho.component(k).symbol;
          const auto& sl = sigma.component(l).symbol;
          if (rk->is_zero() || sl->is_zero() || (a > 0 && sl->is_central())) continue;
          SymbolPtr left = a ? std::make_shared<PartialSymbol>(rk, alpha) : rk;
          SymbolPtr right = a ? std::make_shared<DeltaSymbol>(sl, alpha) : sl;
          terms.emplace_back(1.0 / multi_factorial(alpha), std::make_shared<ProductSymbol>(left, right));
        }
    if (terms.empty()) {
      comps.push_back(HomogeneousComponent::zero(rho.theta(), d));
    } else {
      comps.push_back({d, std::make_shared<SumSymbol>(rho.theta(), SymbolOrder{d}, std::move(terms))});
    }
  }
  return std::make_shared<ClassicalSymbol>(rho.theta(), q, std::move(comps));
}

void export_operator_matrix(const OperatorMatrix& m, const std::string& stem) {
  std::ofstream csv(stem + ".csv");
  if (!csv) throw InvalidArgument("cannot write " + stem + ".csv");
  csv << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.entries.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.entries.cols(); ++c) {
      if (c) csv << ',';
      csv << m.entries(r, c).real() << ',' << m.entries(r, c).imag();
    }
    csv << '\n';
  }
  nlohmann::json meta;
  meta["n"] = m.box->dim();
  meta["K"] = m.trunc.K;
  meta["margin"] = m.trunc.margin;
  meta["trusted_radius"] = m.trusted_radius();
  meta["size"] = m.box->size();
  meta["layout"] = "row r of the csv holds entries (r, c) for c = 0..size-1 as re,im pairs";
  meta["basis_order"] = "lexicographic in (k_1..k_n); position = sum_i (k_i + K) (2K+1)^(n-1-i)";
  std::ofstream js(stem + ".json");
  if (!js) throw InvalidArgument("cannot write " + stem + ".json");
  js << meta.dump(2) << '\n';
}

}  // namespace nctori
