#include "nctori/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "nctori/elliptic.hpp"
#include "nctori/spectral.hpp"
#include "nctori/trace.hpp"

namespace nctori {

namespace {

Element gaussian_box(const ThetaPtr& theta, int r, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  BoxBasis box(theta->dim(), r);
  std::vector<std::pair<Index, cplx>> terms;
  for (std::size_t p = 0; p < box.size(); ++p) {
    auto k = box.coords(p);
    terms.emplace_back(Index(k.begin(), k.end()), cplx(g(rng), g(rng)));
  }
  return Element::from_terms(theta, std::move(terms));
}

Index unit(int n, int j) {
  Index e(n, 0);
  e[j] = 1;
  return e;
}

CheckResult timed(const std::string& name, double tol, const std::function<double()>& body) {
  CheckResult r;
  r.name = name;
  r.tolerance = tol;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.error = body();
    r.passed = std::isfinite(r.error) && r.error <= tol;
  } catch (const std::exception& e) {
    r.error = INFINITY;
    r.detail = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

bool CheckSuite::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

CheckSuite algebra_checks(const ThetaPtr& theta, int K, int trials, std::uint64_t seed, double tol) {
  const int n = theta->dim();
  std::mt19937_64 rng(seed);
  std::vector<Element> us, vs, ws;
  for (int t = 0; t < trials; ++t) {
    us.push_back(gaussian_box(theta, K / 2, rng));
    vs.push_back(gaussian_box(theta, K / 2, rng));
    ws.push_back(gaussian_box(theta, K / 2, rng));
  }
  const Element one = Element::scalar(1.0, theta);
  auto worst = [&](const std::function<double(const Element&, const Element&, const Element&)>& f) {
    return [&, f] {
      double e = 0.0;
      for (int t = 0; t < trials; ++t) e = std::max(e, f(us[t], vs[t], ws[t]));
      return e;
    };
  };
  CheckSuite s{"algebra n=" + std::to_string(n), {}};
  s.checks.push_back(timed("associativity", tol, worst([](const Element& u, const Element& v, const Element& w) {
                             return l2_distance(mul(mul(u, v), w), mul(u, mul(v, w))) /
                                    (u.l2_norm() * v.l2_norm() * w.l2_norm());
                           })));
  s.checks.push_back(timed("unit", tol, worst([&](const Element& u, const Element&, const Element&) {
                             return (l2_distance(mul(one, u), u) + l2_distance(mul(u, one), u)) / u.l2_norm();
                           })));
  s.checks.push_back(timed("involution anti-homomorphism", tol,
                           worst([](const Element& u, const Element& v, const Element&) {
                             return l2_distance(involution(mul(u, v)), mul(involution(v), involution(u))) /
                                    (u.l2_norm() * v.l2_norm());
                           })));
  s.checks.push_back(timed("involution is involutive", tol, worst([](const Element& u, const Element&, const Element&) {
                             return l2_distance(involution(involution(u)), u) / u.l2_norm();
                           })));
  s.checks.push_back(timed("traciality", tol, worst([](const Element& u, const Element& v, const Element&) {
                             return std::abs(tau(mul(u, v)) - tau(mul(v, u))) / (u.l2_norm() * v.l2_norm());
                           })));
  s.checks.push_back(timed("tau o delta_j = 0", tol, worst([n](const Element& u, const Element&, const Element&) {
                             double e = 0.0;
                             for (int j = 0; j < n; ++j) e = std::max(e, std::abs(tau(delta(unit(n, j), u))));
                             return e / u.l2_norm();
                           })));
  s.checks.push_back(timed("integration by parts", tol, worst([n](const Element& u, const Element& v, const Element&) {
                             double e = 0.0;
                             for (int j = 0; j < n; ++j) {
                               const Element du = delta(unit(n, j), u), dv = delta(unit(n, j), v);
                               const double scale = du.l2_norm() * v.l2_norm() + u.l2_norm() * dv.l2_norm();
                               e = std::max(e, std::abs(tau(mul(du, v)) + tau(mul(u, dv))) / scale);
                             }
                             return e;
                           })));
  s.checks.push_back(timed("leibniz rule", tol, worst([n](const Element& u, const Element& v, const Element&) {
                             double e = 0.0;
                             for (int j = 0; j < n; ++j) {
                               const Index ej = unit(n, j);
                               const Element du = delta(ej, u), dv = delta(ej, v);
                               const double scale = du.l2_norm() * v.l2_norm() + u.l2_norm() * dv.l2_norm();
                               e = std::max(e, l2_distance(delta(ej, mul(u, v)), mul(du, v) + mul(u, dv)) / scale);
                             }
                             return e;
                           })));
  return s;
}

std::vector<CheckSuite> selftest_suites(std::uint64_t seed) {
  std::vector<CheckSuite> out;
  const auto th = ThetaMatrix::planar(0.3183);
  const auto th3 = ThetaMatrix::make(3, {0, 0.2, 0.5, -0.2, 0, 0.1, -0.5, -0.1, 0});
  std::mt19937_64 rng(seed);
  const Element one = Element::scalar(1.0, th);
  const Element u1 = Element::monomial({1, 0}, 1.0, th) + Element::monomial({-1, 0}, 1.0, th);

  out.push_back(algebra_checks(th, 4, 3, seed));
  out.push_back(algebra_checks(th3, 4, 2, seed + 1));
  out.push_back(algebra_checks(ThetaMatrix::zero(2), 4, 3, seed + 2));
  out.back().name += " theta=0";

  CheckSuite core{"nc_core", {}};
  core.checks.push_back(timed("inverse element", 1e-10, [&] {
    Element u = one + 0.3 * u1;
    Element inv = inverse_element(u, Truncation{30, 1});
    return l2_distance(mul(u, inv).truncated(20), one);
  }));
  out.push_back(std::move(core));

  CheckSuite sym{"symbols", {}};
  sym.checks.push_back(timed("homogeneity of |xi|^-2", 1e-13, [&] {
    return homogeneity_check(norm_power_component(-2.0, one), sphere_samples(2, 16), {2.0, 3.5});
  }));
  sym.checks.push_back(timed("exact derivative against differences", 1e-6, [&] {
    auto s = japanese_symbol(th, -1.5);
    const std::vector<double> xi{1.5, -0.5};
    const Index alpha{1, 1};
    return l2_distance(s->derivative(alpha, xi), finite_difference_derivative(*s, alpha, xi, 1e-3));
  }));
  out.push_back(std::move(sym));

  CheckSuite ps{"psido_engine", {}};
  const Element a = gaussian_box(th, 1, rng), b = gaussian_box(th, 1, rng);
  ps.checks.push_back(timed("matrix product is the exact composite", 1e-11, [&] {
    SymbolPtr r1 = japanese_symbol(-1.0, a), r2 = constant_symbol(b);
    const Truncation tr{7, 2};
    auto m1 = build_matrix(*r1, tr), m2 = build_matrix(*r2, tr);
    Matrix prod = m1.entries * m2.entries;
    auto exact = build_matrix(*exact_sharp_symbol(r1, r2), tr);
    double e = 0.0;
    for (auto c : exact.trusted())
      for (Eigen::Index r = 0; r < prod.rows(); ++r) e = std::max(e, std::abs(exact.entries(r, c) - prod(r, c)));
    return e / std::max(1.0, prod.cwiseAbs().maxCoeff());
  }));
  ps.checks.push_back(timed("exact adjoint symbol", 1e-13, [&] {
    SymbolPtr r = japanese_symbol(-1.0, a);
    const Truncation tr{6, 1};
    Matrix d = build_matrix(*exact_adjoint_symbol(r), tr).trusted_block() -
               build_matrix(*r, tr).trusted_block().adjoint();
    return d.cwiseAbs().maxCoeff();
  }));
  out.push_back(std::move(ps));

  CheckSuite el{"elliptic", {}};
  el.checks.push_back(timed("flat parametrix jet", 0.0, [&] {
    auto jet = parametrix_jet(classical_from_polynomial(*laplacian_symbol(th), 3), 3);
    const std::vector<double> xi{3.0, -4.0};
    auto v = jet->values(xi);
    double e = l2_distance(v[0], Element::scalar(1.0 / 25.0, th));
    for (std::size_t j = 1; j < v.size(); ++j) e += v[j].l2_norm();
    return e;
  }));
  el.checks.push_back(timed("laplacian is elliptic", 1e-12, [&] {
    auto lap = classical_from_polynomial(*laplacian_symbol(th), 3);
    auto rep = is_elliptic(lap->component(0), sphere_samples(2, 16), Truncation{4, 2});
    return rep.elliptic ? std::abs(rep.min_singular_value - 1.0) : INFINITY;
  }));
  out.push_back(std::move(el));

  CheckSuite sp{"spectral_sobolev", {}};
  const Element u = gaussian_box(th, 3, rng);
  sp.checks.push_back(timed("lambda^s and sobolev norms", 1e-13, [&] {
    double e = 0.0;
    for (double s : {-1.5, 0.5, 2.0})
      e = std::max(e, std::abs(lambda_apply(s, u).l2_norm() - sobolev_norm(u, s)) / sobolev_norm(u, s));
    return e;
  }));
  sp.checks.push_back(timed("duality and hoelder", 1e-10, [&] {
    auto rep = duality_gap(u, 1.0, 200, seed);
    return std::abs(rep.maximizer_pairing - rep.exact_norm) / rep.exact_norm +
           static_cast<double>(rep.violations) + std::max(0.0, rep.max_holder_ratio - 1.0 - 1e-12);
  }));
  sp.checks.push_back(timed("flat spectrum is the lattice squares", 0.0, [&] {
    auto spec = spectrum(PsiDO(laplacian_symbol(th)), Truncation{6, 1}, true);
    std::vector<double> sq;
    BoxBasis box(2, 5);
    for (std::size_t p = 0; p < box.size(); ++p) sq.push_back(euclid_norm_sq(box.coords(p)));
    std::sort(sq.begin(), sq.end());
    double e = 0.0;
    for (std::size_t i = 0; i < sq.size(); ++i) e = std::max(e, std::abs(spec.values[i] - sq[i]));
    return e;
  }));
  out.push_back(std::move(sp));

  CheckSuite tr{"trace_tools", {}};
  tr.checks.push_back(timed("matrix diagonal equals lattice trace", 1e-13, [&] {
    auto rho = japanese_symbol(-6.0, a + one);
    const cplx d = trace_matrix_diag(PsiDO(rho), Truncation{12, 2}).value;
    const cplx l = trace_lattice(*rho, 10).value;
    return std::abs(d - l) / std::abs(l);
  }));
  tr.checks.push_back(timed("meyer window", 1e-6, [] {
    auto c = build_meyer_phi(2)->checks();
    return std::max({c.origin_error, c.lattice_max, c.integral_error, c.partition_error});
  }));
  out.push_back(std::move(tr));
  return out;
}

}  // namespace nctori
