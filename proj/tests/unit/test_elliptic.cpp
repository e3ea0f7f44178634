#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nctori/elliptic.hpp"
#include "nctori/errors.hpp"
#include "nctori/spectral.hpp"
#include "test_support.hpp"

using namespace nctori;
using namespace nctori::testing;

namespace {

ThetaPtr planar() { return ThetaMatrix::planar(0.3183); }

Element cos1(const ThetaPtr& th, double c) {
  // 1 + 2c cos x_1
  return Element::scalar(1.0, th) + c * (Element::monomial({1, 0}, 1.0, th) + Element::monomial({-1, 0}, 1.0, th));
}

RiemannianMetric test_metric(const ThetaPtr& th, MetricOptions opts = {}) {
  Element z(th);
  return RiemannianMetric({{cos1(th, 0.2), z}, {z, Element::scalar(1.0, th)}}, opts);
}

std::shared_ptr<const ClassicalSymbol> flat_laplacian(const ThetaPtr& th) {
  return classical_from_polynomial(*laplacian_symbol(th), 3);
}

// max over the shell of ||residual||_0 for sigma # rho - 1 (left) or rho # sigma - 1.
double shell_residual(const Symbol& sigma, const Symbol& rho, int R, bool left) {
  const Element one = Element::scalar(1.0, rho.theta());
  double e = 0.0;
  for (const auto& k : shell(rho.dim(), R)) {
    Element r = (left ? exact_sharp_at(sigma, rho, k) : exact_sharp_at(rho, sigma, k)) - one;
    e = std::max(e, r.l2_norm());
  }
  return e;
}

// Fourier coefficients of a function on the circle sampled at x_j = 2 pi j / M.
std::vector<cplx> dft(const std::vector<double>& f, int kmax) {
  const int M = static_cast<int>(f.size());
  std::vector<cplx> c(2 * kmax + 1);
  for (int m = -kmax; m <= kmax; ++m) {
    cplx s = 0.0;
    for (int j = 0; j < M; ++j) s += f[j] * std::polar(1.0, -2.0 * std::numbers::pi * m * j / M);
    c[m + kmax] = s / static_cast<double>(M);
  }
  return c;
}

double hermitian_defect(const Matrix& m) { return (m - m.adjoint()).norm() / m.norm(); }

}  // namespace

TEST_CASE("ellipticity on the sphere") {
  auto th = planar();
  const auto samples = sphere_samples(2, 64);
  const Truncation tr{8, 2};
  SUBCASE("flat laplacian") {
    auto rep = is_elliptic(flat_laplacian(th)->component(0), samples, tr);
    CHECK(rep.elliptic);
    REQUIRE(rep.positivity.has_value());
    CHECK(*rep.positivity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.min_singular_value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.samples == 64);
  }
  SUBCASE("xi_1 is not elliptic") {
    Index e1{1, 0};
    auto xi1 = std::make_shared<PolynomialSymbol>(th, std::map<Index, Element>{{e1, Element::scalar(1.0, th)}});
    auto rep = is_elliptic({1.0, xi1}, samples, tr);
    CHECK(!rep.elliptic);
    CHECK(rep.min_singular_value < 1e-12);
    REQUIRE(rep.worst_direction.size() == 2);
    CHECK(std::abs(rep.worst_direction[0]) < 1e-12);
  }
  SUBCASE("perturbed metric") {
    auto rho = classical_from_polynomial(*laplace_beltrami(test_metric(th)), 3);
    auto rep = is_elliptic(rho->component(0), samples, tr);
    CHECK(rep.elliptic);
    REQUIRE(rep.positivity.has_value());
    CHECK(*rep.positivity > 0.5);
  }
}

TEST_CASE("flat laplacian parametrix terminates") {
  auto th = planar();
  auto jet = parametrix_jet(flat_laplacian(th), 4);
  CHECK(jet->base_order() == cplx(-2.0));
  for (Index k : {Index{1, 0}, Index{3, -4}, Index{-7, 2}}) {
    std::vector<double> xi(k.begin(), k.end());
    auto v = jet->values(xi);
    REQUIRE(v.size() == 4);
    CHECK(v[0].size() == 1);
    CHECK(v[0].coeff({0, 0}) == cplx(1.0 / euclid_norm_sq(k)));
    for (int j = 1; j < 4; ++j) CHECK(v[j].empty());
  }
  CHECK(jet->cached_points() == 3);
  CHECK(jet->component(2).degree == cplx(-4.0));
  CHECK_THROWS_AS(jet->values(std::vector<double>{0.0, 0.0}), InvalidArgument);
}

TEST_CASE("laplacian plus a zeroth order term") {
  auto th = planar();
  std::mt19937_64 rng(4);
  Element a = random_element(th, 1, 5, rng);
  Element one = Element::scalar(1.0, th);
  auto p = std::make_shared<PolynomialSymbol>(
      th, std::map<Index, Element>{{Index{2, 0}, one}, {Index{0, 2}, one}, {Index{0, 0}, a}});
  auto jet = parametrix_jet(classical_from_polynomial(*p, 3), 4);
  for (std::vector<double> xi : {std::vector<double>{2.0, 1.0}, {-3.0, 5.0}, {0.6, -0.8}}) {
    const double r2 = xi[0] * xi[0] + xi[1] * xi[1];
    auto v = jet->values(xi);
    CHECK(v[1].empty());
    // sigma_{-4} = -|xi|^{-4} a
    CHECK(l2_distance(v[2], (-1.0 / (r2 * r2)) * a) < 1e-15);
    // sigma_{-5} = 2 |xi|^{-6} sum_i xi_i delta_i a
    Element expect = (2.0 * xi[0] / (r2 * r2 * r2)) * delta(Index{1, 0}, a) +
                     (2.0 * xi[1] / (r2 * r2 * r2)) * delta(Index{0, 1}, a);
    CHECK(l2_distance(v[3], expect) < 1e-15);
  }
}

TEST_CASE("parametrix of a metric laplacian") {
  auto th = planar();
  auto lb = laplace_beltrami(test_metric(th));
  auto rho = classical_from_polynomial(*lb, 3);
  auto jet = parametrix_jet(rho, 3);
  const Element one = Element::scalar(1.0, th);

  SUBCASE("principal inverse on the sphere") {
    for (const auto& xi : sphere_samples(2, 64)) {
      Element prod = mul(jet->component_at(0, xi), rho->component(0).symbol->eval(xi));
      CHECK((prod - one).l2_norm() <= 1e-9);
    }
  }
  SUBCASE("residuals decay on shells") {
    const std::vector<int> radii{4, 8, 16};
    for (int N = 1; N <= 3; ++N) {
      auto sigma = jet->partial_sum(N);
      for (bool left : {true, false}) {
        std::vector<double> x, y;
        for (int R : radii) {
          x.push_back(R);
          y.push_back(shell_residual(*sigma, *lb, R, left));
        }
        auto fit = fit_power_law(x, y);
        INFO("N = " << N << (left ? " left" : " right") << " slope " << fit.exponent);
        CHECK(fit.exponent <= -N + 0.5);
      }
    }
  }
  SUBCASE("library residuals agree with the shell oracle") {
    auto sigma = jet->partial_sum(2);
    auto res = parametrix_residuals(*sigma, *lb, {4, 8}, false);
    CHECK(res.errors[0] == shell_residual(*sigma, *lb, 4, false));
    CHECK(res.errors[1] == shell_residual(*sigma, *lb, 8, false));
  }
  SUBCASE("origin convention") {
    std::vector<double> zero{0.0, 0.0};
    CHECK(jet->partial_sum(2)->eval(zero).empty());
    CHECK(l2_distance(jet->partial_sum(2, ParametrixJet::OriginValue::Identity)->eval(zero), one) == 0.0);
  }
  SUBCASE("non elliptic input is rejected") {
    Index e1{1, 0};
    auto xi1 = std::make_shared<PolynomialSymbol>(th, std::map<Index, Element>{{e1, one}});
    CHECK_THROWS_AS(parametrix_jet(classical_from_polynomial(*xi1, 2), 2), InvalidArgument);
  }
}

TEST_CASE("metric validation") {
  auto th = planar();
  Element z(th), one = Element::scalar(1.0, th);
  Element u1 = Element::monomial({1, 0}, 1.0, th);
  CHECK_THROWS_AS(RiemannianMetric({{one + u1, z}, {z, one}}), InvalidArgument);
  CHECK_THROWS_AS(RiemannianMetric({{one, 0.1 * one}, {z, one}}), InvalidArgument);
  CHECK_THROWS_AS(RiemannianMetric({{cos1(th, 0.6), z}, {z, one}}), SpectralGapError);
  CHECK_THROWS_AS(RiemannianMetric({{one, z, z}, {z, one, z}, {z, z, one}}), DimensionMismatch);
  auto g = test_metric(th);
  CHECK(g.min_eigenvalue() == doctest::Approx(0.6).epsilon(1e-3));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(l2_distance(involution(g.h(i, j)), g.h(j, i)) < 1e-15);
  // nu^{1/2} nu^{1/2} = nu and g g^{-1} = 1 on the trusted part
  CHECK(l2_distance(mul(g.nu_half(), g.nu_half()).truncated(8), g.nu().truncated(8)) < 1e-13);
  CHECK(l2_distance(mul(g.g(0, 0), g.g_inv(0, 0)).truncated(8), one) < 1e-13);
}

TEST_CASE("identity metric gives the flat laplacian exactly") {
  for (auto th : {planar(), ThetaMatrix::zero(2), ThetaMatrix::make(3, {0, 0.2, 0.5, -0.2, 0, 0.1, -0.5, -0.1, 0})}) {
    auto lb = laplace_beltrami(RiemannianMetric::identity(th));
    auto flat = laplacian_symbol(th);
    REQUIRE(lb->coefficients().size() == flat->coefficients().size());
    for (const auto& [alpha, c] : flat->coefficients()) {
      REQUIRE(lb->coefficients().count(alpha) == 1);
      const auto& d = lb->coefficients().at(alpha);
      REQUIRE(d.size() == c.size());
      for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(d.terms()[i].key == c.terms()[i].key);
        CHECK(d.terms()[i].value == c.terms()[i].value);
      }
    }
    if (th->dim() == 2) {
      const Truncation tr{5, 1};
      CHECK((build_matrix(*lb, tr).entries - build_matrix(*flat, tr).entries).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("commutative metrics match the classical formula") {
  auto th = ThetaMatrix::zero(2);
  Element z(th);
  const int M = 256, r = 8;
  std::vector<double> g1(M), g2(M);
  for (int j = 0; j < M; ++j) {
    const double x = 2.0 * std::numbers::pi * j / M;
    g1[j] = 1.0 + 0.2 * std::cos(x);
    g2[j] = 1.0 + 0.3 * std::cos(x);
  }
  auto lb = laplace_beltrami(RiemannianMetric({{cos1(th, 0.1), z}, {z, cos1(th, 0.15)}}));
  auto coeff_error = [&](const Index& alpha, const std::vector<double>& f) {
    auto c = dft(f, r);
    const Element& a = lb->coefficients().at(alpha);
    double e = 0.0;
    for (int m = -r; m <= r; ++m) e = std::max(e, std::abs(a.coeff({m, 0}) - c[m + r]));
    for (const auto& t : a.terms()) CHECK(unpack(t.key, 2)[1] == 0);
    return e;
  };
  // g^{ii} on the diagonal
  std::vector<double> inv1(M), inv2(M), h11(M), nuinv(M);
  for (int j = 0; j < M; ++j) {
    inv1[j] = 1.0 / g1[j];
    inv2[j] = 1.0 / g2[j];
    h11[j] = std::sqrt(g2[j] / g1[j]);
    nuinv[j] = 1.0 / std::sqrt(g1[j] * g2[j]);
  }
  CHECK(coeff_error({2, 0}, inv1) < 1e-13);
  CHECK(coeff_error({0, 2}, inv2) < 1e-13);
  // a_{e1} = nu^{-1} delta_1 h^{11}; delta_1 multiplies the m-th coefficient by m
  auto hc = dft(h11, 60);
  for (int m = -60; m <= 60; ++m) hc[m + 60] *= static_cast<double>(m);
  std::vector<cplx> prod_c;
  {
    std::vector<cplx> vals(M);
    for (int j = 0; j < M; ++j) {
      cplx s = 0.0;
      for (int m = -60; m <= 60; ++m) s += hc[m + 60] * std::polar(1.0, 2.0 * std::numbers::pi * m * j / M);
      vals[j] = s * nuinv[j];
    }
    for (int m = -r; m <= r; ++m) {
      cplx s = 0.0;
      for (int j = 0; j < M; ++j) s += vals[j] * std::polar(1.0, -2.0 * std::numbers::pi * m * j / M);
      prod_c.push_back(s / static_cast<double>(M));
    }
  }
  const Element& a1 = lb->coefficients().at(Index{1, 0});
  double e = 0.0;
  for (int m = -r; m <= r; ++m) e = std::max(e, std::abs(a1.coeff({m, 0}) - prod_c[m + r]));
  CHECK(e < 1e-13);
  CHECK(lb->coefficients().count(Index{0, 1}) == 0);
  CHECK(lb->coefficients().count(Index{1, 1}) == 0);

  SUBCASE("conformal metric") {
    auto conf = laplace_beltrami(RiemannianMetric({{cos1(th, 0.1), z}, {z, cos1(th, 0.1)}}));
    // h^{ii} = 1 up to round-off, so the first order part is round-off only
    for (const auto& [alpha, a] : conf->coefficients())
      if (degree(alpha) == 1) CHECK(a.l2_norm() < 1e-14);
    CHECK(l2_distance(conf->coefficients().at(Index{2, 0}), conf->coefficients().at(Index{0, 2})) == 0.0);
  }
}

TEST_CASE("symmetry of the metric laplacian") {
  auto th = planar();
  auto g = test_metric(th);
  const Truncation tr{14, 8};
  Matrix D = build_matrix(*divergence_form(g), tr).trusted_block();
  Matrix L = build_matrix(*laplace_beltrami(g), tr).trusted_block();
  CHECK(hermitian_defect(D) < 1e-14);
  // Delta_g is symmetric for the nu-weighted pairing only.
  CHECK(hermitian_defect(L) > 1e-3);

  SUBCASE("divergence form is nu times Delta_g") {
    MetricOptions wide;
    wide.support = 20;
    auto gw = test_metric(th, wide);
    auto lw = laplace_beltrami(gw);
    auto dw = divergence_form(gw);
    for (std::vector<double> xi : {std::vector<double>{1.0, 0.0}, {2.5, -1.0}, {-4.0, 3.0}}) {
      Element lhs = mul(gw.nu(), lw->eval(xi)).truncated(12);
      CHECK(l2_distance(lhs, dw->eval(xi).truncated(12)) < 1e-12 * lhs.l2_norm());
    }
  }
}

TEST_CASE("metric laplacian spectrum") {
  auto th = planar();
  auto g = test_metric(th);
  auto spec = spectrum_generalized(PsiDO(divergence_form(g)), g.nu().truncated(g.options().support),
                                   Truncation{16, 8}, true);
  CHECK(spec.values.size() == 17 * 17);
  for (auto z : spec.values) {
    CHECK(z.real() >= -1e-9);
    CHECK(z.imag() == 0.0);
  }
  CHECK(std::abs(spec.values[0]) < 1e-9);
  for (double r : spec.residuals) CHECK(r <= 1e-9 * spec.matrix_norm);
  int checked = 0;
  // single-mode eigenvectors (U_2^{+-1}, U_2^{+-2}, the constant) come back degenerate
  for (std::size_t i = 0; i < 20; ++i) {
    auto fit = smoothness_decay(spec.vectors[i]);
    if (fit.degenerate) continue;
    INFO("eigenvector " << i << " slope " << fit.exponent);
    CHECK(fit.exponent <= -6.0);
    ++checked;
  }
  CHECK(checked >= 8);

  SUBCASE("flat metric reproduces the lattice") {
    auto flat = RiemannianMetric::identity(th);
    auto fs = spectrum_generalized(PsiDO(divergence_form(flat)), flat.nu(), Truncation{6, 1}, false);
    auto plain = spectrum(PsiDO(laplacian_symbol(th)), Truncation{6, 1}, true);
    for (std::size_t i = 0; i < fs.values.size(); ++i) CHECK(std::abs(fs.values[i] - plain.values[i]) < 1e-12);
  }
}

TEST_CASE("elliptic estimate probe") {
  auto th = planar();
  SUBCASE("bessel potentials") {
    for (double m : {-2.0, 1.0, 3.0}) {
      auto probe = elliptic_estimate_probe(PsiDO(japanese_symbol(th, m)), 0.5, -1.5 + std::min(m, 0.0), 40,
                                           Truncation{8, 1});
      CHECK(probe.constant <= 1.0 + 1e-12);
      CHECK(probe.samples == 40);
      CHECK(probe.radius == 4);
    }
  }
  SUBCASE("laplacian is stable under doubling") {
    PsiDO lap(laplacian_symbol(th));
    auto a = elliptic_estimate_probe(lap, 0.0, -2.0, 30, Truncation{12, 1});
    auto b = elliptic_estimate_probe(lap, 0.0, -2.0, 30, Truncation{24, 1});
    CHECK(std::isfinite(a.constant));
    CHECK(b.constant < 2.0 * a.constant);
    CHECK(a.constant > 0.5);
  }
  SUBCASE("homogeneous in u") {
    std::mt19937_64 rng(9);
    Element u = random_element(th, 4, 20, rng);
    PsiDO lap(laplacian_symbol(th));
    CHECK(rel_err(estimate_ratio(lap, u, 0.0, -2.0), estimate_ratio(lap, cplx(-3.7, 2.0) * u, 0.0, -2.0)) < 1e-14);
  }
  SUBCASE("needs t below s + m") {
    CHECK_THROWS_AS(elliptic_estimate_probe(PsiDO(laplacian_symbol(th)), 0.0, 2.5, 5, Truncation{8, 1}),
                    InvalidArgument);
  }
}

TEST_CASE("truncated solves") {
  auto th = planar();
  Element one = Element::scalar(1.0, th);
  auto shifted = std::make_shared<PolynomialSymbol>(
      th, std::map<Index, Element>{{Index{2, 0}, one}, {Index{0, 2}, one}, {Index{0, 0}, one}});
  SUBCASE("diagonal case") {
    Index k{3, -2};
    auto res = truncated_solve(PsiDO(shifted), Element::monomial(k, 1.0, th), Truncation{6, 1});
    CHECK(l2_distance(res.solution, Element::monomial(k, 1.0 / 14.0, th)) < 1e-15);
    CHECK(res.residual < 1e-15);
  }
  SUBCASE("singular truncation") {
    CHECK_THROWS_AS(truncated_solve(PsiDO(laplacian_symbol(th)), one, Truncation{4, 1}), NumericError);
  }

  auto g = test_metric(th);
  auto lb = laplace_beltrami(g);
  auto coeffs = lb->coefficients();
  if (auto it = coeffs.find(Index{0, 0}); it != coeffs.end()) {
    it->second += one;
  } else {
    coeffs.emplace(Index{0, 0}, one);
  }
  auto op = std::make_shared<PolynomialSymbol>(th, coeffs);
  const Truncation tr{16, 8};

  SUBCASE("smooth data gives smooth solutions") {
    std::vector<std::pair<Index, cplx>> terms;
    BoxBasis box(2, 8);
    for (std::size_t p = 0; p < box.size(); ++p) {
      auto k = box.coords(p);
      terms.emplace_back(Index(k.begin(), k.end()), std::pow(1.0 + euclid_norm_sq(k), -3.0));
    }
    Element f = Element::from_terms(th, std::move(terms));
    auto res = truncated_solve(PsiDO(op), f, tr);
    CHECK(res.residual < 1e-12);
    auto ff = smoothness_decay(f), uf = smoothness_decay(res.solution);
    INFO("f slope " << ff.exponent << " u slope " << uf.exponent);
    CHECK(uf.exponent <= ff.exponent);
  }
  SUBCASE("parametrix preconditioning") {
    std::mt19937_64 rng(13);
    Element f = random_element(th, 8, 120, rng);
    // Two terms: the three-term sum is singular at some |xi| = 1 points.
    auto jet = parametrix_jet(classical_from_polynomial(*op, 3), 2);
    SolveOptions plain;
    plain.method = SolveOptions::Method::Gmres;
    plain.max_iterations = 6;
    SolveOptions pre = plain;
    pre.preconditioner = jet->partial_sum(2, ParametrixJet::OriginValue::Identity);
    auto a = truncated_solve(PsiDO(op), f, tr, plain);
    auto b = truncated_solve(PsiDO(op), f, tr, pre);
    INFO("plain " << a.residual << " preconditioned " << b.residual);
    CHECK(b.residual < 0.1 * a.residual);
    CHECK(a.iterations == 6);
    auto direct = truncated_solve(PsiDO(op), f, tr);
    pre.max_iterations = 200;
    auto full = truncated_solve(PsiDO(op), f, tr, pre);
    CHECK(full.converged);
    CHECK(l2_distance(full.solution, direct.solution) < 1e-9 * direct.solution.l2_norm());
  }
}
