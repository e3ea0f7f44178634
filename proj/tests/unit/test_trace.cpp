#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nctori/errors.hpp"
#include "nctori/trace.hpp"
#include "test_support.hpp"

using namespace nctori;
using namespace nctori::testing;

namespace {

ThetaPtr planar() { return ThetaMatrix::planar(0.3183); }

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

// sum_{|k|_inf <= K} (1+|k|^2)^{-3}, summed in box order
double lattice_oracle(int K) {
  double s = 0.0;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b) s += std::pow(1.0 + a * a + b * b, -3.0);
  return s;
}

std::shared_ptr<const MeyerWindow> window2() {
  static auto w = build_meyer_phi(2);
  return w;
}

}  // namespace

TEST_CASE("meyer window") {
  auto w = window2();
  const double twopi = 2.0 * std::numbers::pi;
  for (double t : {0.0, 0.3, 1.0, 2.5, 3.1, 4.4, 5.9, twopi})
    CHECK(std::abs(w->theta1(t) + w->theta1(twopi - t) - 1.0 / twopi) < 1e-15);
  CHECK(w->theta1(1.95 * std::numbers::pi) == 0.0);
  CHECK(w->theta1(-0.7) == w->theta1(0.7));
  CHECK(std::abs(w->phi(std::vector<double>{0.0, 0.0}) - 1.0) < 1e-10);
  double worst = 0.0;
  for (int a = -8; a <= 8; ++a)
    for (int b = -8; b <= 8; ++b)
      if (a || b) worst = std::max(worst, std::abs(w->phi_at(Index{a, b})));
  CHECK(worst < 1e-8);
  CHECK(w->checks().integral_error < 1e-6);
  CHECK(w->checks().lattice_max < 1e-10);
  // phi is real, even, and not itself concentrated on the lattice
  CHECK(w->phi1(0.5) == doctest::Approx(w->phi1(-0.5)).epsilon(1e-14));
  CHECK(std::abs(w->phi1(0.5)) > 0.1);
  CHECK(w->phi1(0.37) == doctest::Approx(w->phi1(0.37 + 1e-12)).epsilon(1e-9));

  auto w3 = build_meyer_phi(3);
  CHECK(std::abs(w3->phi(std::vector<double>{0.0, 0.0, 0.0}) - 1.0) < 1e-10);
  CHECK(std::abs(w3->phi_at(Index{0, 2, -1})) < 1e-10);

  // integrating phi_1 over [-4, 4] only is far from 1
  MeyerOptions narrow;
  narrow.neighbor_radius = 2;
  CHECK_THROWS_AS(build_meyer_phi(2, narrow), NumericError);
  narrow = {};
  narrow.width = 4.0;
  CHECK_THROWS_AS(build_meyer_phi(2, narrow), InvalidArgument);
}

TEST_CASE("lattice trace") {
  auto th = planar();
  auto lam = japanese_symbol(th, -6.0);
  auto r = trace_lattice(*lam, 64);
  CHECK(rel(r.value, lattice_oracle(64)) < 1e-14);
  CHECK(r.value.imag() == 0.0);
  CHECK(r.tail_bound > 0.0);
  CHECK(r.tail_bound < 1e-6);
  CHECK(trace_lattice(*lam, 16).tail_bound > r.tail_bound);

  auto slow = japanese_symbol(th, -2.0);
  CHECK(std::isinf(trace_lattice(*slow, 8).tail_bound));

  std::mt19937_64 rng(4);
  Element a = random_element(th, 2, 9, rng);
  auto point = std::make_shared<LatticeSymbol>(th, SymbolOrder{-10.0}, 2, [a, th](std::span<const int> k) {
    return linf_norm(k) == 0 ? a : Element(th);
  });
  for (int K : {0, 3, 10}) CHECK(trace_lattice(*point, K).value == tau(a));
}

TEST_CASE("matrix diagonal equals the lattice sum") {
  auto th = planar();
  auto lam = japanese_symbol(th, -6.0);
  auto d = trace_matrix_diag(PsiDO(lam), Truncation{66, 2});
  CHECK(d.K == 64);
  CHECK(rel(d.value, trace_lattice(*lam, 64).value) < 1e-13);
  CHECK(rel(d.value, lattice_oracle(64)) < 1e-14);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    Element a = random_element(th, 2, 12, rng);
    Element b = random_element(th, 1, 5, rng);
    auto rho = std::make_shared<LatticeSymbol>(th, SymbolOrder{-5.0}, 2, [a, b](std::span<const int> k) {
      const double x = 1.0 + euclid_norm_sq(k);
      return std::pow(x, -2.5) * a + std::sin(k[0] + 0.5 * k[1]) * std::pow(x, -3.0) * b;
    });
    auto lat = trace_lattice(*rho, 10);
    auto diag = trace_matrix_diag(PsiDO(rho), Truncation{12, 2});
    CHECK(std::abs(diag.value - lat.value) <= 1e-13 * std::abs(lat.value));
  }

  // no U^0 component anywhere: trace 0 whatever the rest
  Element off = Element::monomial({1, 0}, 2.0, th) + Element::monomial({-1, 1}, cplx(0.0, 3.0), th);
  auto traceless = std::make_shared<ScalarSymbol>(profile::japanese(-6.0), off, SymbolOrder{-6.0});
  CHECK(trace_matrix_diag(PsiDO(traceless), Truncation{10, 2}).value == cplx(0.0));

  CHECK_THROWS_AS(trace_matrix_diag(PsiDO(traceless), Truncation{10, 0}), MarginViolation);
}

TEST_CASE("positivity of a*a weighted traces") {
  auto th = planar();
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    Element a = random_element(th, 3, 10, rng);
    Element aa = mul(involution(a), a);
    const double c = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    auto rho = std::make_shared<LatticeSymbol>(th, SymbolOrder{-4.0}, aa.support_radius(),
                                               [aa, c](std::span<const int> k) {
                                                 const double w = std::pow(1.0 + euclid_norm_sq(k), -2.0) *
                                                                  (1.0 + c * std::cos(k[0] - k[1]));
                                                 return w * aa;
                                               });
    auto r = trace_lattice(*rho, 12);
    CHECK(r.value.real() >= 0.0);
    CHECK(std::abs(r.value.imag()) <= 1e-14 * r.value.real());
  }
}

TEST_CASE("normalized symbols") {
  auto th = planar();
  auto w = window2();
  std::mt19937_64 rng(6);
  Element a = random_element(th, 1, 4, rng) + Element::scalar(2.0, th);
  auto rho = std::make_shared<LatticeSymbol>(th, SymbolOrder{-3.0}, 1, [a](std::span<const int> k) {
    return std::pow(1.0 + euclid_norm_sq(k), -1.5) * std::cos(0.7 * k[0]) * a;
  });
  auto tilde = normalize_symbol(*rho, w, 8);
  CHECK(tilde->support_radius() == 1);
  for (int x = -8; x <= 8; x += 2)
    for (int y = -8; y <= 8; y += 3) {
      Index k{x, y};
      Element exact = rho->eval_at(k);
      CHECK(l2_distance(tilde->eval_at(k), exact) <= 1e-8 * std::max(1e-3, exact.l2_norm()));
      CHECK(std::abs(tilde->trace_density(std::vector<double>{double(x), double(y)}) - tau(exact)) < 1e-8);
    }
  // off the lattice the value is a genuine blend
  std::vector<double> mid{0.5, 0.25};
  CHECK(std::abs(tau(tilde->eval(mid)) - tilde->trace_density(mid)) < 1e-14);
  CHECK(std::abs(tilde->trace_density(mid)) > 1e-3);

  SUBCASE("zero stays zero") {
    auto zero = std::make_shared<LatticeSymbol>(th, SymbolOrder{-3.0}, 0,
                                                [th](std::span<const int>) { return Element(th); });
    auto z = normalize_symbol(*zero, w, 5);
    for (auto xi : {std::vector<double>{0.3, -1.2}, std::vector<double>{4.0, 4.5}}) {
      CHECK(z->eval(xi).empty());
      CHECK(z->trace_density(xi) == cplx(0.0));
    }
  }
  SUBCASE("normalizing twice changes nothing on the lattice") {
    auto twice = normalize_symbol(*tilde, w, 6);
    for (int x = -6; x <= 6; ++x)
      for (int y = -6; y <= 6; y += 4) {
        Index k{x, y};
        CHECK(l2_distance(twice->eval_at(k), tilde->eval_at(k)) <= 1e-8);
      }
  }
}

TEST_CASE("integral trace against the lattice trace") {
  auto th = planar();
  auto w = window2();
  auto lam = japanese_symbol(th, -6.0);
  const double lattice = trace_lattice(*lam, 64).value.real();
  auto tilde = normalize_symbol(*lam, w, 64);

  auto trap = integral_trace(*tilde, QuadratureSpec{0.25, 96.0});
  CHECK(std::abs(trap.value - lattice) <= 1e-4 * lattice);
  CHECK(trap.nodes == 769u * 769u);
  auto simp = integral_trace(*tilde, QuadratureSpec{0.125, 96.0, QuadratureSpec::Rule::Simpson});
  CHECK(std::abs(simp.value - lattice) <= 1e-4 * lattice);
  // the sum over nodes in the reordered form against the pointwise density
  {
    auto small = normalize_symbol(*lam, w, 4);
    QuadratureSpec q{0.5, 36.0};
    auto fast = integral_trace(*small, q);
    const auto wts = [&](int j) { return (j == 0 || j == q.intervals()) ? 0.5 * q.h : q.h; };
    cplx direct = 0.0;
    for (int i = 0; i <= q.intervals(); ++i)
      for (int j = 0; j <= q.intervals(); ++j) {
        std::vector<double> xi{-q.X + i * q.h, -q.X + j * q.h};
        direct += wts(i) * wts(j) * small->trace_density(xi);
      }
    CHECK(std::abs(fast.value - direct) < 1e-12);
  }

  // the symbol itself integrates to about pi/2, not to the lattice sum
  auto raw = integral_trace(*lam, QuadratureSpec{0.25, 64.0});
  CHECK(std::abs(raw.value.real() - std::numbers::pi / 2) < 1e-3);
  CHECK(std::abs(raw.value.real() - lattice) > 1e-3 * lattice);
  CHECK(raw.tail_bound > 0.0);

  CHECK_THROWS_AS(integral_trace(*tilde, QuadratureSpec{0.25, 80.0}), InvalidArgument);
  CHECK_THROWS_AS(integral_trace(*lam, QuadratureSpec{0.25, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(integral_trace(*japanese_symbol(th, -2.0), QuadratureSpec{0.25, 64.0}), InvalidArgument);
  CHECK_THROWS_AS(integral_trace(*tilde, QuadratureSpec{0.35, 96.0}), InvalidArgument);
  CHECK_THROWS_AS(integral_trace(*tilde, QuadratureSpec{0.25, 96.125, QuadratureSpec::Rule::Simpson}),
                  InvalidArgument);
}

TEST_CASE("symmetric symbols have real integral traces") {
  auto th = planar();
  auto rho = std::make_shared<LatticeSymbol>(th, SymbolOrder{-6.0}, 0, [th](std::span<const int> k) {
    const double x = 1.0 + euclid_norm_sq(k);
    return Element::scalar(std::pow(x, -3.0) * cplx(1.0, k[0] / std::sqrt(x)), th);
  });
  auto tilde = normalize_symbol(*rho, window2(), 20);
  auto r = integral_trace(*tilde, QuadratureSpec{0.25, 52.0});
  CHECK(std::abs(r.value.imag()) < 1e-12);
  CHECK(r.value.real() > 1.0);
}

TEST_CASE("trace report json") {
  auto th = planar();
  auto lam = japanese_symbol(th, -6.0);
  auto j = trace_report_json(trace_lattice(*lam, 4));
  CHECK(j.find("\"method\": \"lattice\"") != std::string::npos);
  CHECK(j.find("\"K\": 4") != std::string::npos);
  CHECK(j.find("\"re\"") != std::string::npos);
  CHECK(j.find("\"tail_bound\"") != std::string::npos);
  auto q = trace_report_json(integral_trace(*lam, QuadratureSpec{0.5, 32.0}));
  CHECK(q.find("\"rule\": \"trapezoid\"") != std::string::npos);
  CHECK(q.find("\"nodes\": 16641") != std::string::npos);
  CHECK(trace_report_json(trace_lattice(*japanese_symbol(th, -1.0), 2)).find("\"tail_bound\": null") !=
        std::string::npos);
}
