#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "nctori/errors.hpp"
#include "nctori/spectral.hpp"
#include "test_support.hpp"

using namespace nctori;
using namespace nctori::testing;

namespace {

ThetaPtr planar() { return ThetaMatrix::planar(0.3183); }

std::vector<double> real_parts(const SpectrumResult& r) {
  std::vector<double> v;
  for (auto z : r.values) v.push_back(z.real());
  return v;
}

std::vector<double> lattice_squares(int n, int R) {
  BoxBasis box(n, R);
  std::vector<double> v;
  for (std::size_t p = 0; p < box.size(); ++p) v.push_back(euclid_norm_sq(box.coords(p)));
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("sobolev norms of monomials and sums") {
  auto th = planar();
  for (Index k : {Index{0, 0}, Index{2, -1}, Index{-4, 3}})
    for (double s : {-1.5, 0.0, 0.5, 2.0})
      CHECK(rel_err(sobolev_norm(Element::monomial(k, 1.0, th), s), std::pow(1.0 + euclid_norm_sq(k), s / 2)) <
            1e-15);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Element u = random_element(th, 6, 30, rng);
    double plain = 0.0;
    for (const auto& t : u.terms()) plain += std::norm(t.value);
    CHECK(rel_err(sobolev_norm(u, 0.0), std::sqrt(plain)) < 1e-15);
    CHECK(sobolev_norm(u, -1.0) <= sobolev_norm(u, 0.0));
    CHECK(sobolev_norm(u, 0.3) <= sobolev_norm(u, 1.7));
    for (double s : {-2.0, 0.5, 3.0})
      CHECK(std::abs(lambda_apply(s, u).l2_norm() - sobolev_norm(u, s)) <= 1e-13 * sobolev_norm(u, s));
    CHECK(l2_distance(lambda_apply(0.0, u), u) == 0.0);
    Element composed = lambda_apply(1.2, lambda_apply(-0.7, u));
    CHECK(l2_distance(composed, lambda_apply(0.5, u)) <= 1e-13 * u.l2_norm());
  }
}

TEST_CASE("duality pairing and its maximizer") {
  auto th = planar();
  SUBCASE("single mode") {
    Index k{3, -2};
    const double s = 1.5;
    auto rep = duality_gap(Element::monomial(k, 1.0, th), s, 200);
    CHECK(rel_err(rep.exact_norm, std::pow(1.0 + euclid_norm_sq(k), -s / 2)) < 1e-15);
    // maximizer is a multiple of (U^k)^{-1} = chi(k,-k)^{-1} U^{-k}
    CHECK(rep.maximizer.size() == 1);
    CHECK(rep.maximizer.terms()[0].key == pack(Index{-3, 2}));
    CHECK(std::abs(rep.maximizer_pairing - rep.exact_norm) < 1e-15);
    CHECK(rep.sup_trials <= rep.exact_norm * (1 + 1e-12));
  }
  SUBCASE("random elements") {
    std::mt19937_64 rng(11);
    for (double s : {-1.0, 0.5, 2.0}) {
      Element u = random_element(th, 5, 25, rng);
      auto rep = duality_gap(u, s, 1000);
      CHECK(rep.trials == 1000);
      CHECK(rep.violations == 0);
      CHECK(rep.max_holder_ratio <= 1.0 + 1e-12);
      CHECK(std::abs(rep.maximizer_pairing - rep.exact_norm) <= 1e-10 * rep.exact_norm);
      CHECK(std::abs(rep.maximizer_norm - 1.0) < 1e-12);
      CHECK(rep.sup_trials <= rep.exact_norm * (1 + 1e-12));
    }
  }
  SUBCASE("pairing is tau of the product") {
    std::mt19937_64 rng(3);
    Element u = random_element(th, 4, 15, rng), v = random_element(th, 4, 15, rng);
    CHECK(std::abs(pairing(u, v) - tau(mul(u, v))) < 1e-13);
  }
  SUBCASE("same seed, same report") {
    std::mt19937_64 rng(5);
    Element u = random_element(th, 3, 10, rng);
    auto a = duality_gap(u, 1.0, 50, 99), b = duality_gap(u, 1.0, 50, 99);
    CHECK(a.sup_trials == b.sup_trials);
    CHECK(a.seed == 99);
  }
}

TEST_CASE("flat laplacian spectrum") {
  auto th = planar();
  const Truncation tr{12, 2};
  auto spec = spectrum(PsiDO(laplacian_symbol(th)), tr, true, true);
  CHECK(spec.trusted_radius == 10);
  CHECK(real_parts(spec) == lattice_squares(2, 10));
  CHECK(spec.validity_cut == doctest::Approx(36.0));
  for (double r : spec.residuals) CHECK(r <= 1e-9 * spec.matrix_norm);
  CHECK(spec.vectors.size() == spec.values.size());
  CHECK(spec.vectors[0].size() == 1);
  CHECK(spec.vectors[0].terms()[0].value == cplx(1.0, 0.0));

  SUBCASE("independent of theta") {
    auto other = spectrum(PsiDO(laplacian_symbol(ThetaMatrix::planar(0.71))), tr, true);
    auto flat = spectrum(PsiDO(laplacian_symbol(ThetaMatrix::zero(2))), tr, true);
    CHECK(real_parts(other) == real_parts(spec));
    CHECK(real_parts(flat) == real_parts(spec));
  }
  SUBCASE("shift by one") {
    Element one = Element::scalar(1.0, th);
    auto p = std::make_shared<PolynomialSymbol>(
        th, std::map<Index, Element>{{Index{2, 0}, one}, {Index{0, 2}, one}, {Index{0, 0}, one}});
    auto shifted = spectrum(PsiDO(p), tr, true);
    auto base = real_parts(spec);
    auto moved = real_parts(shifted);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(moved[i] == base[i] + 1.0);
  }
  SUBCASE("general solver agrees") {
    auto g = spectrum(PsiDO(laplacian_symbol(th)), Truncation{6, 1}, false);
    CHECK(real_parts(g) == lattice_squares(2, 5));
    for (auto z : g.values) CHECK(z.imag() == 0.0);
  }
}

TEST_CASE("hermitian residuals on a coupled operator") {
  auto th = planar();
  std::mt19937_64 rng(21);
  Element a = random_selfadjoint(th, 1, 4, rng);
  a += Element::scalar(3.0 * a.l2_norm(), th);
  auto sym = std::make_shared<SumSymbol>(
      th, SymbolOrder{2.0},
      std::vector<std::pair<cplx, SymbolPtr>>{{1.0, laplacian_symbol(th)}, {1.0, constant_symbol(a)}});
  // Delta + L_a is Hermitian on the trusted window since L_a is.
  auto spec = spectrum(PsiDO(sym), Truncation{8, 2}, true, true);
  REQUIRE(!spec.residuals.empty());
  for (double r : spec.residuals) CHECK(r <= 1e-9 * spec.matrix_norm);
  for (std::size_t i = 1; i < spec.values.size(); ++i) CHECK(spec.values[i - 1].real() <= spec.values[i].real());
  for (const auto& v : spec.vectors) CHECK(std::abs(v.l2_norm() - 1.0) < 1e-12);
}

TEST_CASE("weyl ratio") {
  auto th = planar();
  auto spec = spectrum(PsiDO(laplacian_symbol(th)), Truncation{25, 2}, true);
  CHECK(lattice_count(2, 400) == 1257);
  double prev = 1e9;
  for (double lam : {100.0, 200.0, 400.0}) {
    auto w = weyl_ratio(spec, 2, lam);
    CHECK(w.count == lattice_count(2, lam));
    CHECK(w.weyl_constant == doctest::Approx(std::numbers::pi));
    CHECK(std::abs(w.ratio - 1.0) < prev);
    prev = std::abs(w.ratio - 1.0);
  }
  CHECK(std::abs(weyl_ratio(spec, 2, 400).ratio - 1.0) < 0.05);
  auto zero = weyl_ratio(spec, 2, 0.0);
  CHECK(zero.count == 1);
  CHECK(zero.degenerate);
  CHECK_THROWS_AS(weyl_ratio(spec, 2, 24.0 * 24.0), InvalidArgument);
  CHECK(weyl_ratio(spec, 2, 23.0 * 23.0).count == lattice_count(2, 529));
}

TEST_CASE("schatten slopes") {
  auto th = planar();
  const Truncation tr{16, 2};
  auto lam = PsiDO(japanese_symbol(th, -2.0));
  auto sv = singular_values(lam, tr);
  for (std::size_t i = 1; i < sv.values.size(); ++i) CHECK(sv.values[i - 1].real() >= sv.values[i].real());
  // singular values are the sorted (1+|k|^2)^{-1}
  auto sq = lattice_squares(2, 14);
  for (std::size_t i = 0; i < sq.size(); ++i) CHECK(rel_err(sv.values[i].real(), 1.0 / (1.0 + sq[i])) < 1e-13);
  auto fit = schatten_slope(lam, tr, 20, 200);
  CHECK(std::abs(fit.exponent + 1.0) < 0.1);
  CHECK(fit.x_lo >= 20);
  CHECK(fit.x_hi <= 200);

  auto scaled = PsiDO(japanese_symbol(-2.0, Element::scalar(cplx(0.0, -4.5), th)));
  CHECK(schatten_slope(scaled, tr, 20, 200).exponent == doctest::Approx(fit.exponent).epsilon(1e-12));

  auto gauss = std::make_shared<ScalarSymbol>(profile::gaussian(1.0), Element::scalar(1.0, th), SymbolOrder{-40.0});
  auto gfit = schatten_slope(PsiDO(gauss), tr, 20, 200);
  CHECK(gfit.exponent < -2.0);

  CHECK_THROWS_AS(schatten_slope(PsiDO(laplacian_symbol(th)), tr, 20, 200), InvalidArgument);
}

TEST_CASE("smoothness decay") {
  auto th = planar();
  auto single = smoothness_decay(Element::monomial({3, 1}, 2.0, th));
  CHECK(single.degenerate);
  CHECK(!single.note.empty());

  std::vector<std::pair<Index, cplx>> terms;
  BoxBasis box(2, 30);
  for (std::size_t p = 0; p < box.size(); ++p) {
    auto k = box.coords(p);
    terms.emplace_back(Index(k.begin(), k.end()), std::pow(1.0 + euclid_norm_sq(k), -4.0));
  }
  auto fit = smoothness_decay(Element::from_terms(th, std::move(terms)));
  CHECK(!fit.degenerate);
  CHECK(std::abs(fit.exponent + 8.0) < 0.5);
  CHECK_THROWS_AS(smoothness_decay(Element(th)), InvalidArgument);
}

TEST_CASE("spectrum export") {
  auto th = planar();
  auto spec = spectrum(PsiDO(laplacian_symbol(th)), Truncation{4, 1}, true);
  auto dir = std::filesystem::temp_directory_path() / "nctori_spec_test";
  std::filesystem::create_directories(dir);
  const auto stem = (dir / "lap").string();
  export_spectrum(spec, stem, 17);
  std::ifstream csv(stem + ".csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "index,re,im");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 49);
  std::ifstream js(stem + ".json");
  std::string body((std::istreambuf_iterator<char>(js)), {});
  CHECK(body.find("\"seed\": 17") != std::string::npos);
  CHECK(body.find("\"trusted_radius\": 3") != std::string::npos);
  std::filesystem::remove_all(dir);
}
