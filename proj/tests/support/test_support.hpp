#pragma once

// Shared helpers for the unit and acceptance suites: seeded random elements
// and the word-reordering oracle for the commutation relations.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "nctori/element.hpp"

namespace nctori::testing {

inline Element random_element(const ThetaPtr& theta, int radius, int count, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coord(-radius, radius);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<Index, cplx>> terms;
  for (int t = 0; t < count; ++t) {
    Index k(theta->dim());
    for (auto& c : k) c = coord(rng);
    terms.emplace_back(std::move(k), cplx(gauss(rng), gauss(rng)));
  }
  return Element::from_terms(theta, std::move(terms));
}

/// Selfadjoint random element: (v + v*) / 2.
inline Element random_selfadjoint(const ThetaPtr& theta, int radius, int count, std::mt19937_64& rng) {
  Element v = random_element(theta, radius, count, rng);
  return 0.5 * (v + involution(v));
}

/// A word in the generators: letters (generator index, exponent sign).
using Word = std::vector<std::pair<int, int>>;

inline Word monomial_word(const Index& k) {
  Word w;
  for (int j = 0; j < static_cast<int>(k.size()); ++j)
    for (int p = 0; p < std::abs(k[j]); ++p) w.emplace_back(j, k[j] > 0 ? 1 : -1);
  return w;
}

/// Adjoint of a word: reversed letters with inverted exponents.
inline Word adjoint_word(const Word& w) {
  Word r(w.rbegin(), w.rend());
  for (auto& [j, s] : r) s = -s;
  return r;
}

/// Normal-orders a word one adjacent transposition at a time using only
/// U_m^a U_j^b = e^{2 pi i theta_jm a b} U_j^b U_m^a for j < m.
/// Returns (phase, exponent vector).
inline std::pair<cplx, Index> normal_order(Word w, const ThetaMatrix& theta) {
  cplx phase = 1.0;
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      auto [m, a] = w[i];
      auto [j, b] = w[i + 1];
      if (m > j) {
        phase *= std::polar(1.0, 2.0 * std::numbers::pi * theta(j, m) * a * b);
        std::swap(w[i], w[i + 1]);
        swapped = true;
      }
    }
  }
  Index k(theta.dim(), 0);
  for (auto [j, s] : w) k[j] += s;
  return {phase, k};
}

/// Product of two elements computed term by term through the word oracle.
inline Element oracle_mul(const Element& u, const Element& v) {
  const int n = u.dim();
  std::vector<std::pair<Index, cplx>> terms;
  for (const auto& a : u.terms()) {
    Word wa = monomial_word(unpack(a.key, n));
    for (const auto& b : v.terms()) {
      Word w = wa;
      Word wb = monomial_word(unpack(b.key, n));
      w.insert(w.end(), wb.begin(), wb.end());
      auto [phase, k] = normal_order(std::move(w), *u.theta());
      terms.emplace_back(std::move(k), a.value * b.value * phase);
    }
  }
  return Element::from_terms(u.theta(), std::move(terms));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace nctori::testing
