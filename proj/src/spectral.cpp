#include "nctori/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <numbers>
#include <random>

#include "json.hpp"

#include "nctori/errors.hpp"

namespace nctori {

namespace {

double weight(std::span<const int> k, double s) { return std::pow(1.0 + euclid_norm_sq(k), s); }

// First coefficient above round-off made real positive.
Element normalize_phase(const Element& v) {
  const double big = v.max_abs();
  for (const auto& t : v.terms())
    if (std::abs(t.value) > 1e-12 * big) return (std::abs(t.value) / t.value) * v;
  return v;
}

Element vector_to_element(const Eigen::Ref<const Vector>& x, const std::vector<std::size_t>& window,
                          const BoxBasis& box, const ThetaPtr& theta) {
  std::vector<Term> terms;
  for (std::size_t i = 0; i < window.size(); ++i)
    if (x[i] != 0.0) terms.push_back({box.key(window[i]), x[i]});
  return normalize_phase(Element::from_keyed(theta, std::move(terms)));
}

double validity_cut_for(const Symbol& s, const Truncation& trunc) {
  const double m = s.order().m();
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(trunc.K / 2.0, m);
}

}  // namespace

double sobolev_norm(const Element& u, double s) {
  const int n = u.dim();
  Index k(n);
  double acc = 0.0;
  for (const auto& t : u.terms()) {
    unpack(t.key, n, k);
    acc += weight(k, s) * std::norm(t.value);
  }
  return std::sqrt(acc);
}

Element lambda_apply(double s, const Element& u) {
  const int n = u.dim();
  Index k(n);
  std::vector<Term> terms;
  terms.reserve(u.size());
  for (const auto& t : u.terms()) {
    unpack(t.key, n, k);
    terms.push_back({t.key, t.value * weight(k, s / 2.0)});
  }
  return Element::from_keyed(u.theta(), std::move(terms));
}

cplx pairing(const Element& u, const Element& v) {
  require_same_theta(u, v);
  // tau(U^k U^l) is nonzero only for l = -k, where U^k U^{-k} = chi(k,-k).
  const int n = u.dim();
  Index k(n), mk(n);
  cplx acc = 0.0;
  for (const auto& t : u.terms()) {
    unpack(t.key, n, k);
    const cplx vk = v.coeff(key_neg(t.key, n));
    if (vk == 0.0) continue;
    for (int i = 0; i < n; ++i) mk[i] = -k[i];
    acc += t.value * vk * std::polar(1.0, u.theta()->pair_angle(k, mk));
  }
  return acc;
}

DualityReport duality_gap(const Element& u, double s, int trial_count, std::uint64_t seed) {
  DualityReport rep{.exact_norm = sobolev_norm(u, -s), .maximizer = Element(u.theta())};
  rep.seed = seed;
  const int n = u.dim();
  Index k(n), mk(n);
  if (rep.exact_norm > 0.0) {
    // v_{-k} = conj(u_k chi(k,-k)) (1+|k|^2)^{-s} / ||u||_{-s}
    std::vector<Term> terms;
    for (const auto& t : u.terms()) {
      unpack(t.key, n, k);
      for (int i = 0; i < n; ++i) mk[i] = -k[i];
      const cplx chi = std::polar(1.0, u.theta()->pair_angle(k, mk));
      terms.push_back({key_neg(t.key, n), std::conj(t.value * chi) * weight(k, -s) / rep.exact_norm});
    }
    rep.maximizer = Element::from_keyed(u.theta(), std::move(terms));
  }
  rep.maximizer_pairing = pairing(u, rep.maximizer);
  rep.maximizer_norm = sobolev_norm(rep.maximizer, s);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  const int r = std::max(1, u.support_radius()) + 1;
  BoxBasis box(n, r);
  for (int trial = 0; trial < trial_count; ++trial) {
    std::vector<Term> terms;
    const double tilt = logscale(rng);
    for (std::size_t p = 0; p < box.size(); ++p) {
      const double w = std::pow(1.0 + euclid_norm_sq(box.coords(p)), 0.5 * tilt);
      terms.push_back({box.key(p), cplx(g(rng), g(rng)) * w});
    }
    Element v = Element::from_keyed(u.theta(), std::move(terms));
    const double vs = sobolev_norm(v, s);
    if (vs == 0.0) continue;
    const double val = std::abs(pairing(u, v));
    rep.sup_trials = std::max(rep.sup_trials, val / vs);
    if (rep.exact_norm > 0.0) {
      const double ratio = val / (rep.exact_norm * vs);
      rep.max_holder_ratio = std::max(rep.max_holder_ratio, ratio);
      if (ratio > 1.0 + 1e-12) ++rep.violations;
    } else if (val > 0.0) {
      ++rep.violations;
    }
    ++rep.trials;
  }
  return rep;
}

namespace {

// Connected components of the nonzero pattern of the given square matrices.
std::vector<std::vector<Eigen::Index>> blocks(std::initializer_list<const Matrix*> ms) {
  const Eigen::Index n = (*ms.begin())->rows();
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const Matrix* m : ms)
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r)
        if ((*m)(r, c) != 0.0) parent[find(r)] = find(c);
  std::vector<std::vector<Eigen::Index>> out;
  std::vector<Eigen::Index> slot(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(i);
  }
  return out;
}

Matrix sub(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix b(idx.size(), idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (std::size_t r = 0; r < idx.size(); ++r) b(r, c) = m(idx[r], idx[c]);
  return b;
}

struct Pair {
  cplx value;
  std::size_t block;
  Eigen::Index column;
};

bool by_value(const Pair& a, const Pair& b) {
  if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
  return a.value.imag() < b.value.imag();
}

SpectrumResult base_result(const OperatorMatrix& M, const Symbol& s, const Matrix& A) {
  SpectrumResult res;
  res.trunc = M.trunc;
  res.trusted_radius = M.trusted_radius();
  res.validity_cut = validity_cut_for(s, M.trunc);
  res.matrix_norm = A.norm();
  return res;
}

Vector embed(const Vector& v, const std::vector<Eigen::Index>& idx, Eigen::Index n) {
  Vector full = Vector::Zero(n);
  for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] = v[i];
  return full;
}

}  // namespace

SpectrumResult spectrum(const PsiDO& P, const Truncation& trunc, bool hermitian, bool want_vectors) {
  OperatorMatrix M = build_matrix(P, trunc);
  const Matrix A = M.trusted_block();
  const auto window = M.trusted();
  SpectrumResult res = base_result(M, P.symbol(), A);
  res.solver = hermitian ? "selfadjoint" : "complex-schur";
  const auto parts = blocks({&A});
  std::vector<Pair> pairs;
  std::vector<Matrix> vecs(parts.size());
  for (std::size_t b = 0; b < parts.size(); ++b) {
    const Matrix Ab = sub(A, parts[b]);
    Vector ev;
    if (hermitian) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(Ab, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericError("spectrum: selfadjoint solver failed");
      ev = es.eigenvalues().cast<cplx>();
      if (want_vectors) vecs[b] = es.eigenvectors();
    } else {
      Eigen::ComplexEigenSolver<Matrix> es(Ab, want_vectors);
      if (es.info() != Eigen::Success) throw NumericError("spectrum: eigensolver failed");
      ev = es.eigenvalues();
      if (want_vectors) vecs[b] = es.eigenvectors();
    }
    for (Eigen::Index i = 0; i < ev.size(); ++i) pairs.push_back({ev[i], b, i});
  }
  std::stable_sort(pairs.begin(), pairs.end(), by_value);
  for (const auto& p : pairs) {
    res.values.push_back(p.value);
    if (!want_vectors) continue;
    const Vector v = embed(vecs[p.block].col(p.column).normalized(), parts[p.block], A.rows());
    res.residuals.push_back((A * v - p.value * v).norm());
    res.vectors.push_back(vector_to_element(v, window, *M.box, P.symbol().theta()));
  }
  return res;
}

SpectrumResult spectrum_generalized(const PsiDO& A, const Element& w, const Truncation& trunc, bool want_vectors) {
  OperatorMatrix M = build_matrix(A, trunc);
  OperatorMatrix W = build_matrix(*constant_symbol(w), trunc);
  const Matrix a = M.trusted_block();
  const Matrix bw = W.trusted_block();
  const auto window = M.trusted();
  SpectrumResult res = base_result(M, A.symbol(), a);
  res.solver = "generalized-selfadjoint";
  const auto parts = blocks({&a, &bw});
  std::vector<Pair> pairs;
  std::vector<Matrix> vecs(parts.size());
  for (std::size_t b = 0; b < parts.size(); ++b) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(
        sub(a, parts[b]), sub(bw, parts[b]),
        (want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly) | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw NumericError("spectrum_generalized: weight is not positive definite");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) pairs.push_back({es.eigenvalues()[i], b, i});
    if (want_vectors) vecs[b] = es.eigenvectors();
  }
  std::stable_sort(pairs.begin(), pairs.end(), by_value);
  for (const auto& p : pairs) {
    res.values.push_back(p.value);
    if (!want_vectors) continue;
    const Vector v = embed(vecs[p.block].col(p.column).normalized(), parts[p.block], a.rows());
    res.residuals.push_back((a * v - p.value * (bw * v)).norm());
    res.vectors.push_back(vector_to_element(v, window, *M.box, A.symbol().theta()));
  }
  return res;
}

SpectrumResult singular_values(const PsiDO& P, const Truncation& trunc) {
  OperatorMatrix M = build_matrix(P, trunc);
  const Matrix A = M.trusted_block();
  SpectrumResult res = base_result(M, P.symbol(), A);
  res.singular_values = true;
  res.solver = "bdcsvd";
  res.validity_cut = std::numeric_limits<double>::infinity();
  std::vector<double> sv;
  for (const auto& part : blocks({&A})) {
    Eigen::BDCSVD<Matrix> svd(sub(A, part));
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) sv.push_back(svd.singularValues()[i]);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  for (double x : sv) res.values.emplace_back(x);
  return res;
}

std::size_t lattice_count(int n, double lambda) {
  if (lambda < 0.0) return 0;
  const int r = static_cast<int>(std::floor(std::sqrt(lambda)));
  BoxBasis box(n, r);
  std::size_t c = 0;
  for (std::size_t p = 0; p < box.size(); ++p)
    if (euclid_norm_sq(box.coords(p)) <= lambda) ++c;
  return c;
}

WeylResult weyl_ratio(const SpectrumResult& spec, int n, double lambda_cut) {
  if (spec.singular_values) throw InvalidArgument("weyl_ratio: needs eigenvalues, not singular values");
  if (lambda_cut < 0.0) throw InvalidArgument("weyl_ratio: negative cut");
  if (std::sqrt(lambda_cut) > spec.trusted_radius)
    throw InvalidArgument("weyl_ratio: cut " + std::to_string(lambda_cut) + " reaches past the trusted window radius " +
                          std::to_string(spec.trusted_radius));
  WeylResult w;
  w.lambda_cut = lambda_cut;
  w.weyl_constant = std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
  for (const auto& v : spec.values)
    if (v.real() <= lambda_cut) ++w.count;
  if (lambda_cut == 0.0) {
    w.degenerate = true;
    w.ratio = std::numeric_limits<double>::infinity();
  } else {
    w.ratio = static_cast<double>(w.count) / (w.weyl_constant * std::pow(lambda_cut, n / 2.0));
  }
  return w;
}

SlopeFit schatten_slope(const SpectrumResult& sv, double k_lo, double k_hi) {
  if (!sv.singular_values) throw InvalidArgument("schatten_slope: needs singular values");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < sv.values.size(); ++k) {
    x.push_back(static_cast<double>(k));
    y.push_back(sv.values[k].real());
  }
  return fit_power_law(x, y, k_lo, k_hi);
}

SlopeFit schatten_slope(const PsiDO& P, const Truncation& trunc, double k_lo, double k_hi) {
  if (P.order().m() >= 0.0) throw InvalidArgument("schatten_slope: needs negative order");
  return schatten_slope(singular_values(P, trunc), k_lo, k_hi);
}

SlopeFit smoothness_decay(const Element& v) {
  if (v.empty()) throw InvalidArgument("smoothness_decay: zero element");
  const int n = v.dim();
  const int R = v.support_radius();
  std::vector<double> shell_max(R + 1, 0.0);
  for (const auto& t : v.terms()) {
    const int r = linf_norm(t.key, n);
    shell_max[r] = std::max(shell_max[r], std::abs(t.value));
  }
  const double floor = 1e-13 * v.max_abs();
  std::vector<double> x, y;
  for (int r = 1; r <= R; ++r) {
    x.push_back(r);
    y.push_back(shell_max[r]);
  }
  SlopeFit fit = fit_power_law(x, y, 1.0, 1e300, floor);
  if (fit.degenerate) fit.note = "single-shell or round-off support: " + fit.note;
  return fit;
}

void export_spectrum(const SpectrumResult& spec, const std::string& stem, std::uint64_t seed) {
  std::ofstream csv(stem + ".csv");
  if (!csv) throw InvalidArgument("cannot write " + stem + ".csv");
  csv << std::setprecision(17) << "index,re,im\n";
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    csv << i << ',' << spec.values[i].real() << ',' << spec.values[i].imag() << '\n';
  nlohmann::json meta;
  meta["K"] = spec.trunc.K;
  meta["margin"] = spec.trunc.margin;
  meta["trusted_radius"] = spec.trusted_radius;
  meta["validity_cut"] = std::isfinite(spec.validity_cut) ? nlohmann::json(spec.validity_cut) : nlohmann::json(nullptr);
  meta["solver"] = spec.solver;
  meta["kind"] = spec.singular_values ? "singular_values" : "eigenvalues";
  meta["count"] = spec.values.size();
  meta["seed"] = seed;
  std::ofstream js(stem + ".json");
  if (!js) throw InvalidArgument("cannot write " + stem + ".json");
  js << meta.dump(2) << '\n';
}

}  // namespace nctori
