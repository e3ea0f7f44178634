#include "nctori/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include <unsupported/Eigen/IterativeSolvers>

#include "nctori/errors.hpp"
#include "nctori/parallel.hpp"
#include "nctori/spectral.hpp"

namespace nctori {

namespace {

bool is_selfadjoint(const Element& v, double tol = 1e-12) {
  return l2_distance(v, involution(v)) <= tol * std::max(1.0, v.l2_norm());
}

bool is_scalar(const Element& v) {
  return v.empty() || (v.size() == 1 && v.terms()[0].key == zero_key(v.dim()));
}

Element clean(const Element& e, int radius, double prune) {
  Element t = e.truncated(radius);
  return t.pruned(prune * t.max_abs());
}

struct SampleCheck {
  double smin = 0.0;
  double emin = 0.0;
  bool selfadjoint = false;
};

SampleCheck check_value(const Element& v, const BoxBasis& box) {
  SampleCheck out;
  out.selfadjoint = is_selfadjoint(v);
  if (v.empty()) return out;
  out.smin = std::numeric_limits<double>::infinity();
  out.emin = std::numeric_limits<double>::infinity();
  for (const auto& cls : coupling_classes(v, box)) {
    Matrix L = left_mult_block(v, box, cls);
    Eigen::BDCSVD<Matrix> svd(L);
    out.smin = std::min(out.smin, svd.singularValues()[svd.singularValues().size() - 1]);
    if (out.selfadjoint) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (L + L.adjoint()), Eigen::EigenvaluesOnly);
      out.emin = std::min(out.emin, es.eigenvalues()[0]);
    }
  }
  return out;
}

bool integral(std::span<const double> xi) {
  for (double x : xi)
    if (x != std::round(x) || std::abs(x) > kMaxCoord) return false;
  return true;
}

}  // namespace

EllipticityReport is_elliptic(const HomogeneousComponent& principal, const std::vector<std::vector<double>>& samples,
                              const Truncation& trunc, double gap) {
  if (samples.empty()) throw InvalidArgument("is_elliptic: no sphere samples");
  const int n = principal.symbol->dim();
  BoxBasis box(n, trunc.K);
  std::vector<SampleCheck> checks(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    if (static_cast<int>(samples[i].size()) != n) throw DimensionMismatch("is_elliptic: sample dimension");
    checks[i] = check_value(principal.symbol->eval(samples[i]), box);
  });
  EllipticityReport rep;
  rep.gap = gap;
  rep.samples = samples.size();
  rep.min_singular_value = std::numeric_limits<double>::infinity();
  bool all_sa = true;
  double emin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (checks[i].smin < rep.min_singular_value) {
      rep.min_singular_value = checks[i].smin;
      rep.worst_direction = samples[i];
    }
    all_sa = all_sa && checks[i].selfadjoint;
    emin = std::min(emin, checks[i].emin);
  }
  if (all_sa) rep.positivity = emin;
  rep.elliptic = rep.min_singular_value > gap;
  return rep;
}

// ---------------------------------------------------------------- parametrix

struct ParametrixJet::State {
  std::shared_ptr<const ClassicalSymbol> rho;
  int N = 0;
  ParametrixOptions opts;
  mutable std::mutex mu;
  mutable std::map<Index, std::vector<Element>> cache;

  std::vector<Element> compute(std::span<const double> xi) const {
    const auto& theta = rho->theta();
    const int n = rho->dim();
    const int inner = opts.trunc.inner();
    const auto& comps = rho->components();
    std::vector<Element> sig;
    sig.push_back(clean(inverse_element(comps[0].symbol->eval(xi), opts.trunc, opts.gap), inner, opts.prune));
    for (int j = 1; j < N; ++j) {
      Element acc(theta);
      for (int k = 0; k <= j && k < static_cast<int>(comps.size()); ++k) {
        const auto& rk = comps[k].symbol;
        if (rk->is_zero()) continue;
        for (int a = 0; a + k <= j; ++a) {
          const int l = j - k - a;
          if (l >= j) continue;
          if (a > 0 && is_scalar(sig[l])) continue;
          for (const auto& alpha : multi_orders_of_degree(n, a)) {
            Element ds = a ? delta(alpha, sig[l]) : sig[l];
            if (ds.empty()) continue;
            Element d = a ? rk->derivative(alpha, xi) : rk->eval(xi);
            if (d.empty()) continue;
            acc += (1.0 / multi_factorial(alpha)) * clean(mul(d, ds), inner, opts.prune);
          }
        }
      }
      sig.push_back(clean(-1.0 * mul(sig[0], acc), inner, opts.prune));
    }
    return sig;
  }

  std::vector<Element> values(std::span<const double> xi) const {
    if (static_cast<int>(xi.size()) != rho->dim()) throw DimensionMismatch("parametrix: xi dimension");
    if (std::all_of(xi.begin(), xi.end(), [](double x) { return x == 0.0; }))
      throw InvalidArgument("parametrix: components are not defined at xi = 0");
    if (!integral(xi)) return compute(xi);
    Index key(xi.begin(), xi.end());
    {
      std::lock_guard lock(mu);
      if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto v = compute(xi);
    std::lock_guard lock(mu);
    return cache.emplace(std::move(key), std::move(v)).first->second;
  }
};

ParametrixJet::ParametrixJet(std::shared_ptr<const ClassicalSymbol> rho, int N, ParametrixOptions opts)
    : state_(std::make_shared<State>()) {
  if (!rho) throw InvalidArgument("parametrix: null symbol");
  if (N < 1) throw InvalidArgument("parametrix: N must be positive");
  opts.trunc.validate();
  state_->rho = std::move(rho);
  state_->N = N;
  state_->opts = opts;
}

int ParametrixJet::size() const { return state_->N; }
cplx ParametrixJet::base_order() const { return -state_->rho->order().q; }
const ClassicalSymbol& ParametrixJet::symbol() const { return *state_->rho; }
const ParametrixOptions& ParametrixJet::options() const { return state_->opts; }

std::vector<Element> ParametrixJet::values(std::span<const double> xi) const { return state_->values(xi); }

Element ParametrixJet::component_at(int j, std::span<const double> xi) const {
  if (j < 0 || j >= size()) throw InvalidArgument("parametrix: component index out of range");
  return state_->values(xi)[j];
}

HomogeneousComponent ParametrixJet::component(int j) const {
  if (j < 0 || j >= size()) throw InvalidArgument("parametrix: component index out of range");
  const cplx d = base_order() - static_cast<double>(j);
  auto st = state_;
  auto sym = std::make_shared<FunctionSymbol>(
      st->rho->theta(), SymbolOrder{d}, st->opts.trunc.inner(),
      [st, j](std::span<const double> xi) { return st->values(xi)[j]; }, nullptr,
      "parametrix_" + std::to_string(j));
  return {d, sym};
}

SymbolPtr ParametrixJet::partial_sum(int N, OriginValue origin) const {
  if (N < 1 || N > size()) throw InvalidArgument("parametrix: partial sum length out of range");
  auto st = state_;
  return std::make_shared<FunctionSymbol>(
      st->rho->theta(), SymbolOrder{base_order()}, st->opts.trunc.inner(),
      [st, N, origin](std::span<const double> xi) {
        if (std::all_of(xi.begin(), xi.end(), [](double x) { return x == 0.0; }))
          return origin == OriginValue::Zero ? Element(st->rho->theta()) : Element::scalar(1.0, st->rho->theta());
        auto v = st->values(xi);
        Element s = v[0];
        for (int j = 1; j < N; ++j) s += v[j];
        return s;
      },
      nullptr, "parametrix_sum_" + std::to_string(N));
}

std::size_t ParametrixJet::cached_points() const {
  std::lock_guard lock(state_->mu);
  return state_->cache.size();
}

std::shared_ptr<const ParametrixJet> parametrix_jet(std::shared_ptr<const ClassicalSymbol> rho, int N,
                                                   ParametrixOptions opts) {
  if (!rho) throw InvalidArgument("parametrix: null symbol");
  auto rep = is_elliptic(rho->component(0), sphere_samples(rho->dim(), opts.check_samples), opts.check, opts.gap);
  if (!rep.elliptic)
    throw InvalidArgument("parametrix: principal symbol is not invertible, min singular value " +
                          std::to_string(rep.min_singular_value));
  return std::make_shared<ParametrixJet>(std::move(rho), N, opts);
}

// -------------------------------------------------------------------- metric

namespace {

// f applied to the compression of L_u (u selfadjoint) on the origin class.
Element hermitian_funcalc(const std::function<double(double)>& f, const Element& u, const BoxBasis& box, int radius,
                          double gap, bool positive) {
  const std::size_t origin = *box.position(zero_key(box.dim()));
  std::vector<std::size_t> cls{origin};
  for (auto& c : coupling_classes(u, box))
    if (std::binary_search(c.begin(), c.end(), origin)) cls = c;
  Matrix L = left_mult_block(u, box, cls);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (L + L.adjoint()));
  if (es.info() != Eigen::Success) throw NumericError("metric: eigensolver failed");
  if (positive && !(es.eigenvalues()[0] > gap)) throw SpectralGapError("metric: element not positive at truncation");
  const std::size_t o = std::lower_bound(cls.begin(), cls.end(), origin) - cls.begin();
  Eigen::VectorXd fx = es.eigenvalues().unaryExpr(f);
  Vector x = es.eigenvectors() * (fx.cast<cplx>().asDiagonal() * es.eigenvectors().row(o).adjoint());
  return element_from_vector(x, cls, box, u.theta(), radius);
}

const ThetaPtr& first_theta(const std::vector<std::vector<Element>>& g) {
  if (g.empty() || g[0].empty()) throw InvalidArgument("metric: empty matrix");
  return g[0][0].theta();
}

Element symmetrize(const Element& a, const Element& b_adjoint_source) {
  return 0.5 * (a + involution(b_adjoint_source));
}

}  // namespace

RiemannianMetric::RiemannianMetric(std::vector<std::vector<Element>> g, MetricOptions opts)
    : g_(std::move(g)), trace_log_(first_theta(g_)), opts_(opts) {
  const int n = static_cast<int>(g_.size());
  const auto& th = g_[0][0].theta();
  if (th->dim() != n) throw DimensionMismatch("metric: matrix size differs from the torus dimension");
  opts_.trunc.validate();
  bool central = true;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(g_[i].size()) != n) throw DimensionMismatch("metric: matrix is not square");
    for (int j = 0; j < n; ++j) {
      require_same_theta(g_[0][0], g_[i][j]);
      const double scale = std::max(1.0, g_[i][j].l2_norm());
      if (!is_selfadjoint(g_[i][j], opts_.symmetry_tol))
        throw InvalidArgument("metric: g_" + std::to_string(i + 1) + std::to_string(j + 1) + " is not selfadjoint");
      if (l2_distance(g_[i][j], g_[j][i]) > opts_.symmetry_tol * scale)
        throw InvalidArgument("metric: g is not symmetric");
      if (g_[i][j].support_radius() > opts_.trunc.margin)
        throw MarginViolation("metric: support of g_ij exceeds the truncation margin");
      central = central && is_scalar(g_[i][j]);
    }
  }
  const int inner = opts_.trunc.inner();
  g_inv_.assign(n, std::vector<Element>(n, Element(th)));
  h_.assign(n, std::vector<Element>(n, Element(th)));
  nu_.assign(4, Element(th));
  const std::array<double, 4> powers{1.0, 0.5, -0.5, -1.0};

  if (central) {
    Eigen::MatrixXcd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = g_[i][j].coeff(zero_key(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
    min_eig_ = es.eigenvalues()[0];
    if (!(min_eig_ > opts_.gap)) throw SpectralGapError("metric: g is not positive");
    Eigen::LLT<Eigen::MatrixXcd> llt(G);
    const Eigen::MatrixXcd inv = llt.solve(Eigen::MatrixXcd::Identity(n, n));
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i).real());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g_inv_[i][j] = Element::scalar(inv(i, j), th);
    trace_log_ = Element::scalar(logdet, th);
    for (int p = 0; p < 4; ++p) nu_[p] = Element::scalar(std::exp(0.5 * powers[p] * logdet), th);
  } else {
    BoxBasis box(n, opts_.trunc.K);
    std::vector<Term> pattern;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (const auto& t : g_[i][j].terms()) pattern.push_back({t.key, 1.0});
    const Element all = Element::from_keyed(th, std::move(pattern));
    const std::size_t origin = *box.position(zero_key(n));
    min_eig_ = std::numeric_limits<double>::infinity();
    for (const auto& cls : coupling_classes(all, box)) {
      const Eigen::Index m = static_cast<Eigen::Index>(cls.size());
      Matrix G(n * m, n * m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G.block(i * m, j * m, m, m) = left_mult_block(g_[i][j], box, cls);
      const bool has_origin = std::binary_search(cls.begin(), cls.end(), origin);
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.adjoint()),
                                               has_origin ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericError("metric: eigensolver failed");
      min_eig_ = std::min(min_eig_, es.eigenvalues()[0]);
      if (!has_origin) continue;
      if (!(es.eigenvalues()[0] > opts_.gap)) break;
      const Eigen::Index o = std::lower_bound(cls.begin(), cls.end(), origin) - cls.begin();
      const Matrix& V = es.eigenvectors();
      const Eigen::VectorXd lam = es.eigenvalues();
      const Matrix inv = V * lam.cwiseInverse().cast<cplx>().asDiagonal() * V.adjoint();
      const Matrix lg = V * lam.array().log().matrix().cast<cplx>().asDiagonal() * V.adjoint();
      Element tr(th);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
          g_inv_[i][j] = element_from_vector(inv.col(j * m + o).segment(i * m, m), cls, box, th, inner);
        tr += element_from_vector(lg.col(i * m + o).segment(i * m, m), cls, box, th, inner);
      }
      trace_log_ = symmetrize(tr, tr);
    }
    if (!(min_eig_ > opts_.gap))
      throw SpectralGapError("metric: smallest eigenvalue " + std::to_string(min_eig_) + " <= gap");
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Element s = symmetrize(g_inv_[i][j], g_inv_[j][i]).pruned(0.0);
        g_inv_[i][j] = s;
        g_inv_[j][i] = involution(s);
      }
    for (int p = 0; p < 4; ++p) {
      const double c = 0.5 * powers[p];
      nu_[p] = hermitian_funcalc([c](double x) { return std::exp(c * x); }, trace_log_, box, inner, opts_.gap,
                                 false);
      nu_[p] = symmetrize(nu_[p], nu_[p]);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      h_[i][j] = clean(mul(mul(nu_half(), g_inv_[i][j]), nu_half()), inner, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Element s = symmetrize(h_[i][j], h_[j][i]);
      h_[i][j] = s;
      h_[j][i] = involution(s);
    }
}

RiemannianMetric RiemannianMetric::identity(const ThetaPtr& theta, MetricOptions opts) {
  const int n = theta->dim();
  std::vector<std::vector<Element>> g(n, std::vector<Element>(n, Element(theta)));
  for (int i = 0; i < n; ++i) g[i][i] = Element::scalar(1.0, theta);
  return RiemannianMetric(std::move(g), opts);
}

namespace {

Index unit(int n, int i) {
  Index a(n, 0);
  a[i] = 1;
  return a;
}

Index pair_order(int n, int i, int j) {
  Index a(n, 0);
  ++a[i];
  ++a[j];
  return a;
}

void add_coefficient(std::map<Index, Element>& c, const Index& alpha, const Element& a) {
  if (a.empty()) return;
  auto [it, fresh] = c.emplace(alpha, a);
  if (!fresh) it->second += a;
}

}  // namespace

std::shared_ptr<const PolynomialSymbol> laplace_beltrami(const RiemannianMetric& metric) {
  const int n = metric.dim();
  const int r = metric.options().support;
  const double prune = metric.options().prune;
  std::map<Index, Element> c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      add_coefficient(c, pair_order(n, i, j), mul(mul(metric.nu_neg_half(), metric.g_inv(i, j)), metric.nu_half()));
  for (int j = 0; j < n; ++j) {
    Element div(metric.theta());
    for (int i = 0; i < n; ++i) div += delta(unit(n, i), metric.h(i, j));
    add_coefficient(c, unit(n, j), mul(metric.nu_inv(), div));
  }
  for (auto& [alpha, a] : c) a = clean(a, r, prune);
  return std::make_shared<PolynomialSymbol>(metric.theta(), std::move(c));
}

std::shared_ptr<const PolynomialSymbol> divergence_form(const RiemannianMetric& metric) {
  const int n = metric.dim();
  const int r = metric.options().support;
  const double prune = metric.options().prune;
  std::map<Index, Element> c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Element h = clean(metric.h(i, j), r, prune);
      add_coefficient(c, pair_order(n, i, j), h);
      add_coefficient(c, unit(n, j), delta(unit(n, i), h));
    }
  return std::make_shared<PolynomialSymbol>(metric.theta(), std::move(c));
}

// ------------------------------------------------------------------- probes

double estimate_ratio(const PsiDO& P, const Element& u, double s, double t) {
  const double m = P.order().m();
  return sobolev_norm(u, s + m) / (sobolev_norm(apply(P, u), s) + sobolev_norm(u, t));
}

EstimateProbe elliptic_estimate_probe(const PsiDO& P, double s, double t, int sample_count, const Truncation& trunc,
                                      std::uint64_t seed) {
  const double m = P.order().m();
  if (!(t < s + m)) throw InvalidArgument("elliptic_estimate_probe: needs t < s + m");
  if (sample_count < 1) throw InvalidArgument("elliptic_estimate_probe: sample_count must be positive");
  EstimateProbe out;
  out.seed = seed;
  out.radius = trunc.K / 2;
  const int n = P.symbol().dim();
  const auto& theta = P.symbol().theta();
  BoxBasis box(n, out.radius);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Element> probes;
  for (int i = 0; i < sample_count; ++i) {
    std::vector<Term> terms;
    for (std::size_t p = 0; p < box.size(); ++p) terms.push_back({box.key(p), cplx(g(rng), g(rng))});
    probes.push_back(Element::from_keyed(theta, std::move(terms)));
  }
  std::vector<double> ratios(sample_count);
  parallel_for(probes.size(), [&](std::size_t i) {
    ratios[i] = estimate_ratio(P, probes[i], s, t);
  });
  out.samples = ratios.size();
  out.constant = *std::max_element(ratios.begin(), ratios.end());
  for (double r : ratios) out.mean += r / ratios.size();
  return out;
}

// ------------------------------------------------------------------- solves

namespace {

// Compression of P_sigma to the listed positions; needs no margin.
Matrix window_block(const Symbol& sigma, const BoxBasis& box, const std::vector<std::size_t>& window) {
  std::unordered_map<Key, std::size_t> local;
  for (std::size_t i = 0; i < window.size(); ++i) local[box.key(window[i])] = i;
  Matrix Q = Matrix::Zero(window.size(), window.size());
  parallel_for(window.size(), [&](std::size_t c) {
    auto l = box.coords(window[c]);
    Element img = mul(sigma.eval_at(l), Element::monomial(l, 1.0, sigma.theta()));
    for (const auto& t : img.terms())
      if (auto it = local.find(t.key); it != local.end()) Q(it->second, c) = t.value;
  });
  return Q;
}

}  // namespace

SolveResult truncated_solve(const PsiDO& P, const Element& f, const Truncation& trunc, const SolveOptions& opts) {
  require_same_theta(Element(P.symbol().theta()), f);
  OperatorMatrix M = build_matrix(P, trunc);
  const Matrix A = M.trusted_block();
  const auto window = M.trusted();
  const BoxBasis& box = *M.box;
  Vector rhs(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) rhs[i] = f.coeff(box.key(window[i]));

  SolveResult res{.solution = Element(f.theta())};
  Vector x;
  if (opts.method == SolveOptions::Method::Direct) {
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible() || lu.rcond() < 1e-14)
      throw NumericError("truncated_solve: truncated matrix is singular");
    x = lu.solve(rhs);
  } else {
    Matrix B = A;
    Matrix Q;
    if (opts.preconditioner) {
      Q = window_block(*opts.preconditioner, box, window);
      B = A * Q;
    }
    Eigen::GMRES<Matrix, Eigen::IdentityPreconditioner> gmres;
    gmres.set_restart(opts.restart);
    gmres.setMaxIterations(opts.max_iterations);
    gmres.setTolerance(opts.tolerance);
    gmres.compute(B);
    Vector y = gmres.solve(rhs);
    x = opts.preconditioner ? Vector(Q * y) : y;
    res.iterations = static_cast<int>(gmres.iterations());
    res.converged = gmres.info() == Eigen::Success;
  }
  res.residual = (A * x - rhs).norm();
  std::vector<Term> terms;
  for (std::size_t i = 0; i < window.size(); ++i)
    if (x[i] != 0.0) terms.push_back({box.key(window[i]), x[i]});
  res.solution = Element::from_keyed(f.theta(), std::move(terms));
  return res;
}

ShellNorms parametrix_residuals(const Symbol& sigma, const Symbol& rho, const std::vector<int>& radii, bool left) {
  const Element one = Element::scalar(1.0, rho.theta());
  ShellNorms out;
  std::vector<double> xs;
  for (int R : radii) {
    auto ks = shell(rho.dim(), R);
    std::vector<double> e(ks.size());
    parallel_for(ks.size(), [&](std::size_t i) {
      Element r = (left ? exact_sharp_at(sigma, rho, ks[i]) : exact_sharp_at(rho, sigma, ks[i])) - one;
      e[i] = r.l2_norm();
    });
    out.radii.push_back(R);
    out.errors.push_back(*std::max_element(e.begin(), e.end()));
    out.scales.push_back(1.0);
    xs.push_back(R);
  }
  out.fit = fit_power_law(xs, out.errors);
  return out;
}

}  // namespace nctori
