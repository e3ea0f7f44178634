#include "nctori/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "nctori/errors.hpp"
#include "nctori/parallel.hpp"

namespace nctori {

namespace {

constexpr double pi = std::numbers::pi;

// e^{-1/x} for x > 0
double bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

// smoothed step: 0 for x <= 0, 1 for x >= 1, step(x) + step(1 - x) = 1
double step(double x) {
  const double a = bump(x), b = bump(1.0 - x);
  return a / (a + b);
}

double sphere_area(int n) { return 2.0 * std::pow(pi, n / 2.0) / std::tgamma(n / 2.0); }

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::vector<double> axis_weights(const QuadratureSpec& q) {
  const int N = q.intervals();
  std::vector<double> w(N + 1, q.h);
  if (q.rule == QuadratureSpec::Rule::Trapezoid) {
    w.front() = w.back() = 0.5 * q.h;
  } else {
    for (int i = 0; i <= N; ++i) w[i] = q.h / 3.0 * (i == 0 || i == N ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return w;
}

}  // namespace

MeyerWindow::MeyerWindow(int n, MeyerOptions opts) : n_(n), opts_(opts) {
  if (n < 1) throw InvalidArgument("MeyerWindow: dimension must be positive");
  if (!(opts.width > 0.0 && opts.width < pi)) throw InvalidArgument("MeyerWindow: width must lie in (0, pi)");
  if (opts.grid < 16) throw InvalidArgument("MeyerWindow: grid too coarse");
  if (opts.neighbor_radius < 1 || opts.check_radius < 1 || !(opts.table_step > 0.0))
    throw InvalidArgument("MeyerWindow: radii and table step must be positive");

  const double hx = 2.0 * pi / opts.grid;
  for (int j = 0; j <= opts.grid; ++j) {
    const double t = j * hx, v = theta1(t);
    if (v == 0.0) continue;
    nodes_.push_back(t);
    weights_.push_back((j == 0 ? hx : 2.0 * hx) * v);
  }
  const int count = static_cast<int>(std::ceil(2.0 * opts.neighbor_radius / opts.table_step)) + 1;
  table_.resize(count);
  parallel_for(table_.size(), [&](std::size_t i) { table_[i] = phi1_direct(i * opts.table_step); });

  for (int j = 0; j <= 1000; ++j) {
    const double t = 2.0 * pi * j / 1000;
    checks_.partition_error =
        std::max(checks_.partition_error, std::abs(theta1(t) + theta1(2.0 * pi - t) - 0.5 / pi));
  }
  const double p0 = phi1(0.0);
  checks_.origin_error = std::abs(std::pow(p0, n) - 1.0);
  double off = 0.0;
  for (int k = 1; k <= opts.check_radius; ++k) off = std::max(off, std::abs(phi1(k)));
  checks_.lattice_max = off * std::pow(std::max(std::abs(p0), off), n - 1);
  // trapezoid over [-2r, 2r]; phi_1 is band-limited to |t| < pi + width, so the
  // step only has to stay below 2pi / (pi + width)
  double i1 = 0.0;
  for (int i = count - 1; i >= 1; --i) i1 += table_[i];
  i1 = opts.table_step * (table_[0] + 2.0 * i1 - table_.back());
  checks_.integral_error = std::abs(std::pow(i1, n) - 1.0);
}

double MeyerWindow::theta1(double t) const {
  return step((pi - std::abs(t)) / (2.0 * opts_.width) + 0.5) / (2.0 * pi);
}

double MeyerWindow::phi1_direct(double x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) s += weights_[j] * std::cos(x * nodes_[j]);
  return s;
}

double MeyerWindow::phi1(double x) const {
  const double q = std::abs(x) / opts_.table_step;
  const double i = std::round(q);
  if (std::abs(q - i) < 1e-9 && i < static_cast<double>(table_.size())) return table_[static_cast<std::size_t>(i)];
  return phi1_direct(x);
}

double MeyerWindow::phi(std::span<const double> xi) const {
  if (static_cast<int>(xi.size()) != n_) throw DimensionMismatch("MeyerWindow::phi: wrong dimension");
  double p = 1.0;
  for (double x : xi) p *= phi1(x);
  return p;
}

double MeyerWindow::phi_at(std::span<const int> k) const {
  std::vector<double> xi(k.begin(), k.end());
  return phi(xi);
}

std::shared_ptr<const MeyerWindow> build_meyer_phi(int n, MeyerOptions opts) {
  auto w = std::make_shared<const MeyerWindow>(n, opts);
  const auto& c = w->checks();
  if (c.partition_error > 1e-14)
    throw NumericError("build_meyer_phi: partition identity off by " + std::to_string(c.partition_error));
  if (c.origin_error > opts.origin_tol)
    throw NumericError("build_meyer_phi: phi(0) - 1 = " + std::to_string(c.origin_error));
  if (c.lattice_max > opts.lattice_tol)
    throw NumericError("build_meyer_phi: max |phi(k)| on the lattice is " + std::to_string(c.lattice_max));
  if (c.integral_error > opts.integral_tol)
    throw NumericError("build_meyer_phi: integral of phi off by " + std::to_string(c.integral_error));
  return w;
}

void QuadratureSpec::validate() const {
  if (!(h > 0.0) || !(X > 0.0)) throw InvalidArgument("QuadratureSpec: h and X must be positive");
  const double q = 2.0 * X / h;
  if (std::abs(q - std::round(q)) > 1e-9) throw InvalidArgument("QuadratureSpec: 2X/h must be an integer");
  if (rule == Rule::Simpson && static_cast<long>(std::round(q)) % 2)
    throw InvalidArgument("QuadratureSpec: Simpson needs an even number of intervals");
}

int QuadratureSpec::intervals() const { return static_cast<int>(std::round(2.0 * X / h)); }

std::string to_string(QuadratureSpec::Rule rule) {
  return rule == QuadratureSpec::Rule::Trapezoid ? "trapezoid" : "simpson";
}

std::string trace_report_json(const TraceReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  if (r.quadrature) {
    j["quadrature"] = {{"h", r.quadrature->h}, {"X", r.quadrature->X}, {"rule", to_string(r.quadrature->rule)}};
    j["nodes"] = r.nodes;
  }
  j["K"] = r.K;
  j["value"] = {{"re", r.value.real()}, {"im", r.value.imag()}};
  j["tail_bound"] = std::isfinite(r.tail_bound) ? nlohmann::ordered_json(r.tail_bound) : nlohmann::ordered_json();
  return j.dump(2);
}

double lattice_tail_bound(const Symbol& rho, int K) {
  const int n = rho.dim();
  const double m = rho.order().m();
  if (m >= -n) return std::numeric_limits<double>::infinity();
  double C = 0.0;
  for (const auto& k : shell(n, K))
    C = std::max(C, std::abs(tau(rho.eval_at(k))) * std::pow(1.0 + std::sqrt(euclid_norm_sq(k)), -m));
  return C * sphere_area(n) * std::pow(1.0 + K, m + n) / (-m - n);
}

TraceReport trace_lattice(const Symbol& rho, int K) {
  if (K < 0) throw InvalidArgument("trace_lattice: K must be nonnegative");
  BoxBasis box(rho.dim(), K);
  std::vector<cplx> t(box.size());
  parallel_for(box.size(), [&](std::size_t p) { t[p] = tau(rho.eval_at(box.coords(p))); });
  TraceReport r;
  r.method = "lattice";
  r.K = K;
  for (cplx v : t) r.value += v;
  r.tail_bound = lattice_tail_bound(rho, K);
  return r;
}

TraceReport trace_matrix_diag(const PsiDO& P, const Truncation& trunc) {
  trunc.validate();
  const Symbol& rho = P.symbol();
  if (rho.support_radius() > trunc.margin)
    throw MarginViolation("trace_matrix_diag: symbol support radius " + std::to_string(rho.support_radius()) +
                          " exceeds margin " + std::to_string(trunc.margin));
  const int R = trunc.inner();
  BoxBasis box(rho.dim(), R);
  std::vector<cplx> d(box.size());
  parallel_for(box.size(), [&](std::size_t p) {
    auto k = box.coords(p);
    Element value = rho.eval_at(k);
    if (value.support_radius() > rho.support_radius())
      throw MarginViolation("trace_matrix_diag: value at " + to_string(k) + " exceeds the declared support");
    d[p] = mul(value, Element::monomial(k, 1.0, rho.theta())).coeff(k);
  });
  TraceReport r;
  r.method = "matrix_diagonal";
  r.K = R;
  for (cplx v : d) r.value += v;
  r.tail_bound = lattice_tail_bound(rho, R);
  return r;
}

NormalizedSymbol::NormalizedSymbol(const Symbol& rho, std::shared_ptr<const MeyerWindow> phi, int K)
    : Symbol(rho.theta(), rho.order(), rho.support_radius()),
      phi_(std::move(phi)),
      K_(K),
      box_(rho.dim(), K),
      values_(box_.size(), Element(rho.theta())),
      traces_(box_.size()),
      name_(rho.describe()) {
  if (!phi_ || phi_->dim() != rho.dim()) throw DimensionMismatch("normalize_symbol: window dimension differs");
  parallel_for(box_.size(), [&](std::size_t p) {
    values_[p] = rho.eval_at(box_.coords(p));
    traces_[p] = tau(values_[p]);
  });
  tail_ = lattice_tail_bound(rho, K);
}

template <class F>
void NormalizedSymbol::for_neighbors(std::span<const double> xi, F&& f) const {
  const int n = dim(), r = phi_->neighbor_radius();
  if (static_cast<int>(xi.size()) != n) throw DimensionMismatch("NormalizedSymbol: wrong dimension");
  std::vector<int> lo(n), hi(n);
  std::vector<std::vector<double>> w(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = std::max(-K_, static_cast<int>(std::ceil(xi[i] - r)));
    hi[i] = std::min(K_, static_cast<int>(std::floor(xi[i] + r)));
    if (lo[i] > hi[i]) return;
    for (int k = lo[i]; k <= hi[i]; ++k) w[i].push_back(phi_->phi1(xi[i] - k));
  }
  const std::size_t side = 2 * K_ + 1;
  std::vector<int> k = lo;
  while (true) {
    double weight = 1.0;
    std::size_t pos = 0;
    for (int i = 0; i < n; ++i) {
      weight *= w[i][k[i] - lo[i]];
      pos = pos * side + static_cast<std::size_t>(k[i] + K_);
    }
    f(pos, weight);
    int i = n - 1;
    while (i >= 0 && k[i] == hi[i]) k[i] = lo[i], --i;
    if (i < 0) break;
    ++k[i];
  }
}

Element NormalizedSymbol::eval(std::span<const double> xi) const {
  std::vector<Term> acc;
  for_neighbors(xi, [&](std::size_t p, double w) {
    for (const auto& t : values_[p].terms()) acc.push_back({t.key, w * t.value});
  });
  return Element::from_keyed(theta(), std::move(acc));
}

cplx NormalizedSymbol::trace_density(std::span<const double> xi) const {
  cplx s = 0.0;
  for_neighbors(xi, [&](std::size_t p, double w) { s += w * traces_[p]; });
  return s;
}

std::shared_ptr<const NormalizedSymbol> normalize_symbol(const Symbol& rho, std::shared_ptr<const MeyerWindow> phi,
                                                         int K) {
  if (K < 0) throw InvalidArgument("normalize_symbol: K must be nonnegative");
  return std::make_shared<const NormalizedSymbol>(rho, std::move(phi), K);
}

TraceReport integral_trace(const NormalizedSymbol& rho, const QuadratureSpec& quad) {
  quad.validate();
  const int n = rho.dim();
  if (rho.order().m() >= -n) throw InvalidArgument("integral_trace: order must be below -n");
  const int K = rho.lattice_radius(), r = rho.window().neighbor_radius();
  if (quad.X < K + r)
    throw InvalidArgument("integral_trace: box too small, X = " + std::to_string(quad.X) + " < K + neighbor radius " +
                          std::to_string(K + r));
  // The window is a tensor product and so are the weights, so
  //   sum_xi w(xi) sum_k phi(xi - k) tau rho(k) = sum_k tau rho(k) prod_i c(k_i)
  // with c(k) = sum_j w_j phi_1(xi_j - k).
  const auto w = axis_weights(quad);
  std::vector<double> c(2 * K + 1, 0.0);
  parallel_for(c.size(), [&](std::size_t idx) {
    const int k = static_cast<int>(idx) - K;
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double x = -quad.X + j * quad.h - k;
      if (std::abs(x) <= r) s += w[j] * rho.window().phi1(x);
    }
    c[idx] = s;
  });
  BoxBasis box(n, K);
  TraceReport out{.method = "integral_normalized", .K = K, .quadrature = quad};
  for (std::size_t p = 0; p < box.size(); ++p) {
    double weight = 1.0;
    for (int k : box.coords(p)) weight *= c[k + K];
    out.value += weight * rho.lattice_traces()[p];
  }
  out.tail_bound = rho.tail_bound();
  out.nodes = ipow(w.size(), n);
  return out;
}

TraceReport integral_trace(const Symbol& rho, const QuadratureSpec& quad) {
  quad.validate();
  const int n = rho.dim();
  const double m = rho.order().m();
  if (m >= -n) throw InvalidArgument("integral_trace: order must be below -n");
  const double order_tail = sphere_area(n) * std::pow(quad.X, m + n) / (-m - n);
  if (order_tail > quad.tail_tolerance)
    throw InvalidArgument("integral_trace: box too small for order " + std::to_string(m) + ", tail estimate " +
                          std::to_string(order_tail));
  const auto w = axis_weights(quad);
  const std::size_t side = w.size(), total = ipow(side, n);
  std::vector<cplx> vals(total);
  std::vector<double> edge(total, 0.0);
  parallel_for(total, [&](std::size_t flat) {
    std::vector<double> xi(n);
    double weight = 1.0;
    bool boundary = false;
    std::size_t rest = flat;
    for (int i = n - 1; i >= 0; --i) {
      const std::size_t j = rest % side;
      rest /= side;
      xi[i] = -quad.X + j * quad.h;
      weight *= w[j];
      boundary = boundary || j == 0 || j + 1 == side;
    }
    const cplx v = tau(rho.eval(xi));
    vals[flat] = weight * v;
    if (boundary) {
      double norm = 0.0;
      for (double x : xi) norm += x * x;
      edge[flat] = std::abs(v) * std::pow(std::sqrt(norm), -m);
    }
  });
  TraceReport out{.method = "integral", .quadrature = quad};
  for (cplx v : vals) out.value += v;
  out.tail_bound = *std::max_element(edge.begin(), edge.end()) * order_tail;
  out.nodes = total;
  return out;
}

}  // namespace nctori
