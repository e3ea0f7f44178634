#include "cli.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "nctori/checks.hpp"
#include "nctori/element_io.hpp"
#include "nctori/elliptic.hpp"
#include "nctori/errors.hpp"
#include "nctori/spectral.hpp"
#include "nctori/trace.hpp"

namespace nctori::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::string kDefaults = R"(# nctori defaults. A config is merged over this table key by key, so any
# entry can be overridden; tasks.<name> supplies the params of that task.
seed: 20240601
dimension: 2
# theta_12 for n = 2, or the full antisymmetric n x n matrix as a list of rows
theta: 0.3183
truncation: {K: 16, margin: 2}
output: {dir: ., stem: result}

tasks:
  algebra-check:
    K: 8
    trials: 5
    tolerance: 1.0e-12
  compose:
    rho1: {kind: japanese, s: -2}
    rho2: {kind: constant, coefficient: {terms: [[1, 0, 1.0], [-1, 0, 1.0]]}}
    orders: [1, 2, 3]
    radii: [4, 8, 16, 32]
    # slopes must satisfy exponent <= m1 + m2 - N + slack
    slope_slack: 0.5
    compare_radius: 16
  adjoint:
    truncation: {K: 16, margin: 1}
    symbol: {kind: japanese, s: -1, coefficient: {terms: [[1, 0, 1.0], [-1, 0, 1.0]]}}
    orders: [1, 2, 3]
    # last error over first error
    ratio_limit: 1.0e-3
  parametrix:
    operator:
      kind: laplace_beltrami
      metric:
        g:
          - [{terms: [[0, 0, 1.0], [1, 0, 0.2], [-1, 0, 0.2]]}, 0]
          - [0, 1]
    orders: [1, 2, 3]
    radii: [4, 8, 16]
    slope_slack: 0.5
  spectrum:
    truncation: {K: 12, margin: 2}
    symbol: laplacian
    hermitian: true
  weyl:
    truncation: {K: 25, margin: 2}
    symbol: laplacian
    lambda_cut: 400
    tolerance: 0.05
  schatten:
    truncation: {K: 30, margin: 2}
    symbol: {kind: japanese, s: -2}
    fit: [20, 200]
    # relative to m/n
    tolerance: 0.1
  trace:
    symbol: {kind: japanese, s: -6}
    K: 64
    quadrature: {h: 0.25, X: 96, rule: trapezoid}
    raw_quadrature: {h: 0.25, X: 64, rule: trapezoid}
    tolerance: 1.0e-4
    exact_tolerance: 1.0e-13
    # the plain integral of the symbol should miss the lattice sum by more than this
    disagreement: 1.0e-3
  duality:
    element: {random: {radius: 5, count: 25}}
    s: 1.0
    trials: 1000
    tolerance: 1.0e-10
)";

const std::set<std::string> kTopKeys{"task", "seed", "dimension", "theta", "truncation", "output", "params"};

YAML::Node merged(const YAML::Node& base, const YAML::Node& over) {
  if (!over || over.IsNull()) return YAML::Clone(base);
  if (!base || !base.IsMap() || !over.IsMap()) return YAML::Clone(over);
  YAML::Node out = YAML::Clone(base);
  for (const auto& kv : over) {
    const auto key = kv.first.as<std::string>();
    out[key] = merged(base[key], kv.second);
  }
  return out;
}

json to_json(const YAML::Node& node) {
  if (!node || node.IsNull()) return nullptr;
  if (node.IsSequence()) {
    json a = json::array();
    for (const auto& x : node) a.push_back(to_json(x));
    return a;
  }
  if (node.IsMap()) {
    json o = json::object();
    for (const auto& kv : node) o[kv.first.as<std::string>()] = to_json(kv.second);
    return o;
  }
  const auto s = node.Scalar();
  if (node.Tag() == "!") return s;
  long long i;
  if (YAML::convert<long long>::decode(node, i)) return i;
  double d;
  if (YAML::convert<double>::decode(node, d)) return d;
  bool b;
  if (YAML::convert<bool>::decode(node, b)) return b;
  return s;
}

template <class T>
T get(const YAML::Node& node, const std::string& key) {
  const YAML::Node v = node[key];
  if (!v) throw ConfigError("missing key '" + key + "'");
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("key '" + key + "' has the wrong type");
  }
}

void find_files(const YAML::Node& node, const fs::path& base, std::vector<std::string>& missing) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      if (kv.first.as<std::string>() == "file" && kv.second.IsScalar()) {
        const fs::path p = base / kv.second.as<std::string>();
        if (!fs::exists(p)) missing.push_back(p.string());
      } else {
        find_files(kv.second, base, missing);
      }
    }
  } else if (node.IsSequence()) {
    for (const auto& x : node) find_files(x, base, missing);
  }
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct Context {
  YAML::Node params;
  fs::path base;
  ThetaPtr theta;
  int n = 2;
  Truncation trunc;
  std::uint64_t seed = 0;
  std::mt19937_64 rng;
  fs::path out_dir;
  std::string stem;
  json result = json::object();
  json checks = json::array();
  std::vector<std::string> files;

  void check(const std::string& name, double value, double limit, bool passed) {
    checks.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"passed", passed}});
  }

  std::string csv(const std::string& series, const std::string& header, const std::vector<std::vector<double>>& rows) {
    const fs::path p = out_dir / (stem + "_" + series + ".csv");
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << header << '\n' << std::setprecision(17);
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    files.push_back(p.filename().string());
    return p.filename().string();
  }
};

ThetaPtr parse_theta(const YAML::Node& node, int n) {
  if (!node) throw ConfigError("missing key 'theta'");
  if (node.IsScalar()) {
    if (n != 2) throw ConfigError("a scalar theta needs dimension 2");
    return ThetaMatrix::planar(node.as<double>());
  }
  if (!node.IsSequence() || static_cast<int>(node.size()) != n) throw ConfigError("theta must have n rows");
  std::vector<double> e;
  for (const auto& row : node) {
    if (!row.IsSequence() || static_cast<int>(row.size()) != n) throw ConfigError("theta must have n columns");
    for (const auto& x : row) e.push_back(x.as<double>());
  }
  try {
    return ThetaMatrix::make(n, std::move(e));
  } catch (const Error& err) {
    throw ConfigError(std::string("theta: ") + err.what());
  }
}

Truncation parse_truncation(const YAML::Node& node) {
  Truncation t{get<int>(node, "K"), get<int>(node, "margin")};
  if (t.margin < 0 || t.K <= t.margin) throw ConfigError("truncation needs K > margin >= 0");
  return t;
}

Element parse_element(const YAML::Node& node, Context& ctx) {
  if (!node) throw ConfigError("missing element");
  if (node.IsScalar()) return Element::scalar(node.as<double>(), ctx.theta);
  if (!node.IsMap()) throw ConfigError("element must be a number or a map");
  if (node["terms"]) {
    std::vector<std::pair<Index, cplx>> terms;
    for (const auto& t : node["terms"]) {
      if (!t.IsSequence() || (static_cast<int>(t.size()) != ctx.n + 1 && static_cast<int>(t.size()) != ctx.n + 2))
        throw ConfigError("element term must be [k_1 .. k_n re] or [k_1 .. k_n re im]");
      Index k;
      for (int i = 0; i < ctx.n; ++i) k.push_back(t[i].as<int>());
      const double re = t[ctx.n].as<double>();
      const double im = static_cast<int>(t.size()) == ctx.n + 2 ? t[ctx.n + 1].as<double>() : 0.0;
      terms.emplace_back(std::move(k), cplx(re, im));
    }
    return Element::from_terms(ctx.theta, std::move(terms));
  }
  if (node["file"]) return load_element(ctx.base / node["file"].as<std::string>(), ctx.theta);
  if (node["random"]) {
    const auto r = node["random"];
    const int radius = get<int>(r, "radius");
    BoxBasis box(ctx.n, radius);
    std::vector<std::size_t> pos(box.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    std::shuffle(pos.begin(), pos.end(), ctx.rng);
    const std::size_t count = r["count"] ? std::min<std::size_t>(r["count"].as<std::size_t>(), pos.size()) : pos.size();
    std::normal_distribution<double> g;
    std::vector<std::pair<Index, cplx>> terms;
    for (std::size_t i = 0; i < count; ++i) {
      auto k = box.coords(pos[i]);
      const double re = g(ctx.rng), im = g(ctx.rng);
      terms.emplace_back(Index(k.begin(), k.end()), cplx(re, im));
    }
    return Element::from_terms(ctx.theta, std::move(terms));
  }
  throw ConfigError("element needs one of terms, file, random");
}

RiemannianMetric parse_metric(const YAML::Node& node, Context& ctx) {
  const auto g = node["g"];
  if (!g || !g.IsSequence() || static_cast<int>(g.size()) != ctx.n) throw ConfigError("metric.g must have n rows");
  std::vector<std::vector<Element>> rows;
  for (const auto& row : g) {
    if (!row.IsSequence() || static_cast<int>(row.size()) != ctx.n) throw ConfigError("metric.g must have n columns");
    rows.emplace_back();
    for (const auto& e : row) rows.back().push_back(parse_element(e, ctx));
  }
  return RiemannianMetric(std::move(rows));
}

SymbolPtr parse_symbol(const YAML::Node& node, Context& ctx) {
  if (!node) throw ConfigError("missing symbol");
  const std::string kind = node.IsScalar() ? node.as<std::string>() : get<std::string>(node, "kind");
  auto coefficient = [&] {
    return node.IsMap() && node["coefficient"] ? parse_element(node["coefficient"], ctx)
                                               : Element::scalar(1.0, ctx.theta);
  };
  if (kind == "laplacian") return laplacian_symbol(ctx.theta);
  if (kind == "japanese") return japanese_symbol(get<double>(node, "s"), coefficient());
  if (kind == "gaussian") {
    const double order = node["order"] ? node["order"].as<double>() : -40.0;
    return std::make_shared<ScalarSymbol>(profile::gaussian(get<double>(node, "w")), coefficient(),
                                          SymbolOrder{order});
  }
  if (kind == "constant") return constant_symbol(coefficient());
  if (kind == "polynomial") return load_polynomial_symbol((ctx.base / get<std::string>(node, "file")).string(), ctx.theta);
  if (kind == "laplace_beltrami") return laplace_beltrami(parse_metric(node["metric"], ctx));
  if (kind == "divergence_form") return divergence_form(parse_metric(node["metric"], ctx));
  throw ConfigError("unknown symbol kind '" + kind + "'");
}

std::vector<int> int_list(const YAML::Node& node, const std::string& key) {
  auto v = get<std::vector<int>>(node, key);
  if (v.empty()) throw ConfigError("'" + key + "' must not be empty");
  return v;
}

QuadratureSpec parse_quadrature(const YAML::Node& node) {
  QuadratureSpec q;
  q.h = get<double>(node, "h");
  q.X = get<double>(node, "X");
  const auto rule = node["rule"] ? node["rule"].as<std::string>() : "trapezoid";
  if (rule == "trapezoid") q.rule = QuadratureSpec::Rule::Trapezoid;
  else if (rule == "simpson") q.rule = QuadratureSpec::Rule::Simpson;
  else throw ConfigError("quadrature rule must be trapezoid or simpson");
  return q;
}

json fit_json(const SlopeFit& f) {
  return {{"exponent", f.exponent}, {"intercept", f.intercept}, {"residual", f.residual}, {"x_lo", f.x_lo},
          {"x_hi", f.x_hi},         {"count", f.count},         {"degenerate", f.degenerate}, {"note", f.note}};
}

json check_json(const CheckResult& c) {
  return {{"name", c.name}, {"error", c.error}, {"tolerance", c.tolerance}, {"passed", c.passed}, {"detail", c.detail}};
}

// Tasks --------------------------------------------------------------------

void task_algebra(Context& ctx) {
  const auto& p = ctx.params;
  auto suite = algebra_checks(ctx.theta, get<int>(p, "K"), get<int>(p, "trials"), ctx.seed, get<double>(p, "tolerance"));
  json list = json::array();
  for (const auto& c : suite.checks) {
    list.push_back(check_json(c));
    ctx.check(c.name, c.error, c.tolerance, c.passed);
  }
  ctx.result["identities"] = list;
}

void task_compose(Context& ctx) {
  const auto& p = ctx.params;
  auto r1 = parse_symbol(p["rho1"], ctx), r2 = parse_symbol(p["rho2"], ctx);
  const auto orders = int_list(p, "orders");
  const auto radii = int_list(p, "radii");
  const double slack = get<double>(p, "slope_slack");
  const int at = get<int>(p, "compare_radius");
  const double m = r1->order().m() + r2->order().m();
  std::vector<std::vector<double>> rows;
  json per = json::array();
  std::vector<double> at_r;
  for (int N : orders) {
    auto sn = remainder_shell_norms(*r1, *r2, N, radii);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      rows.push_back({double(N), double(radii[i]), sn.errors[i], sn.scales[i]});
      if (radii[i] == at) at_r.push_back(sn.errors[i]);
    }
    per.push_back({{"N", N}, {"errors", sn.errors}, {"fit", fit_json(sn.fit)}});
    const double limit = m - N + slack;
    ctx.check("slope N=" + std::to_string(N), sn.fit.exponent, limit, !sn.fit.degenerate && sn.fit.exponent <= limit);
  }
  if (at_r.size() == orders.size())
    for (std::size_t i = 1; i < at_r.size(); ++i)
      ctx.check("E(N=" + std::to_string(orders[i]) + ") < E(N=" + std::to_string(orders[i - 1]) +
                    ") at R=" + std::to_string(at),
                at_r[i] / at_r[i - 1], 1.0, at_r[i] < at_r[i - 1]);
  ctx.result["order_sum"] = m;
  ctx.result["expansions"] = per;
  ctx.result["csv"] = ctx.csv("shell_errors", "N,R,error,scale", rows);
}

void task_adjoint(Context& ctx) {
  const auto& p = ctx.params;
  auto rho = parse_symbol(p["symbol"], ctx);
  const auto orders = int_list(p, "orders");
  const Matrix adj = build_matrix(*rho, ctx.trunc).trusted_block().adjoint();
  const double exact = spectral_norm(build_matrix(*exact_adjoint_symbol(rho), ctx.trunc).trusted_block() - adj);
  std::vector<double> errs;
  std::vector<std::vector<double>> rows;
  for (int N : orders) {
    errs.push_back(spectral_norm(build_matrix(*star_expansion_symbol(rho, N), ctx.trunc).trusted_block() - adj));
    rows.push_back({double(N), errs.back()});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] < errs[i - 1];
  const double ratio = errs.back() / errs.front();
  ctx.result["exact_adjoint_error"] = exact;
  ctx.result["orders"] = orders;
  ctx.result["errors"] = errs;
  ctx.result["ratio"] = ratio;
  ctx.result["csv"] = ctx.csv("adjoint_errors", "N,error", rows);
  ctx.check("exact adjoint symbol", exact, 1e-12, exact <= 1e-12);
  ctx.check("monotone in N", monotone ? 0.0 : 1.0, 0.0, monotone);
  ctx.check("last/first ratio", ratio, get<double>(p, "ratio_limit"), ratio <= get<double>(p, "ratio_limit"));
}

void task_parametrix(Context& ctx) {
  const auto& p = ctx.params;
  auto op = std::dynamic_pointer_cast<const PolynomialSymbol>(parse_symbol(p["operator"], ctx));
  if (!op) throw ConfigError("parametrix needs a differential operator (laplacian, polynomial, laplace_beltrami)");
  const auto orders = int_list(p, "orders");
  const auto radii = int_list(p, "radii");
  const double slack = get<double>(p, "slope_slack");
  const int N = *std::max_element(orders.begin(), orders.end());
  auto rho = classical_from_polynomial(*op, op->degree() + 1);
  auto jet = parametrix_jet(rho, N);

  json comps = json::array();
  int nonzero = 0;
  for (int j = 0; j < N; ++j) {
    double size = 0.0;
    for (const auto& xi : sphere_samples(ctx.n, 16)) size = std::max(size, jet->component_at(j, xi).l2_norm());
    comps.push_back({{"degree", (jet->base_order() - double(j)).real()}, {"max_norm_on_sphere", size}});
    nonzero += size > 0.0;
  }
  ctx.result["base_order"] = jet->base_order().real();
  ctx.result["components"] = comps;
  ctx.result["nonzero_components"] = nonzero;

  std::vector<std::vector<double>> rows;
  json per = json::array();
  for (int n : orders) {
    auto sigma = jet->partial_sum(n);
    json sides = json::object();
    for (bool left : {true, false}) {
      auto res = parametrix_residuals(*sigma, *rho, radii, left);
      for (std::size_t i = 0; i < radii.size(); ++i)
        rows.push_back({double(n), left ? 0.0 : 1.0, double(radii[i]), res.errors[i]});
      const std::string side = left ? "left" : "right";
      sides[side] = {{"errors", res.errors}, {"fit", fit_json(res.fit)}};
      // an exact parametrix leaves nothing to fit
      const double top = *std::max_element(res.errors.begin(), res.errors.end());
      const bool ok = top <= 1e-13 || (!res.fit.degenerate && res.fit.exponent <= -n + slack);
      ctx.check(side + (top <= 1e-13 ? " residual vanishes N=" : " residual slope N=") + std::to_string(n),
                top <= 1e-13 ? top : res.fit.exponent, top <= 1e-13 ? 1e-13 : -n + slack, ok);
    }
    per.push_back({{"N", n}, {"residuals", sides}});
  }
  ctx.result["residuals"] = per;
  ctx.result["csv"] = ctx.csv("residuals", "N,side,R,error", rows);
}

SpectrumResult hermitian_spectrum(Context& ctx, const SymbolPtr& s, bool hermitian) {
  return spectrum(PsiDO(s), ctx.trunc, hermitian);
}

void task_spectrum(Context& ctx) {
  const auto& p = ctx.params;
  const bool hermitian = get<bool>(p, "hermitian");
  auto spec = hermitian_spectrum(ctx, parse_symbol(p["symbol"], ctx), hermitian);
  const std::string stem = (ctx.out_dir / (ctx.stem + "_eigenvalues")).string();
  export_spectrum(spec, stem, ctx.seed);
  ctx.files.push_back(ctx.stem + "_eigenvalues.csv");
  ctx.files.push_back(ctx.stem + "_eigenvalues.json");
  ctx.result["solver"] = spec.solver;
  ctx.result["count"] = spec.values.size();
  ctx.result["trusted_radius"] = spec.trusted_radius;
  ctx.result["validity_cut"] = std::isfinite(spec.validity_cut) ? json(spec.validity_cut) : json();
  if (!spec.values.empty()) {
    ctx.result["lowest"] = {spec.values.front().real(), spec.values.front().imag()};
    ctx.result["highest"] = {spec.values.back().real(), spec.values.back().imag()};
  }
  ctx.result["csv"] = ctx.stem + "_eigenvalues.csv";
}

void task_weyl(Context& ctx) {
  const auto& p = ctx.params;
  auto sym = parse_symbol(p["symbol"], ctx);
  auto spec = hermitian_spectrum(ctx, sym, true);
  const double lam = get<double>(p, "lambda_cut");
  auto w = weyl_ratio(spec, ctx.n, lam);
  ctx.result["ratio"] = w.ratio;
  ctx.result["count"] = w.count;
  ctx.result["lambda_cut"] = w.lambda_cut;
  ctx.result["weyl_constant"] = w.weyl_constant;
  ctx.result["degenerate"] = w.degenerate;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < spec.values.size(); ++i) rows.push_back({double(i), spec.values[i].real()});
  ctx.result["csv"] = ctx.csv("eigenvalues", "index,value", rows);
  const double tol = get<double>(p, "tolerance");
  ctx.check("weyl ratio", std::abs(w.ratio - 1.0), tol, std::abs(w.ratio - 1.0) <= tol);
  if (p["compare_theta"]) {
    Context other = ctx;
    other.theta = parse_theta(p["compare_theta"], ctx.n);
    auto alt = hermitian_spectrum(other, parse_symbol(p["symbol"], other), true);
    bool same = alt.values.size() == spec.values.size();
    for (std::size_t i = 0; same && i < spec.values.size(); ++i) same = alt.values[i] == spec.values[i];
    ctx.result["theta_independent"] = same;
    ctx.check("eigenvalues independent of theta", same ? 0.0 : 1.0, 0.0, same);
  }
}

void task_schatten(Context& ctx) {
  const auto& p = ctx.params;
  auto sym = parse_symbol(p["symbol"], ctx);
  const auto range = get<std::vector<double>>(p, "fit");
  if (range.size() != 2) throw ConfigError("fit must be [lo, hi]");
  auto sv = singular_values(PsiDO(sym), ctx.trunc);
  auto fit = schatten_slope(sv, range[0], range[1]);
  const double target = sym->order().m() / ctx.n;
  ctx.result["fit"] = fit_json(fit);
  ctx.result["target"] = target;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < sv.values.size(); ++i) rows.push_back({double(i + 1), sv.values[i].real()});
  ctx.result["csv"] = ctx.csv("singular_values", "k,value", rows);
  const double tol = get<double>(p, "tolerance") * std::abs(target);
  ctx.check("exponent against m/n", std::abs(fit.exponent - target), tol,
            !fit.degenerate && std::abs(fit.exponent - target) <= tol);
}

void task_trace(Context& ctx) {
  const auto& p = ctx.params;
  auto sym = parse_symbol(p["symbol"], ctx);
  const int K = get<int>(p, "K");
  auto lattice = trace_lattice(*sym, K);
  auto diag = trace_matrix_diag(PsiDO(sym), Truncation{K + std::max(1, sym->support_radius()), std::max(1, sym->support_radius())});
  auto window = build_meyer_phi(ctx.n);
  auto normalized = integral_trace(*normalize_symbol(*sym, window, K), parse_quadrature(p["quadrature"]));
  auto raw = integral_trace(*sym, parse_quadrature(p["raw_quadrature"]));
  const auto reports = {lattice, diag, normalized, raw};
  json list = json::array();
  for (const auto& r : reports) list.push_back(json::parse(trace_report_json(r)));
  ctx.result["traces"] = list;
  ctx.result["meyer"] = {{"origin_error", window->checks().origin_error},
                         {"lattice_max", window->checks().lattice_max},
                         {"integral_error", window->checks().integral_error},
                         {"partition_error", window->checks().partition_error}};
  const double scale = std::abs(lattice.value);
  const double e_diag = std::abs(diag.value - lattice.value) / scale;
  const double e_norm = std::abs(normalized.value - lattice.value) / scale;
  const double e_raw = std::abs(raw.value - lattice.value) / scale;
  ctx.check("matrix diagonal = lattice", e_diag, get<double>(p, "exact_tolerance"),
            e_diag <= get<double>(p, "exact_tolerance"));
  ctx.check("normalized integral = lattice", e_norm, get<double>(p, "tolerance"), e_norm <= get<double>(p, "tolerance"));
  ctx.check("plain integral differs from lattice", e_raw, get<double>(p, "disagreement"),
            e_raw > get<double>(p, "disagreement"));
}

void task_duality(Context& ctx) {
  const auto& p = ctx.params;
  Element u = parse_element(p["element"], ctx);
  if (u.empty()) throw ConfigError("duality needs a nonzero element");
  const double s = get<double>(p, "s");
  auto rep = duality_gap(u, s, get<int>(p, "trials"), ctx.seed);
  ctx.result["exact_norm"] = rep.exact_norm;
  ctx.result["maximizer_pairing"] = {rep.maximizer_pairing.real(), rep.maximizer_pairing.imag()};
  ctx.result["maximizer_norm"] = rep.maximizer_norm;
  ctx.result["sup_trials"] = rep.sup_trials;
  ctx.result["max_holder_ratio"] = rep.max_holder_ratio;
  ctx.result["violations"] = rep.violations;
  ctx.result["trials"] = rep.trials;
  const double gap = std::abs(rep.maximizer_pairing - rep.exact_norm) / rep.exact_norm;
  const double tol = get<double>(p, "tolerance");
  ctx.check("maximizer attains the norm", gap, tol, gap <= tol);
  ctx.check("hoelder violations", double(rep.violations), 0.0, rep.violations == 0);
}

const std::map<std::string, std::function<void(Context&)>>& tasks() {
  static const std::map<std::string, std::function<void(Context&)>> t{
      {"algebra-check", task_algebra}, {"compose", task_compose},   {"adjoint", task_adjoint},
      {"parametrix", task_parametrix}, {"spectrum", task_spectrum}, {"weyl", task_weyl},
      {"schatten", task_schatten},     {"trace", task_trace},       {"duality", task_duality},
  };
  return t;
}

}  // namespace

const std::string& defaults_yaml() { return kDefaults; }

std::string canonical_dump(const json& document) {
  json copy = document;
  copy.erase("timestamps");
  return copy.dump(2);
}

RunOutcome run_config(const std::string& config_path, const RunOptions& opts) {
  RunOutcome out;
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = now_iso();
  Context ctx;
  std::string task;
  try {
    if (!fs::exists(config_path)) throw ConfigError("config not found: " + config_path);
    YAML::Node user = YAML::LoadFile(config_path);
    if (!user.IsMap()) throw ConfigError("config must be a map");
    for (const auto& kv : user)
      if (!kTopKeys.count(kv.first.as<std::string>()))
        throw ConfigError("unknown key '" + kv.first.as<std::string>() + "'");
    const YAML::Node defaults = YAML::Load(kDefaults);
    task = get<std::string>(user, "task");
    if (!tasks().count(task)) throw ConfigError("unknown task '" + task + "'");
    YAML::Node top = YAML::Clone(defaults);
    top.remove("tasks");
    const YAML::Node cfg = merged(top, user);
    YAML::Node params = merged(defaults["tasks"][task], user["params"]);

    ctx.base = fs::absolute(config_path).parent_path();
    std::vector<std::string> missing;
    find_files(user, ctx.base, missing);
    if (!missing.empty()) throw ConfigError("referenced file not found: " + missing.front());

    ctx.n = get<int>(cfg, "dimension");
    if (ctx.n < 1) throw ConfigError("dimension must be positive");
    ctx.theta = parse_theta(cfg["theta"], ctx.n);
    ctx.seed = get<std::uint64_t>(cfg, "seed");
    ctx.rng.seed(ctx.seed);
    YAML::Node trunc = cfg["truncation"];
    if (params["truncation"]) {
      trunc = merged(trunc, params["truncation"]);
      if (user["truncation"]) trunc = merged(trunc, user["truncation"]);
      params.remove("truncation");
    }
    ctx.trunc = parse_truncation(trunc);
    ctx.params = params;
    ctx.out_dir = opts.out_dir.empty() ? fs::path(get<std::string>(cfg["output"], "dir")) : fs::path(opts.out_dir);
    ctx.stem = get<std::string>(cfg["output"], "stem");
    fs::create_directories(ctx.out_dir);

    out.document["tool"] = "nctori";
    out.document["task"] = task;
    out.document["seed"] = ctx.seed;
    json theta = json::array();
    for (int i = 0; i < ctx.n; ++i) {
      json row = json::array();
      for (int j = 0; j < ctx.n; ++j) row.push_back((*ctx.theta)(i, j));
      theta.push_back(row);
    }
    out.document["config"] = {{"file", fs::path(config_path).filename().string()},
                              {"dimension", ctx.n},
                              {"theta", theta},
                              {"truncation", {{"K", ctx.trunc.K}, {"margin", ctx.trunc.margin}}},
                              {"params", to_json(params)}};
  } catch (const ConfigError& e) {
    out.exit_code = ParseError;
    out.diagnostic = std::string("config error: ") + e.what();
    return out;
  } catch (const YAML::Exception& e) {
    out.exit_code = ParseError;
    out.diagnostic = std::string("config parse error: ") + e.what();
    return out;
  }

  try {
    tasks().at(task)(ctx);
  } catch (const ConfigError& e) {
    out.exit_code = ParseError;
    out.diagnostic = std::string("config error: ") + e.what();
    return out;
  } catch (const YAML::Exception& e) {
    out.exit_code = ParseError;
    out.diagnostic = std::string("config parse error: ") + e.what();
    return out;
  } catch (const std::exception& e) {
    out.exit_code = NumericFailure;
    out.diagnostic = std::string("numeric failure: ") + e.what();
    return out;
  }

  bool passed = true;
  for (const auto& c : ctx.checks) passed = passed && c["passed"].get<bool>();
  out.document["result"] = ctx.result;
  out.document["checks"] = ctx.checks;
  out.document["passed"] = passed;
  out.document["outputs"] = ctx.files;
  out.document["timestamps"] = {
      {"started", started_at},
      {"finished", now_iso()},
      {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()}};
  const fs::path json_path = ctx.out_dir / (ctx.stem + ".json");
  std::ofstream js(json_path);
  js << out.document.dump(2) << '\n';
  out.files = ctx.files;
  out.files.push_back(json_path.filename().string());
  if (!passed && opts.check) {
    out.exit_code = ToleranceBreach;
    out.diagnostic = "tolerance breach";
    for (const auto& c : ctx.checks)
      if (!c["passed"].get<bool>()) out.diagnostic += "; " + c["name"].get<std::string>();
  }
  return out;
}

int selftest(std::ostream& os, bool corrupt_phase, std::uint64_t seed, const std::string& json_path) {
  debug::set_phase_fault(corrupt_phase);
  std::vector<CheckSuite> suites;
  try {
    suites = selftest_suites(seed);
  } catch (...) {
    debug::set_phase_fault(false);
    throw;
  }
  debug::set_phase_fault(false);
  json report = {{"seed", seed}, {"corrupt_phase", corrupt_phase}, {"suites", json::array()}};
  std::size_t failed = 0, total = 0;
  for (const auto& s : suites) {
    json list = json::array();
    for (const auto& c : s.checks) {
      ++total;
      failed += !c.passed;
      os << (c.passed ? "pass  " : "FAIL  ") << std::left << std::setw(28) << s.name << std::setw(42) << c.name
         << std::right << std::scientific << std::setprecision(2) << std::setw(10) << c.error << "  "
         << std::fixed << std::setprecision(3) << c.seconds << "s";
      if (!c.detail.empty()) os << "  " << c.detail;
      os << '\n';
      json j = check_json(c);
      j["seconds"] = c.seconds;
      list.push_back(j);
    }
    report["suites"].push_back({{"name", s.name}, {"passed", s.passed()}, {"checks", list}});
  }
  os << (total - failed) << "/" << total << " checks passed\n";
  report["passed"] = failed == 0;
  if (!json_path.empty()) {
    std::ofstream js(json_path);
    js << report.dump(2) << '\n';
  }
  return failed == 0 ? Ok : ToleranceBreach;
}

}  // namespace nctori::cli
