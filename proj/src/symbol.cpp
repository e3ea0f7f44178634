#include "nctori/symbol.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "nctori/element_io.hpp"
#include "nctori/errors.hpp"

namespace nctori {

namespace {

double norm2(std::span<const double> xi) {
  double s = 0.0;
  for (double x : xi) s += x * x;
  return std::sqrt(s);
}

bool is_origin(std::span<const double> xi) {
  for (double x : xi)
    if (x != 0.0) return false;
  return true;
}

// Calls f(beta) for every beta <= alpha componentwise.
template <class F>
void for_each_suborder(std::span<const int> alpha, F&& f) {
  Index beta(alpha.size(), 0);
  while (true) {
    f(beta);
    std::size_t i = 0;
    for (; i < beta.size(); ++i) {
      if (beta[i] < alpha[i]) {
        ++beta[i];
        break;
      }
      beta[i] = 0;
    }
    if (i == beta.size()) return;
  }
}

double binomial_product(std::span<const int> alpha, std::span<const int> beta) {
  double c = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) c *= factorial(alpha[i]) / (factorial(beta[i]) * factorial(alpha[i] - beta[i]));
  return c;
}

bool central_element(const Element& a) {
  return a.empty() || (a.size() == 1 && a.terms()[0].key == zero_key(a.dim()));
}

cplx binomial(cplx s, int m) {
  cplx b = 1.0;
  for (int i = 0; i < m; ++i) b *= (s - static_cast<double>(i)) / static_cast<double>(i + 1);
  return b;
}

Jet norm_sq_jet(std::span<const Jet> xi) {
  Jet r(xi[0].space_ptr());
  for (const auto& x : xi) r += x * x;
  return r;
}

}  // namespace

Symbol::Symbol(ThetaPtr theta, SymbolOrder order, int support_radius, DerivativeOptions opts)
    : theta_(std::move(theta)), order_(order), support_radius_(support_radius), opts_(opts) {
  if (!theta_) throw InvalidArgument("Symbol: null theta");
  if (support_radius_ < 0) throw InvalidArgument("Symbol: negative support radius");
}

Element Symbol::eval_at(std::span<const int> k) const {
  std::vector<double> xi(k.begin(), k.end());
  return eval(xi);
}

Element Symbol::derivative(std::span<const int> alpha, std::span<const double> xi) const {
  if (static_cast<int>(alpha.size()) != dim() || static_cast<int>(xi.size()) != dim())
    throw DimensionMismatch("Symbol::derivative: dimension mismatch");
  const int d = degree(alpha);
  if (d > opts_.max_order)
    throw InvalidArgument("derivative order " + std::to_string(d) + " exceeds cap " + std::to_string(opts_.max_order));
  if (d == 0) return eval(xi);
  return derivative_impl(alpha, xi);
}

Element Symbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  return finite_difference_derivative(*this, alpha, xi, opts_.h0);
}

Element finite_difference_derivative(const Symbol& s, std::span<const int> alpha, std::span<const double> xi,
                                     double h0) {
  std::size_t i = 0;
  while (i < alpha.size() && alpha[i] == 0) ++i;
  if (i == alpha.size()) return s.eval(xi);
  Index lower(alpha.begin(), alpha.end());
  --lower[i];
  const double h = h0 * std::max(1.0, norm2(xi));
  std::vector<double> p(xi.begin(), xi.end());
  auto central = [&](double step) {
    p[i] = xi[i] + step;
    Element plus = finite_difference_derivative(s, lower, p, h0);
    p[i] = xi[i] - step;
    Element minus = finite_difference_derivative(s, lower, p, h0);
    p[i] = xi[i];
    return (1.0 / (2.0 * step)) * (plus - minus);
  };
  Element coarse = central(h);
  Element fine = central(0.5 * h);
  return (4.0 / 3.0) * fine - (1.0 / 3.0) * coarse;
}

// ---------------------------------------------------------------- profiles

namespace profile {

ScalarProfile one() {
  return {"1", [](std::span<const Jet> xi) { return Jet(xi[0].space_ptr(), 1.0); },
          false};
}

ScalarProfile japanese(cplx s) {
  std::ostringstream name;
  name << "<xi>^" << s.real();
  if (s.imag() != 0.0) name << (s.imag() > 0 ? "+" : "") << s.imag() << "i";
  return {name.str(),
          [s](std::span<const Jet> xi) {
            Jet r = norm_sq_jet(xi);
            r += Jet(xi[0].space_ptr(), 1.0);
            return pow(r, 0.5 * s);
          },
          false};
}

ScalarProfile norm_power(cplx q) {
  std::ostringstream name;
  name << "|xi|^" << q.real();
  if (q.imag() != 0.0) name << (q.imag() > 0 ? "+" : "") << q.imag() << "i";
  const bool even = q.imag() == 0.0 && q.real() >= 0.0 && std::fmod(q.real(), 2.0) == 0.0;
  if (even) {
    const int half = static_cast<int>(q.real() / 2.0);
    return {name.str(),
            [half](std::span<const Jet> xi) {
              Jet r2 = norm_sq_jet(xi);
              Jet r(xi[0].space_ptr(), 1.0);
              for (int i = 0; i < half; ++i) r = r * r2;
              return r;
            },
            false};
  }
  return {name.str(), [q](std::span<const Jet> xi) { return pow(norm_sq_jet(xi), 0.5 * q); }, true};
}

ScalarProfile gaussian(double w) {
  return {"gauss(" + std::to_string(w) + ")",
          [w](std::span<const Jet> xi) { return exp(norm_sq_jet(xi) * cplx(-0.5 / (w * w))); }, false};
}

ScalarProfile monomial(const Index& beta) {
  return {"xi^" + to_string(beta),
          [beta](std::span<const Jet> xi) {
            Jet r(xi[0].space_ptr(), 1.0);
            for (std::size_t i = 0; i < beta.size(); ++i)
              for (int p = 0; p < beta[i]; ++p) r = r * xi[i];
            return r;
          },
          false};
}

}  // namespace profile

// ---------------------------------------------------------------- scalar

ScalarSymbol::ScalarSymbol(ScalarProfile f, Element a, SymbolOrder order, DerivativeOptions opts)
    : Symbol(a.theta(), order, a.support_radius(), opts), f_(std::move(f)), a_(std::move(a)) {}

bool ScalarSymbol::is_central() const { return central_element(a_); }

std::string ScalarSymbol::describe() const {
  if (central_element(a_)) {
    std::ostringstream os;
    os << f_.name;
    if (!a_.empty() && a_.terms()[0].value != cplx(1.0)) os << "*" << a_.terms()[0].value;
    return os.str();
  }
  return f_.name + "*a";
}

cplx ScalarSymbol::profile_value(std::span<const double> xi) const {
  if (static_cast<int>(xi.size()) != dim()) throw DimensionMismatch("ScalarSymbol: xi has wrong dimension");
  if (f_.singular_at_origin && is_origin(xi))
    throw InvalidArgument(f_.name + " evaluated at xi = 0 without an origin convention");
  auto sp = JetSpace::get(dim(), 0);
  std::vector<Jet> x;
  for (int i = 0; i < dim(); ++i) x.push_back(Jet::variable(sp, i, xi[i]));
  return f_.f(x).value();
}

Element ScalarSymbol::eval(std::span<const double> xi) const { return profile_value(xi) * a_; }

Element ScalarSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  if (f_.singular_at_origin && is_origin(xi))
    throw InvalidArgument(f_.name + " differentiated at xi = 0");
  auto sp = JetSpace::get(dim(), degree(alpha));
  std::vector<Jet> x;
  for (int i = 0; i < dim(); ++i) x.push_back(Jet::variable(sp, i, xi[i]));
  return f_.f(x).derivative(alpha) * a_;
}

// ---------------------------------------------------------------- polynomial

namespace {
int max_support(const std::map<Index, Element>& c) {
  int r = 0;
  for (const auto& [alpha, a] : c) r = std::max(r, a.support_radius());
  return r;
}
int max_degree(const std::map<Index, Element>& c) {
  int d = 0;
  for (const auto& [alpha, a] : c)
    if (!a.empty()) d = std::max(d, degree(alpha));
  return d;
}
}  // namespace

PolynomialSymbol::PolynomialSymbol(ThetaPtr theta, std::map<Index, Element> coefficients, DerivativeOptions opts)
    : Symbol(theta, SymbolOrder{static_cast<double>(max_degree(coefficients))}, max_support(coefficients), opts) {
  for (auto& [alpha, a] : coefficients) {
    if (static_cast<int>(alpha.size()) != theta->dim())
      throw DimensionMismatch("PolynomialSymbol: multi-order " + to_string(alpha) + " has wrong dimension");
    for (int x : alpha)
      if (x < 0) throw InvalidArgument("PolynomialSymbol: negative multi-order");
    if (!same_theta(a.theta(), theta)) throw ThetaMismatch("PolynomialSymbol: coefficient on a different theta");
    if (a.empty()) continue;
    coeffs_.emplace(alpha, std::move(a));
  }
  degree_ = max_degree(coeffs_);
}

bool PolynomialSymbol::is_central() const {
  for (const auto& [alpha, a] : coeffs_)
    if (!central_element(a)) return false;
  return true;
}

std::string PolynomialSymbol::describe() const {
  std::ostringstream os;
  os << "poly(deg " << degree_ << ", " << coeffs_.size() << " terms)";
  return os.str();
}

Element PolynomialSymbol::eval(std::span<const double> xi) const {
  if (static_cast<int>(xi.size()) != dim()) throw DimensionMismatch("PolynomialSymbol: xi has wrong dimension");
  Element r(theta());
  for (const auto& [alpha, a] : coeffs_) {
    double m = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) m *= std::pow(xi[i], alpha[i]);
    if (m != 0.0) r += m * a;
  }
  return r;
}

Element PolynomialSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  Element r(theta());
  for (const auto& [beta, a] : coeffs_) {
    double m = 1.0;
    for (std::size_t i = 0; i < beta.size() && m != 0.0; ++i) {
      if (beta[i] < alpha[i]) {
        m = 0.0;
        break;
      }
      m *= factorial(beta[i]) / factorial(beta[i] - alpha[i]) * std::pow(xi[i], beta[i] - alpha[i]);
    }
    if (m != 0.0) r += m * a;
  }
  return r;
}

// ---------------------------------------------------------------- closures

FunctionSymbol::FunctionSymbol(ThetaPtr theta, SymbolOrder order, int support_radius, Eval eval, Deriv deriv,
                               std::string name, DerivativeOptions opts)
    : Symbol(std::move(theta), order, support_radius, opts),
      eval_(std::move(eval)),
      deriv_(std::move(deriv)),
      name_(std::move(name)) {}

Element FunctionSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  if (deriv_) return deriv_(alpha, xi);
  return finite_difference_derivative(*this, alpha, xi, derivative_options().h0);
}

ProductSymbol::ProductSymbol(SymbolPtr a, SymbolPtr b)
    : Symbol(a->theta(), SymbolOrder{a->order().q + b->order().q}, a->support_radius() + b->support_radius(),
             a->derivative_options()),
      a_(std::move(a)),
      b_(std::move(b)) {
  if (!same_theta(a_->theta(), b_->theta())) throw ThetaMismatch("ProductSymbol: factors on different theta");
}

Element ProductSymbol::eval(std::span<const double> xi) const {
  if (is_zero()) return Element(theta());
  return mul(a_->eval(xi), b_->eval(xi));
}

Element ProductSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  if (is_zero()) return Element(theta());
  if (!exact_derivatives()) return finite_difference_derivative(*this, alpha, xi, derivative_options().h0);
  Element r(theta());
  Index rest(alpha.size());
  for_each_suborder(alpha, [&](const Index& beta) {
    for (std::size_t i = 0; i < alpha.size(); ++i) rest[i] = alpha[i] - beta[i];
    r += binomial_product(alpha, beta) * mul(a_->derivative(beta, xi), b_->derivative(rest, xi));
  });
  return r;
}

SumSymbol::SumSymbol(ThetaPtr theta, SymbolOrder order, std::vector<std::pair<cplx, SymbolPtr>> terms)
    : Symbol(theta, order,
             [&] {
               int r = 0;
               for (const auto& t : terms) r = std::max(r, t.second->support_radius());
               return r;
             }()),
      terms_(std::move(terms)) {
  for (const auto& t : terms_)
    if (!same_theta(t.second->theta(), this->theta())) throw ThetaMismatch("SumSymbol: terms on different theta");
}

bool SumSymbol::exact_derivatives() const {
  for (const auto& t : terms_)
    if (!t.second->exact_derivatives()) return false;
  return true;
}

bool SumSymbol::is_zero() const {
  for (const auto& t : terms_)
    if (t.first != 0.0 && !t.second->is_zero()) return false;
  return true;
}

bool SumSymbol::is_central() const {
  for (const auto& t : terms_)
    if (!t.second->is_central()) return false;
  return true;
}

std::string SumSymbol::describe() const {
  std::string s;
  for (const auto& t : terms_) {
    if (t.second->is_zero()) continue;
    if (!s.empty()) s += " + ";
    s += t.second->describe();
  }
  return s.empty() ? "0" : s;
}

Element SumSymbol::eval(std::span<const double> xi) const {
  Element r(theta());
  for (const auto& [c, s] : terms_)
    if (c != 0.0 && !s->is_zero()) r += c * s->eval(xi);
  return r;
}

Element SumSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  Element r(theta());
  for (const auto& [c, s] : terms_)
    if (c != 0.0 && !s->is_zero()) r += c * s->derivative(alpha, xi);
  return r;
}

PartialSymbol::PartialSymbol(SymbolPtr base, Index alpha)
    : Symbol(base->theta(), SymbolOrder{base->order().q - static_cast<double>(degree(alpha))}, base->support_radius(),
             base->derivative_options()),
      base_(std::move(base)),
      alpha_(std::move(alpha)) {}

Element PartialSymbol::eval(std::span<const double> xi) const { return base_->derivative(alpha_, xi); }

Element PartialSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  Index total = alpha_;
  for (std::size_t i = 0; i < total.size(); ++i) total[i] += alpha[i];
  return base_->derivative(total, xi);
}

DeltaSymbol::DeltaSymbol(SymbolPtr base, Index alpha)
    : Symbol(base->theta(), base->order(), base->support_radius(), base->derivative_options()),
      base_(std::move(base)),
      alpha_(std::move(alpha)) {}

bool DeltaSymbol::is_zero() const { return base_->is_zero() || (degree(alpha_) > 0 && base_->is_central()); }

AdjointSymbol::AdjointSymbol(SymbolPtr base)
    : Symbol(base->theta(), SymbolOrder{std::conj(base->order().q)}, base->support_radius(), base->derivative_options()),
      base_(std::move(base)) {}

LatticeSymbol::LatticeSymbol(ThetaPtr theta, SymbolOrder order, int support_radius, Eval eval, std::string name)
    : Symbol(std::move(theta), order, support_radius), eval_(std::move(eval)), name_(std::move(name)) {}

Element LatticeSymbol::eval(std::span<const double> xi) const {
  Index k(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double r = std::round(xi[i]);
    if (std::abs(xi[i] - r) > 1e-12) throw InvalidArgument(name_ + ": evaluated off the lattice");
    k[i] = static_cast<int>(r);
  }
  return eval_(k);
}

Element LatticeSymbol::derivative_impl(std::span<const int>, std::span<const double>) const {
  throw InvalidArgument(name_ + ": lattice symbols have no xi-derivatives");
}

// ---------------------------------------------------------------- excision

ExcisedSymbol::ExcisedSymbol(SymbolPtr base, double radius)
    : Symbol(base->theta(), base->order(), base->support_radius(), base->derivative_options()),
      base_(std::move(base)),
      radius_(radius) {
  if (radius_ < 0.0) throw InvalidArgument("excise_origin: negative cutoff radius");
}

bool ExcisedSymbol::excised(std::span<const double> xi) const {
  return radius_ == 0.0 ? is_origin(xi) : norm2(xi) <= radius_;
}

Element ExcisedSymbol::eval(std::span<const double> xi) const {
  return excised(xi) ? Element(theta()) : base_->eval(xi);
}

Element ExcisedSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  return excised(xi) ? Element(theta()) : base_->derivative(alpha, xi);
}

SymbolPtr excise_origin(const HomogeneousComponent& comp, double radius) {
  return std::make_shared<ExcisedSymbol>(comp.symbol, radius);
}

HomogeneousComponent HomogeneousComponent::zero(const ThetaPtr& theta, cplx degree) {
  return {degree, std::make_shared<ZeroSymbol>(theta, SymbolOrder{degree})};
}

// ---------------------------------------------------------------- classical

namespace {
int components_support(const std::vector<HomogeneousComponent>& c) {
  int r = 0;
  for (const auto& h : c) r = std::max(r, h.symbol->support_radius());
  return r;
}
}  // namespace

ClassicalSymbol::ClassicalSymbol(ThetaPtr theta, cplx q, std::vector<HomogeneousComponent> components, Origin origin,
                                 double excision_radius)
    : Symbol(theta, SymbolOrder{q}, components_support(components)),
      components_(std::move(components)),
      origin_(origin),
      excision_radius_(excision_radius) {
  if (excision_radius_ < 0.0) throw InvalidArgument("ClassicalSymbol: negative excision radius");
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const auto& c = components_[j];
    if (!same_theta(c.symbol->theta(), this->theta()))
      throw ThetaMismatch("ClassicalSymbol: component on a different theta");
    if (std::abs(c.degree - (q - static_cast<double>(j))) > 1e-12)
      throw InvalidArgument("ClassicalSymbol: component " + std::to_string(j) + " must have degree q - " +
                            std::to_string(j));
  }
}

bool ClassicalSymbol::excised(std::span<const double> xi) const {
  if (origin_ != Origin::Excise) return false;
  return excision_radius_ == 0.0 ? is_origin(xi) : norm2(xi) <= excision_radius_;
}

Element ClassicalSymbol::eval(std::span<const double> xi) const {
  if (static_cast<int>(xi.size()) != dim()) throw DimensionMismatch("ClassicalSymbol: xi has wrong dimension");
  if (excised(xi)) return Element(theta());
  if (origin_ == Origin::Reject && is_origin(xi))
    throw InvalidArgument("classical symbol evaluated at xi = 0 without an origin convention");
  Element r(theta());
  for (const auto& c : components_)
    if (!c.symbol->is_zero()) r += c.symbol->eval(xi);
  return r;
}

Element ClassicalSymbol::derivative_impl(std::span<const int> alpha, std::span<const double> xi) const {
  if (excised(xi)) return Element(theta());
  Element r(theta());
  for (const auto& c : components_)
    if (!c.symbol->is_zero()) r += c.symbol->derivative(alpha, xi);
  return r;
}

bool ClassicalSymbol::exact_derivatives() const {
  for (const auto& c : components_)
    if (!c.symbol->exact_derivatives()) return false;
  return true;
}

bool ClassicalSymbol::is_zero() const {
  for (const auto& c : components_)
    if (!c.symbol->is_zero()) return false;
  return true;
}

bool ClassicalSymbol::is_central() const {
  for (const auto& c : components_)
    if (!c.symbol->is_central()) return false;
  return true;
}

std::string ClassicalSymbol::describe() const {
  std::string s = "classical[";
  for (std::size_t j = 0; j < components_.size(); ++j) {
    if (j) s += ", ";
    s += components_[j].symbol->describe();
  }
  return s + "]";
}

std::shared_ptr<const ClassicalSymbol> ClassicalSymbol::partial(std::size_t N) const {
  N = std::min(N, components_.size());
  return std::make_shared<ClassicalSymbol>(theta(), order().q,
                                           std::vector<HomogeneousComponent>(components_.begin(), components_.begin() + N),
                                           origin_, excision_radius_);
}

double homogeneity_check(const HomogeneousComponent& comp, const std::vector<std::vector<double>>& samples,
                         const std::vector<double>& lambdas) {
  double worst = 0.0;
  for (const auto& xi : samples) {
    Element base = comp.symbol->eval(xi);
    const double nb = base.l2_norm();
    for (double lam : lambdas) {
      std::vector<double> scaled(xi);
      for (auto& x : scaled) x *= lam;
      const cplx factor = std::exp(comp.degree * std::log(lam));
      const double d = l2_distance(comp.symbol->eval(scaled), factor * base);
      if (nb == 0.0) {
        if (d > 0.0) worst = std::numeric_limits<double>::infinity();
      } else {
        worst = std::max(worst, d / (std::abs(factor) * nb));
      }
    }
  }
  return worst;
}

std::vector<std::vector<double>> sphere_samples(int n, int count) {
  if (n < 1 || count < 1) throw InvalidArgument("sphere_samples: bad arguments");
  std::vector<std::vector<double>> out;
  if (n == 2) {
    for (int i = 0; i < count; ++i) {
      const double t = 2.0 * std::numbers::pi * i / count;
      out.push_back({std::cos(t), std::sin(t)});
    }
  } else if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / count;
      const double r = std::sqrt(1.0 - z * z);
      out.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
    }
  } else {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> g;
    while (static_cast<int>(out.size()) < count) {
      std::vector<double> v(n);
      for (auto& x : v) x = g(rng);
      const double r = norm2(v);
      if (r < 1e-3) continue;
      for (auto& x : v) x /= r;
      out.push_back(std::move(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------- builders

std::shared_ptr<const PolynomialSymbol> laplacian_symbol(const ThetaPtr& theta) {
  std::map<Index, Element> c;
  for (int j = 0; j < theta->dim(); ++j) {
    Index a(theta->dim(), 0);
    a[j] = 2;
    c.emplace(a, Element::scalar(1.0, theta));
  }
  return std::make_shared<PolynomialSymbol>(theta, std::move(c));
}

std::shared_ptr<const ScalarSymbol> japanese_symbol(const ThetaPtr& theta, cplx s) {
  return japanese_symbol(s, Element::scalar(1.0, theta));
}

std::shared_ptr<const ScalarSymbol> japanese_symbol(cplx s, const Element& a) {
  return std::make_shared<ScalarSymbol>(profile::japanese(s), a, SymbolOrder{s});
}

std::shared_ptr<const ScalarSymbol> constant_symbol(const Element& a) {
  return std::make_shared<ScalarSymbol>(profile::one(), a, SymbolOrder{0.0});
}

HomogeneousComponent norm_power_component(cplx q, const Element& a) {
  return {q, std::make_shared<ScalarSymbol>(profile::norm_power(q), a, SymbolOrder{q})};
}

std::shared_ptr<const ClassicalSymbol> japanese_classical(const ThetaPtr& theta, cplx s, int J) {
  std::vector<HomogeneousComponent> comps;
  for (int j = 0; j < J; ++j) {
    const cplx d = s - static_cast<double>(j);
    if (j % 2) {
      comps.push_back(HomogeneousComponent::zero(theta, d));
    } else {
      comps.push_back(norm_power_component(d, Element::scalar(binomial(0.5 * s, j / 2), theta)));
    }
  }
  return std::make_shared<ClassicalSymbol>(theta, s, std::move(comps));
}

std::shared_ptr<const ClassicalSymbol> classical_from_polynomial(const PolynomialSymbol& p, int J) {
  std::vector<HomogeneousComponent> comps;
  const int top = p.degree();
  for (int j = 0; j < J; ++j) {
    const int d = top - j;
    std::map<Index, Element> part;
    for (const auto& [alpha, a] : p.coefficients())
      if (degree(alpha) == d) part.emplace(alpha, a);
    if (part.empty()) {
      comps.push_back(HomogeneousComponent::zero(p.theta(), static_cast<double>(d)));
    } else {
      comps.push_back({static_cast<double>(d), std::make_shared<PolynomialSymbol>(p.theta(), std::move(part),
                                                                                  p.derivative_options())});
    }
  }
  return std::make_shared<ClassicalSymbol>(p.theta(), static_cast<double>(top), std::move(comps));
}

void save_polynomial_symbol(const PolynomialSymbol& p, const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const fs::path manifest(manifest_path);
  const fs::path dir = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
  std::ofstream out(manifest);
  if (!out) throw InvalidArgument("cannot write " + manifest_path);
  out << "# alpha_1 .. alpha_n element-file\n";
  int i = 0;
  for (const auto& [alpha, a] : p.coefficients()) {
    const std::string file = manifest.stem().string() + "_" + std::to_string(i++) + ".elem";
    save_element((dir / file).string(), a);
    for (int x : alpha) out << x << ' ';
    out << file << '\n';
  }
}

std::shared_ptr<const PolynomialSymbol> load_polynomial_symbol(const std::string& manifest_path,
                                                              const ThetaPtr& theta) {
  namespace fs = std::filesystem;
  const fs::path manifest(manifest_path);
  const fs::path dir = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
  std::ifstream in(manifest);
  if (!in) throw InvalidArgument("cannot read " + manifest_path);
  std::map<Index, Element> coeffs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    Index alpha(theta->dim());
    std::string file;
    for (auto& x : alpha)
      if (!(is >> x)) throw InvalidArgument(manifest_path + ":" + std::to_string(lineno) + ": bad multi-order");
    if (!(is >> file)) throw InvalidArgument(manifest_path + ":" + std::to_string(lineno) + ": missing element file");
    const fs::path f = fs::path(file).is_absolute() ? fs::path(file) : dir / file;
    Element a = load_element(f.string(), theta);
    auto [it, fresh] = coeffs.emplace(alpha, a);
    if (!fresh) it->second += a;
  }
  return std::make_shared<PolynomialSymbol>(theta, std::move(coeffs));
}

}  // namespace nctori
