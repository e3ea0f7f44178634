#pragma once
// Symbols: maps xi in R^n -> element of A_theta, evaluated pointwise.
//
// Operators only see lattice values (xi in Z^n); off-lattice evaluation is
// used for xi-derivatives and for the integral trace. Symbols are immutable
// and shared through SymbolPtr.
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nctori/element.hpp"
#include "nctori/jet.hpp"

namespace nctori {

struct SymbolOrder {
  cplx q = 0.0;
  double m() const { return q.real(); }
};

struct DerivativeOptions {
  int max_order = 8;
  double h0 = 1e-3;  ///< finite-difference step is h0 * max(1, |xi|)
};

class Symbol {
 public:
  Symbol(ThetaPtr theta, SymbolOrder order, int support_radius, DerivativeOptions opts = {});
  virtual ~Symbol() = default;

  int dim() const { return theta_->dim(); }
  const ThetaPtr& theta() const { return theta_; }
  SymbolOrder order() const { return order_; }
  /// Declared bound on |k|_inf over the Fourier support of every value.
  int support_radius() const { return support_radius_; }
  const DerivativeOptions& derivative_options() const { return opts_; }

  virtual Element eval(std::span<const double> xi) const = 0;
  Element eval_at(std::span<const int> k) const;

  /// d_xi^alpha rho(xi). Exact when exact_derivatives(), otherwise central
  /// differences with one Richardson step.
  Element derivative(std::span<const int> alpha, std::span<const double> xi) const;

  virtual bool exact_derivatives() const { return false; }
  /// Structurally zero.
  virtual bool is_zero() const { return false; }
  /// Every value is a multiple of 1, so delta^alpha kills it for alpha != 0.
  virtual bool is_central() const { return false; }
  virtual std::string describe() const { return "symbol"; }

 protected:
  virtual Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const;

 private:
  ThetaPtr theta_;
  SymbolOrder order_;
  int support_radius_;
  DerivativeOptions opts_;
};

using SymbolPtr = std::shared_ptr<const Symbol>;

/// Central differences of order 2 in each direction with Richardson
/// extrapolation, applied one coordinate at a time.
Element finite_difference_derivative(const Symbol& s, std::span<const int> alpha, std::span<const double> xi,
                                     double h0);

/// Scalar function of xi given on jets, so all derivatives come exactly.
struct ScalarProfile {
  std::string name;
  std::function<Jet(std::span<const Jet>)> f;
  bool singular_at_origin = false;
};

namespace profile {
ScalarProfile one();
/// <xi>^s = (1 + |xi|^2)^{s/2}
ScalarProfile japanese(cplx s);
/// |xi|^q, singular at 0 unless q is a nonnegative even integer.
ScalarProfile norm_power(cplx q);
/// exp(-|xi|^2 / (2 w^2))
ScalarProfile gaussian(double w);
/// xi^beta
ScalarProfile monomial(const Index& beta);
}  // namespace profile

/// f(xi) * a for a scalar profile f and a fixed element a.
class ScalarSymbol : public Symbol {
 public:
  ScalarSymbol(ScalarProfile f, Element a, SymbolOrder order, DerivativeOptions opts = {});
  Element eval(std::span<const double> xi) const override;
  bool exact_derivatives() const override { return true; }
  bool is_zero() const override { return a_.empty(); }
  bool is_central() const override;
  std::string describe() const override;
  const Element& coefficient() const { return a_; }
  cplx profile_value(std::span<const double> xi) const;

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  ScalarProfile f_;
  Element a_;
};

/// rho(xi) = sum_alpha a_alpha xi^alpha, the symbol of sum_alpha a_alpha delta^alpha.
class PolynomialSymbol : public Symbol {
 public:
  PolynomialSymbol(ThetaPtr theta, std::map<Index, Element> coefficients, DerivativeOptions opts = {});
  Element eval(std::span<const double> xi) const override;
  bool exact_derivatives() const override { return true; }
  bool is_zero() const override { return coeffs_.empty(); }
  bool is_central() const override;
  std::string describe() const override;
  const std::map<Index, Element>& coefficients() const { return coeffs_; }
  int degree() const { return degree_; }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  std::map<Index, Element> coeffs_;
  int degree_ = 0;
};

/// Arbitrary closures. Without a derivative closure the finite-difference
/// fallback is used.
class FunctionSymbol : public Symbol {
 public:
  using Eval = std::function<Element(std::span<const double>)>;
  using Deriv = std::function<Element(std::span<const int>, std::span<const double>)>;
  FunctionSymbol(ThetaPtr theta, SymbolOrder order, int support_radius, Eval eval, Deriv deriv = nullptr,
                 std::string name = "function", DerivativeOptions opts = {});
  Element eval(std::span<const double> xi) const override { return eval_(xi); }
  bool exact_derivatives() const override { return static_cast<bool>(deriv_); }
  std::string describe() const override { return name_; }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  Eval eval_;
  Deriv deriv_;
  std::string name_;
};

class ZeroSymbol : public Symbol {
 public:
  ZeroSymbol(ThetaPtr theta, SymbolOrder order) : Symbol(std::move(theta), order, 0) {}
  Element eval(std::span<const double>) const override { return Element(theta()); }
  bool exact_derivatives() const override { return true; }
  bool is_zero() const override { return true; }
  bool is_central() const override { return true; }
  std::string describe() const override { return "0"; }

 protected:
  Element derivative_impl(std::span<const int>, std::span<const double>) const override { return Element(theta()); }
};

/// Pointwise product a(xi) b(xi); derivatives by the Leibniz rule.
class ProductSymbol : public Symbol {
 public:
  ProductSymbol(SymbolPtr a, SymbolPtr b);
  Element eval(std::span<const double> xi) const override;
  bool exact_derivatives() const override { return a_->exact_derivatives() && b_->exact_derivatives(); }
  bool is_zero() const override { return a_->is_zero() || b_->is_zero(); }
  bool is_central() const override { return a_->is_central() && b_->is_central(); }
  std::string describe() const override { return "(" + a_->describe() + ")(" + b_->describe() + ")"; }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  SymbolPtr a_, b_;
};

/// sum_i c_i rho_i(xi). The order is declared by the caller.
class SumSymbol : public Symbol {
 public:
  SumSymbol(ThetaPtr theta, SymbolOrder order, std::vector<std::pair<cplx, SymbolPtr>> terms);
  Element eval(std::span<const double> xi) const override;
  bool exact_derivatives() const override;
  bool is_zero() const override;
  bool is_central() const override;
  std::string describe() const override;
  const std::vector<std::pair<cplx, SymbolPtr>>& terms() const { return terms_; }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  std::vector<std::pair<cplx, SymbolPtr>> terms_;
};

/// d_xi^alpha rho as a symbol of order q - |alpha|.
class PartialSymbol : public Symbol {
 public:
  PartialSymbol(SymbolPtr base, Index alpha);
  Element eval(std::span<const double> xi) const override;
  bool exact_derivatives() const override { return base_->exact_derivatives(); }
  bool is_zero() const override { return base_->is_zero(); }
  bool is_central() const override { return base_->is_central(); }
  std::string describe() const override { return "d^" + to_string(alpha_) + " " + base_->describe(); }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  SymbolPtr base_;
  Index alpha_;
};

/// delta^alpha applied to the values.
class DeltaSymbol : public Symbol {
 public:
  DeltaSymbol(SymbolPtr base, Index alpha);
  Element eval(std::span<const double> xi) const override { return delta(alpha_, base_->eval(xi)); }
  bool exact_derivatives() const override { return base_->exact_derivatives(); }
  bool is_zero() const override;
  bool is_central() const override { return is_zero() || base_->is_central(); }
  std::string describe() const override { return "delta^" + to_string(alpha_) + " " + base_->describe(); }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override {
    return delta(alpha_, base_->derivative(alpha, xi));
  }

 private:
  SymbolPtr base_;
  Index alpha_;
};

/// xi -> rho(xi)^*.
class AdjointSymbol : public Symbol {
 public:
  explicit AdjointSymbol(SymbolPtr base);
  Element eval(std::span<const double> xi) const override { return involution(base_->eval(xi)); }
  bool exact_derivatives() const override { return base_->exact_derivatives(); }
  bool is_zero() const override { return base_->is_zero(); }
  bool is_central() const override { return base_->is_central(); }
  std::string describe() const override { return "(" + base_->describe() + ")*"; }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override {
    return involution(base_->derivative(alpha, xi));
  }

 private:
  SymbolPtr base_;
};

/// Only defined on Z^n; evaluation off the lattice throws.
class LatticeSymbol : public Symbol {
 public:
  using Eval = std::function<Element(std::span<const int>)>;
  LatticeSymbol(ThetaPtr theta, SymbolOrder order, int support_radius, Eval eval, std::string name = "lattice");
  Element eval(std::span<const double> xi) const override;
  std::string describe() const override { return name_; }

 protected:
  Element derivative_impl(std::span<const int>, std::span<const double>) const override;

 private:
  Eval eval_;
  std::string name_;
};

/// Symbol set to 0 on |xi| <= radius (radius 0: only xi = 0).
class ExcisedSymbol : public Symbol {
 public:
  ExcisedSymbol(SymbolPtr base, double radius);
  Element eval(std::span<const double> xi) const override;
  bool exact_derivatives() const override { return base_->exact_derivatives(); }
  bool is_zero() const override { return base_->is_zero(); }
  bool is_central() const override { return base_->is_central(); }
  std::string describe() const override { return "excised(" + base_->describe() + ")"; }
  bool excised(std::span<const double> xi) const;
  double radius() const { return radius_; }
  const SymbolPtr& base() const { return base_; }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  SymbolPtr base_;
  double radius_;
};

struct HomogeneousComponent {
  cplx degree;
  SymbolPtr symbol;  ///< evaluated on xi != 0
  static HomogeneousComponent zero(const ThetaPtr& theta, cplx degree);
};

/// Finite jet rho_q + rho_{q-1} + ... + rho_{q-J}.
class ClassicalSymbol : public Symbol {
 public:
  enum class Origin { Excise, Reject };
  ClassicalSymbol(ThetaPtr theta, cplx q, std::vector<HomogeneousComponent> components,
                  Origin origin = Origin::Excise, double excision_radius = 0.0);
  Element eval(std::span<const double> xi) const override;
  bool exact_derivatives() const override;
  bool is_zero() const override;
  bool is_central() const override;
  std::string describe() const override;

  const std::vector<HomogeneousComponent>& components() const { return components_; }
  const HomogeneousComponent& component(std::size_t j) const { return components_.at(j); }
  /// Sum of the first N components with the same origin convention.
  std::shared_ptr<const ClassicalSymbol> partial(std::size_t N) const;
  bool excised(std::span<const double> xi) const;
  Origin origin() const { return origin_; }

 protected:
  Element derivative_impl(std::span<const int> alpha, std::span<const double> xi) const override;

 private:
  std::vector<HomogeneousComponent> components_;
  Origin origin_;
  double excision_radius_;
};

/// Sets the component to zero on lattice points with |xi| <= radius.
SymbolPtr excise_origin(const HomogeneousComponent& comp, double radius = 0.0);

/// max over samples and lambdas of ||rho(l xi) - l^d rho(xi)|| / ||rho(xi)||.
double homogeneity_check(const HomogeneousComponent& comp, const std::vector<std::vector<double>>& samples,
                         const std::vector<double>& lambdas);

/// Quasi-uniform directions on the unit sphere: an angular grid for n = 2,
/// a Fibonacci lattice for n = 3, normalized seeded Gaussians otherwise.
std::vector<std::vector<double>> sphere_samples(int n, int count);

// Common symbols.
std::shared_ptr<const PolynomialSymbol> laplacian_symbol(const ThetaPtr& theta);
/// <xi>^s a
std::shared_ptr<const ScalarSymbol> japanese_symbol(const ThetaPtr& theta, cplx s);
std::shared_ptr<const ScalarSymbol> japanese_symbol(cplx s, const Element& a);
/// rho(xi) = a for all xi.
std::shared_ptr<const ScalarSymbol> constant_symbol(const Element& a);
/// |xi|^q a as a homogeneous component.
HomogeneousComponent norm_power_component(cplx q, const Element& a);
/// Binomial jet of <xi>^s: components binom(s/2, j) |xi|^{s-2j} at degree s - 2j,
/// zero components at odd offsets. J counts all components.
std::shared_ptr<const ClassicalSymbol> japanese_classical(const ThetaPtr& theta, cplx s, int J);
/// Classical jet of a polynomial symbol: homogeneous parts by degree.
std::shared_ptr<const ClassicalSymbol> classical_from_polynomial(const PolynomialSymbol& p, int J);

// Polynomial symbol files: one record per line "alpha_1 .. alpha_n path",
// paths relative to the manifest's directory.
void save_polynomial_symbol(const PolynomialSymbol& p, const std::string& manifest_path);
std::shared_ptr<const PolynomialSymbol> load_polynomial_symbol(const std::string& manifest_path,
                                                              const ThetaPtr& theta);

}  // namespace nctori
