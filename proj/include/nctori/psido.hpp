#pragma once
// Pseudodifferential operators P_rho u = sum_k u_k rho(k) U^k, their
// truncated matrices, exact lattice composition, and the asymptotic sharp
// and star expansions.
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nctori/fit.hpp"
#include "nctori/representation.hpp"
#include "nctori/symbol.hpp"

namespace nctori {

class PsiDO {
 public:
  explicit PsiDO(SymbolPtr symbol);
  const Symbol& symbol() const { return *symbol_; }
  const SymbolPtr& symbol_ptr() const { return symbol_; }
  SymbolOrder order() const { return symbol_->order(); }

 private:
  SymbolPtr symbol_;
};

Element apply(const PsiDO& P, const Element& u);

/// Dense matrix over the box |k|_inf <= K. Columns with |l|_inf <= K - margin
/// are exact images of basis vectors; the rest may have lost spillover.
struct OperatorMatrix {
  Matrix entries;
  Truncation trunc;
  std::shared_ptr<const BoxBasis> box;

  int trusted_radius() const { return trunc.inner(); }
  std::vector<std::size_t> trusted() const { return box->window(trusted_radius()); }
  /// Rows and columns restricted to the trusted window.
  Matrix trusted_block() const;
};

OperatorMatrix build_matrix(const PsiDO& P, const Truncation& trunc);
OperatorMatrix build_matrix(const Symbol& rho, const Truncation& trunc);
/// Diagonal matrix of delta_j on the box.
Matrix delta_matrix(const BoxBasis& box, int j);
/// Largest singular value.
double spectral_norm(const Matrix& m);

/// (rho1 # rho2)(k), computed exactly through the operators on basis vectors.
Element exact_sharp_at(const Symbol& rho1, const Symbol& rho2, std::span<const int> k);
/// The exact composite as a lattice symbol.
SymbolPtr exact_sharp_symbol(SymbolPtr rho1, SymbolPtr rho2);

/// sum_{|alpha| < N} (1/alpha!) d_xi^alpha rho1(xi) delta^alpha rho2(xi)
Element sharp_expansion(const Symbol& rho1, const Symbol& rho2, int N, std::span<const double> xi);
SymbolPtr sharp_expansion_symbol(SymbolPtr rho1, SymbolPtr rho2, int N);

struct ShellNorms {
  std::vector<int> radii;
  std::vector<double> errors;  ///< E(R) = max_{|k|_inf = R} ||exact - expansion||_0
  std::vector<double> scales;  ///< max ||exact||_0 on the same shell
  /// Fit over shells where E(R) is above round-off (1e-13 of the scale).
  SlopeFit fit;
};

ShellNorms remainder_shell_norms(const Symbol& rho1, const Symbol& rho2, int N, const std::vector<int>& radii);

/// Lattice value of the symbol of the formal adjoint: (P^* U^l) (U^l)^{-1},
/// with P^* U^l = sum_k conj(<P U^k, U^l>) U^k.
Element exact_adjoint_at(const Symbol& rho, std::span<const int> l);
SymbolPtr exact_adjoint_symbol(SymbolPtr rho);

/// sum_{|alpha| < N} (1/alpha!) delta^alpha d_xi^alpha [rho(xi)^*]
Element star_expansion(const Symbol& rho, int N, std::span<const double> xi);
SymbolPtr star_expansion_symbol(SymbolPtr rho, int N);

/// Component j of rho # sigma: sum_{k+l+|alpha|=j} (1/alpha!) d^alpha rho_{q1-k} delta^alpha sigma_{q2-l}.
std::shared_ptr<const ClassicalSymbol> compose_classical(const ClassicalSymbol& rho, const ClassicalSymbol& sigma,
                                                         int J);

/// Writes <stem>.csv (one matrix row per line, interleaved re,im) and
/// <stem>.json describing the basis order and trusted window.
void export_operator_matrix(const OperatorMatrix& m, const std::string& stem);

}  // namespace nctori
