#pragma once
// Sobolev norms, duality, truncated spectra and the Weyl/Schatten/decay fits.
#include <cstdint>
#include <string>
#include <vector>

#include "nctori/fit.hpp"
#include "nctori/psido.hpp"

namespace nctori {

/// ||u||_s = (sum_k (1+|k|^2)^s |u_k|^2)^{1/2}
double sobolev_norm(const Element& u, double s);
/// Lambda^s u, coefficient-wise (1+|k|^2)^{s/2}.
Element lambda_apply(double s, const Element& u);
/// <u, v> = tau(u v)
cplx pairing(const Element& u, const Element& v);

struct DualityReport {
  double exact_norm = 0.0;       ///< ||u||_{-s}
  Element maximizer;             ///< v with ||v||_s = 1 and tau(u v) = ||u||_{-s}
  cplx maximizer_pairing = 0.0;
  double maximizer_norm = 0.0;   ///< ||v||_s, should be 1
  double sup_trials = 0.0;       ///< max |tau(u v)| / ||v||_s over random trials
  double max_holder_ratio = 0.0; ///< max |tau(u v)| / (||u||_{-s} ||v||_s)
  std::size_t violations = 0;    ///< trials with ratio > 1 + 1e-12
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

DualityReport duality_gap(const Element& u, double s, int trial_count, std::uint64_t seed = 20240601);

struct SpectrumResult {
  std::vector<cplx> values;      ///< eigenvalues ascending (by real part), or singular values descending
  bool singular_values = false;
  std::string solver;
  Truncation trunc;
  int trusted_radius = 0;
  /// Eigenvalues above this are truncation-affected: (K/2)^m for order m > 0.
  double validity_cut = 0.0;
  /// Eigenvectors as elements, phase-normalized; empty unless requested.
  std::vector<Element> vectors;
  std::vector<double> residuals;  ///< ||M v - lambda v|| per returned pair (Hermitian/generalized)
  double matrix_norm = 0.0;       ///< ||M|| of the solved block (Frobenius)
};

/// Eigenvalues of the trusted block of build_matrix(P).
SpectrumResult spectrum(const PsiDO& P, const Truncation& trunc, bool hermitian, bool want_vectors = false);
/// Generalized problem A x = lambda L_w x on the trusted window, A Hermitian
/// and w a positive element.
SpectrumResult spectrum_generalized(const PsiDO& A, const Element& weight, const Truncation& trunc,
                                    bool want_vectors = false);
/// Singular values of the trusted block, descending.
SpectrumResult singular_values(const PsiDO& P, const Truncation& trunc);

struct WeylResult {
  double ratio = 0.0;
  std::size_t count = 0;
  double lambda_cut = 0.0;
  double weyl_constant = 0.0;  ///< pi^{n/2} / Gamma(n/2 + 1)
  bool degenerate = false;     ///< lambda_cut = 0
};

/// N(lambda)/(c lambda^{n/2}). Throws when the ball |k| <= sqrt(lambda_cut)
/// leaves the trusted window.
WeylResult weyl_ratio(const SpectrumResult& spec, int n, double lambda_cut);
/// Exact lattice count #{k : |k|^2 <= lambda}.
std::size_t lattice_count(int n, double lambda);

/// Log-log fit of mu_k vs k (k counted from 0) over k in [k_lo, k_hi].
SlopeFit schatten_slope(const PsiDO& P, const Truncation& trunc, double k_lo, double k_hi);
SlopeFit schatten_slope(const SpectrumResult& sv, double k_lo, double k_hi);

/// Fit of log max_{|k|_inf = R} |v_k| vs log R, R >= 1, ignoring shells
/// below 1e-13 of the largest coefficient.
SlopeFit smoothness_decay(const Element& v);

/// Writes <stem>.csv (index,re,im) and <stem>.json (K, trusted cut, solver, seed).
void export_spectrum(const SpectrumResult& spec, const std::string& stem, std::uint64_t seed = 0);

}  // namespace nctori
