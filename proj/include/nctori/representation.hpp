#pragma once

// Left-regular representation of elements on the truncated Fourier basis
// and the truncated holomorphic functional calculus built on it.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nctori/element.hpp"
#include "nctori/lattice.hpp"

namespace nctori {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// L[k][l] = <u U^l, U^k> = u_{k-l} chi(k-l, l) over the box |k|_inf <= K in
/// BoxBasis order. Requires support_radius(u) <= trunc.margin.
Matrix left_mult_matrix(const Element& u, const Truncation& trunc);

/// Partition of the box into classes linked by translations through the
/// support of u. The truncated left multiplication matrix is block diagonal
/// over these classes. Positions are BoxBasis positions, each class sorted.
std::vector<std::vector<std::size_t>> coupling_classes(const Element& u, const BoxBasis& box);

/// Rows and columns of L_u restricted to the listed box positions.
Matrix left_mult_block(const Element& u, const BoxBasis& box, const std::vector<std::size_t>& positions);

/// Reads a coefficient vector over box positions back into an element,
/// keeping modes with |k|_inf <= radius.
Element element_from_vector(const Vector& x, const std::vector<std::size_t>& positions, const BoxBasis& box,
                            const ThetaPtr& theta, int radius);

/// Scalar holomorphic function together with where it is singular.
struct ScalarFunction {
  enum class Cut { None, Zero, NegativeReal };
  std::function<cplx(cplx)> f;
  Cut cut = Cut::None;
  std::string name;
};

namespace fn {
ScalarFunction identity();
ScalarFunction exp();
ScalarFunction log();
ScalarFunction sqrt();
ScalarFunction reciprocal();
/// z^s on the principal branch.
ScalarFunction power(double s);
}  // namespace fn

struct FuncalcOptions {
  double gap = 1e-8;               ///< required distance of the spectrum from the cut
  double hermitian_tol = 1e-12;    ///< relative ||u - u*|| below which u is treated as selfadjoint
  double normal_tol = 1e-10;       ///< relative ||uu* - u*u|| accepted as normal
  double max_eigvec_cond = 1e8;    ///< conditioning cap for the non-selfadjoint path
};

/// f(u) at truncation: c_k = <f(L_u) e_0, e_k>, kept on the inner window.
Element funcalc(const ScalarFunction& f, const Element& u, const Truncation& trunc,
                const FuncalcOptions& opts = {});

/// l2 distance on the inner window between funcalc at K and at 2K (same margin).
double funcalc_convergence(const ScalarFunction& f, const Element& u, const Truncation& trunc,
                           const FuncalcOptions& opts = {});

/// u^{-1} at truncation: solves L_u x = e_0 and keeps x on the inner window.
Element inverse_element(const Element& u, const Truncation& trunc, double gap = 1e-8);

/// Smallest singular value of the block of L_u that contains e_0.
double min_singular_value_at_origin(const Element& u, const Truncation& trunc);

}  // namespace nctori
