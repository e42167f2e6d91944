#pragma once

#include "stiefel/lie_core.hpp"

namespace stiefel {

/** \brief Matrix exponential by scaling and squaring with a degree-13 Pade approximant. */
Matrix expm(const Matrix& a);

/** \brief Returns the integral of exp(s m) over s in [0, t].
 *
 * Read off the upper-right block of exp([[t m, t I], [0, 0]]), so singular m is fine.
 */
Matrix integral_of_exp(const Matrix& m, double t);

/// Orthogonal polar factor U V^T of a square matrix. Throws on (numerically) singular input.
Matrix polar_factor(const Matrix& m);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace stiefel
