#pragma once

#include "stiefel/lie_core.hpp"

namespace stiefel {

/// Column-stacking: vec(A W B) = (B^T kron A) vec(W).
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index n, Eigen::Index k);

/// I_k kron xi1 + xi2 kron I_n, the matrix of W -> xi1 W - W xi2 on vec(W).
Matrix kron_generator(const LieAlgPair& xi);

/// theta kron R, the matrix of W -> R W theta^T on vec(W).
Matrix kron_group(const GroupPair& g);

/// nk x nk matrix of W -> 1/2 X (X^T W + W^T X).
Matrix normal_projector_vec(const Matrix& x);

}  // namespace stiefel
