#pragma once

#include "mrfcs/types.hpp"

namespace mrfcs {

// Orthonormal full-depth 2D Haar transform of a square power-of-two image,
// Mallat layout with the scaling coefficient at (0,0). W^T W = Id.
Eigen::MatrixXd haar2(const Eigen::MatrixXd& image);
Eigen::MatrixXd ihaar2(const Eigen::MatrixXd& coeffs);

// Keeps the k largest-magnitude entries and zeroes the rest; ties broken by
// lowest index. k >= len(c) is the identity, k = 0 the zero vector.
Eigen::VectorXd hard_threshold(const Eigen::VectorXd& c, Index k);

}  // namespace mrfcs
