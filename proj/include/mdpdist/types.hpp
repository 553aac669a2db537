#pragma once

#include <Eigen/Dense>
#include <limits>

namespace mdpdist {

using Scalar = double;
using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr Scalar kInfinity = std::numeric_limits<Scalar>::infinity();

}  // namespace mdpdist
