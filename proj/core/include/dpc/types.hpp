#pragma once

#include <Eigen/Dense>
#include <random>

namespace dpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace dpc
