#pragma once

#include <Eigen/Dense>

namespace staq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace staq
