#pragma once

#include <Eigen/Dense>

namespace nncert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace nncert
