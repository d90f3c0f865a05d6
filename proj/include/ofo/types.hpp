#pragma once

#include <Eigen/Dense>

namespace ofo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace ofo
