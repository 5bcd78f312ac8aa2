#pragma once

#include <Eigen/Dense>

namespace bregmangrid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kHalfPi = 1.57079632679489661923;

}  // namespace bregmangrid
