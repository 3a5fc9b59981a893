#pragma once

#include <Eigen/Dense>

namespace swopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Active dynamics: mode one before the crossing, mode two after.
enum class Mode : int { one = 1, two = 2 };

inline Mode other(Mode m) { return m == Mode::one ? Mode::two : Mode::one; }

}  // namespace swopt
