#pragma once

#include <Eigen/Dense>

namespace audionav {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

} // namespace audionav
