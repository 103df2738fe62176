#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace startls {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VecX<double>;
using Mat = MatX<double>;

inline double db_from_power(double power_ratio) {
  return 10.0 * std::log10(power_ratio);
}

inline double power_from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace startls
