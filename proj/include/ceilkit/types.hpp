#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace ceilkit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using TokenId = std::int32_t;

}  // namespace ceilkit
