#pragma once

#include <Eigen/Dense>

namespace pgdpo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<Vec>;
using MatRef = Eigen::Ref<Mat>;
using CVecRef = Eigen::Ref<const Vec>;
using CMatRef = Eigen::Ref<const Mat>;

}  // namespace pgdpo
