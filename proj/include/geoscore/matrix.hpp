#pragma once

#include <Eigen/Core>

namespace geoscore {

// All metric arithmetic runs in double precision on row-major matrices whose
// rows are token vectors.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixView = Eigen::Ref<const Matrix>;

}  // namespace geoscore
