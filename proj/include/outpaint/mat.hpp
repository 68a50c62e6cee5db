#pragma once

// Dense matrix aliases. Everything numeric in the library is row-major so
// flat-buffer views (parameter segments, patch sequences) map directly.

#include <Eigen/Dense>

namespace outpaint {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic, Eigen::RowMajor>;

using MatXd = Mat<double>;
using MatXf = Mat<float>;

template <typename S>
using MatMap = Eigen::Map<Mat<S>>;

template <typename S>
using ConstMatMap = Eigen::Map<const Mat<S>>;

}  // namespace outpaint
