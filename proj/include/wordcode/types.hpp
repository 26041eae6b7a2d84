#pragma once

#include <Eigen/Dense>

namespace wordcode {

using Scalar = double;

template <class T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = MatrixT<Scalar>;
using Vector = VectorT<Scalar>;
using Index = Eigen::Index;

}  // namespace wordcode
