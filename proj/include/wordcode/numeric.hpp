#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "wordcode/errors.hpp"
#include "wordcode/types.hpp"

namespace wordcode {

template <class Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  if (v.size() == 0) throw ArgumentError("log_sum_exp: empty vector");
  const S m = v.maxCoeff();
  if (!std::isfinite(m)) throw NumericError("log_sum_exp: non-finite input");
  return m + std::log((v.derived().array() - m).exp().sum());
}

/// exp(v) / sum(exp(v)), stabilized by max subtraction.
template <class Derived>
VectorT<typename Derived::Scalar> softmax_vec(
    const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  if (v.size() == 0) throw ArgumentError("softmax_vec: empty vector");
  const S m = v.maxCoeff();
  if (!std::isfinite(m)) throw NumericError("softmax_vec: non-finite input");
  VectorT<S> p = (v.derived().array() - m).exp().matrix();
  return p / p.sum();
}

template <class Derived>
VectorT<typename Derived::Scalar> log_softmax_vec(
    const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const S lse = log_sum_exp(v);
  return VectorT<S>((v.derived().array() - lse).matrix());
}

}  // namespace wordcode
