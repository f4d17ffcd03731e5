#pragma once

// Scalar-generic building blocks shared by the estimators. All take Eigen
// array expressions so callers can pass y, se, or derived expressions
// (e.g. y - beta0 * s) without materialising temporaries.

#include <Eigen/Dense>

namespace metabal::kernels {

template <typename DerivedW, typename DerivedY>
typename DerivedY::Scalar weighted_mean(const Eigen::ArrayBase<DerivedW>& w,
                                        const Eigen::ArrayBase<DerivedY>& y) {
  return (w * y).sum() / w.sum();
}

/// Sum of w_i (y_i - centre): the torque about `centre`.
template <typename DerivedW, typename DerivedY>
typename DerivedY::Scalar torque(const Eigen::ArrayBase<DerivedW>& w,
                                 const Eigen::ArrayBase<DerivedY>& y,
                                 typename DerivedY::Scalar centre) {
  return (w * (y - centre)).sum();
}

/// Sum of w_i (y_i - centre)^2.
template <typename DerivedW, typename DerivedY>
typename DerivedY::Scalar weighted_ss(const Eigen::ArrayBase<DerivedW>& w,
                                      const Eigen::ArrayBase<DerivedY>& y,
                                      typename DerivedY::Scalar centre) {
  return (w * (y - centre).square()).sum();
}

/// Weights 1 / (se^2 + tau2).
template <typename Derived>
auto additive_weights(const Eigen::ArrayBase<Derived>& se, typename Derived::Scalar tau2) {
  return (se.square() + tau2).inverse();
}

/// sum w_i r_i (x_i - mean(x)), with x centred at its arithmetic mean.
template <typename DerivedW, typename DerivedR, typename DerivedX>
typename DerivedR::Scalar centred_cross(const Eigen::ArrayBase<DerivedW>& w,
                                        const Eigen::ArrayBase<DerivedR>& r,
                                        const Eigen::ArrayBase<DerivedX>& x) {
  return (w * r * (x - x.mean())).sum();
}

}  // namespace metabal::kernels
