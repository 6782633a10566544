#pragma once
// Isotropic squared-exponential covariance and Gram matrices.

#include "gpct/common.hpp"

#include <cmath>
#include <string>

namespace gpct::gp {

/// Kernel parameters of one output dimension. Stored as standard deviations;
/// the kernel is sf^2 exp(-|x - x'|^2 / (2 l^2)) and sn^2 sits on the Gram diagonal.
struct Hyperparameters {
  double length_scale = 1.0;
  double signal_std = 1.0;
  double noise_std = 0.1;

  double signal_variance() const { return signal_std * signal_std; }
  double noise_variance() const { return noise_std * noise_std; }

  /// Throws DomainError unless l > 0, sf >= 0, sn >= 0 and all are finite.
  void validate() const {
    if (!std::isfinite(length_scale) || !std::isfinite(signal_std) || !std::isfinite(noise_std))
      throw DomainError("hyperparameters must be finite");
    if (!(length_scale > 0.0)) throw DomainError("length scale must be positive");
    if (signal_std < 0.0) throw DomainError("signal standard deviation must be non-negative");
    if (noise_std < 0.0) throw DomainError("noise standard deviation must be non-negative");
  }

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Covariance from a precomputed squared distance. Every kernel evaluation in
/// the library goes through here so that all paths round identically.
inline double covariance_from_sqdist(double squared_distance, const Hyperparameters& hp) {
  return hp.signal_variance() * std::exp(-squared_distance / (2.0 * hp.length_scale * hp.length_scale));
}

inline double kernel_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x_prime,
                          const Hyperparameters& hp) {
  if (x.size() != x_prime.size()) throw DomainError("kernel arguments differ in dimension");
  if (!x.allFinite() || !x_prime.allFinite()) throw DomainError("kernel argument has non-finite component");
  if (!(hp.length_scale > 0.0)) throw DomainError("length scale must be positive");
  return covariance_from_sqdist((x - x_prime).squaredNorm(), hp);
}

/// Pairwise squared distances between the columns of X.
inline Matrix squared_distances(const Eigen::Ref<const Matrix>& inputs) {
  const Eigen::Index m = inputs.cols();
  Matrix d2(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    d2(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < m; ++i) {
      const double v = (inputs.col(i) - inputs.col(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  return d2;
}

/// K(X, X) + sn^2 I for inputs stored column-wise (d x m).
inline Matrix gram_matrix(const Eigen::Ref<const Matrix>& inputs, const Hyperparameters& hp) {
  hp.validate();
  if (inputs.cols() < 1) throw DomainError("Gram matrix needs at least one input");
  if (!inputs.allFinite()) throw DomainError("training input has non-finite component");
  const Matrix d2 = squared_distances(inputs);
  Matrix k = d2.unaryExpr([&](double v) { return covariance_from_sqdist(v, hp); });
  k.diagonal().array() += hp.noise_variance();
  return k;
}

}  // namespace gpct::gp
