#pragma once
// Log marginal likelihood of an exact GP and its maximization over the
// log-hyperparameters (log l, log sf, log sn).

#include "gpct/common.hpp"
#include "gpct/gp/kernel.hpp"
#include "gpct/gp/regression.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace gpct::gp {

using LogParams = Eigen::Vector3d;

inline LogParams to_log_params(const Hyperparameters& hp) {
  return {std::log(hp.length_scale), std::log(hp.signal_std), std::log(hp.noise_std)};
}

inline Hyperparameters from_log_params(const LogParams& theta) {
  return {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
}

struct LikelihoodValue {
  double value = 0.0;
  /// d value / d (log l, log sf, log sn).
  LogParams gradient = LogParams::Zero();
};

namespace detail {

struct LikelihoodWork {
  Matrix se;     // K without the noise diagonal
  Matrix chol;
  Vector alpha;
  double value = 0.0;
};

inline LikelihoodWork likelihood_core(const Matrix& d2, const Eigen::Ref<const Vector>& y, const Hyperparameters& hp,
                                      std::size_t output_index) {
  LikelihoodWork w;
  const Eigen::Index m = y.size();
  w.se = d2.unaryExpr([&](double v) { return covariance_from_sqdist(v, hp); });
  Matrix gram = w.se;
  gram.diagonal().array() += hp.noise_variance();
  w.chol = cholesky_or_throw(gram, output_index);
  w.alpha = y;
  w.chol.triangularView<Eigen::Lower>().solveInPlace(w.alpha);
  const double data_fit = -0.5 * w.alpha.squaredNorm();
  w.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(w.alpha);
  const double complexity = -w.chol.diagonal().array().log().sum();
  w.value = data_fit + complexity - 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
  return w;
}

inline LikelihoodValue likelihood_with_gradient(const Matrix& d2, const Eigen::Ref<const Vector>& y,
                                                const Hyperparameters& hp, std::size_t output_index) {
  LikelihoodWork w = likelihood_core(d2, y, hp, output_index);
  const Eigen::Index m = y.size();
  // W = alpha alpha^T - (K + sn^2 I)^{-1}; grad_j = 1/2 tr(W dK/dtheta_j)
  Matrix inv = Matrix::Identity(m, m);
  w.chol.triangularView<Eigen::Lower>().solveInPlace(inv);
  inv = inv.transpose() * inv;  // L^{-T} L^{-1}
  Matrix weight = w.alpha * w.alpha.transpose() - inv;

  const double inv_l2 = 1.0 / (hp.length_scale * hp.length_scale);
  LikelihoodValue out;
  out.value = w.value;
  out.gradient[0] = 0.5 * (weight.array() * w.se.array() * d2.array()).sum() * inv_l2;
  out.gradient[1] = (weight.array() * w.se.array()).sum();
  out.gradient[2] = hp.noise_variance() * weight.diagonal().sum();
  return out;
}

}  // namespace detail

/// Value and log-parameter gradient of log p(Y(:, i) | X, hp) for one output.
inline LikelihoodValue log_marginal_likelihood(const TrainingSet& data, const Hyperparameters& hp,
                                               std::size_t output_index) {
  data.validate();
  hp.validate();
  if (static_cast<Eigen::Index>(output_index) >= data.output_dim()) throw DomainError("output index out of range");
  if (data.size() == 0) return {};
  const Matrix d2 = squared_distances(data.inputs);
  return detail::likelihood_with_gradient(d2, data.outputs.col(static_cast<Eigen::Index>(output_index)), hp,
                                          output_index);
}

/// One accepted iterate of the optimizer.
struct OptimizerStep {
  int restart = 0;
  Hyperparameters hyperparameters;
  double log_likelihood = 0.0;
};

struct OptimizerResult {
  Hyperparameters best;
  double best_log_likelihood = -std::numeric_limits<double>::infinity();
  double initial_log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<OptimizerStep> accepted;
  int failed_restarts = 0;
};

struct OptimizerSettings {
  int budget = 25;     ///< gradient iterations per restart
  int restarts = 5;    ///< restart r > 0 perturbs the start by up to one decade per parameter
  double initial_step = 1.0;
  double max_step = 4.0;
  double armijo = 1e-4;
  int max_backtracks = 30;
};

/// Gradient ascent in log-parameter space with backtracking line search.
/// Restart 0 starts at the initial guess, so the result never has a lower
/// likelihood than the guess whenever the guess is evaluable. Deterministic.
inline OptimizerResult optimize_hyperparameters_traced(const TrainingSet& data, std::size_t output_index,
                                                       const Hyperparameters& initial,
                                                       const OptimizerSettings& settings = {}) {
  data.validate();
  initial.validate();
  if (!(initial.signal_std > 0.0) || !(initial.noise_std > 0.0))
    throw DomainError("optimization needs strictly positive signal and noise standard deviations");
  if (static_cast<Eigen::Index>(output_index) >= data.output_dim()) throw DomainError("output index out of range");

  OptimizerResult result;
  result.best = initial;
  if (settings.budget <= 0 || data.size() == 0) return result;

  const Matrix d2 = squared_distances(data.inputs);
  const Vector y = data.outputs.col(static_cast<Eigen::Index>(output_index));
  constexpr double kLogBound = 25.0;

  auto evaluate = [&](const LogParams& theta) -> std::optional<double> {
    if ((theta.array().abs() > kLogBound).any()) return std::nullopt;
    try {
      return detail::likelihood_core(d2, y, from_log_params(theta), output_index).value;
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  };
  auto evaluate_gradient = [&](const LogParams& theta) -> std::optional<LikelihoodValue> {
    try {
      return detail::likelihood_with_gradient(d2, y, from_log_params(theta), output_index);
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  };

  const LogParams theta0 = to_log_params(initial);
  bool any_success = false;
  for (int r = 0; r < std::max(1, settings.restarts); ++r) {
    LogParams theta = theta0;
    if (r > 0) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(r));
      std::uniform_real_distribution<double> decade(-std::log(10.0), std::log(10.0));
      for (int k = 0; k < 3; ++k) theta[k] += decade(rng);
    }
    auto current = evaluate_gradient(theta);
    if (!current) {
      ++result.failed_restarts;
      continue;
    }
    any_success = true;
    if (r == 0) result.initial_log_likelihood = current->value;
    result.accepted.push_back({r, from_log_params(theta), current->value});

    double step = settings.initial_step;
    for (int it = 0; it < settings.budget; ++it) {
      const double gnorm = current->gradient.norm();
      if (!(gnorm > 1e-10)) break;
      const LogParams direction = current->gradient / gnorm;
      bool accepted = false;
      for (int bt = 0; bt < settings.max_backtracks; ++bt, step *= 0.5) {
        const LogParams trial = theta + step * direction;
        auto value = evaluate(trial);
        if (value && *value >= current->value + settings.armijo * step * gnorm) {
          auto next = evaluate_gradient(trial);
          if (!next) continue;
          theta = trial;
          current = next;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      result.accepted.push_back({r, from_log_params(theta), current->value});
      step = std::min(2.0 * step, settings.max_step);
    }
    if (current->value > result.best_log_likelihood) {
      result.best_log_likelihood = current->value;
      result.best = from_log_params(theta);
    }
  }
  if (!any_success) throw NumericalError("every optimizer restart failed to factor the Gram matrix");
  return result;
}

inline Hyperparameters optimize_hyperparameters(const TrainingSet& data, std::size_t output_index,
                                                const Hyperparameters& initial, int budget) {
  OptimizerSettings settings;
  settings.budget = budget;
  return optimize_hyperparameters_traced(data, output_index, initial, settings).best;
}

/// Data-driven starting point: median pairwise input distance, output std.
inline Hyperparameters initial_guess(const TrainingSet& data, std::size_t output_index) {
  Hyperparameters hp;
  const Eigen::Index m = data.size();
  if (m >= 2) {
    const Eigen::Index limit = std::min<Eigen::Index>(m, 400);
    std::vector<double> distances;
    distances.reserve(static_cast<std::size_t>(limit * (limit - 1) / 2));
    const Eigen::Index stride = m / limit;
    for (Eigen::Index a = 0; a < limit; ++a)
      for (Eigen::Index b = a + 1; b < limit; ++b)
        distances.push_back((data.inputs.col(a * stride) - data.inputs.col(b * stride)).norm());
    std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(distances.size() / 2),
                     distances.end());
    const double median = distances[distances.size() / 2];
    if (median > 0.0 && std::isfinite(median)) hp.length_scale = median;
  }
  if (m >= 1) {
    const Vector y = data.outputs.col(static_cast<Eigen::Index>(output_index));
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(m - 1, 1)) +
                                mean * mean);
    if (sd > 0.0 && std::isfinite(sd)) hp.signal_std = sd;
  }
  hp.noise_std = 0.1 * hp.signal_std;
  return hp;
}

}  // namespace gpct::gp
