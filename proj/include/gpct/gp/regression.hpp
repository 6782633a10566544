#pragma once
// Exact multi-output GP regression with a zero prior mean.
//
// Each output dimension i is an independent GP over the shared inputs X with
// its own hyperparameters. Fitting stores the Cholesky factor L of
// K + sn^2 I and alpha = (K + sn^2 I)^{-1} Y(:, i), after which the posterior
// mean costs O(m) and the posterior variance O(m^2) per query.

#include "gpct/common.hpp"
#include "gpct/gp/kernel.hpp"

#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace gpct::gp {

/// Inputs are stored column-wise (d x m), outputs row-wise (m x n).
struct TrainingSet {
  Matrix inputs;
  Matrix outputs;

  TrainingSet() = default;
  TrainingSet(Matrix x, Matrix y) : inputs(std::move(x)), outputs(std::move(y)) { validate(); }

  static TrainingSet empty(Eigen::Index input_dim, Eigen::Index output_dim) {
    TrainingSet set;
    set.inputs.resize(input_dim, 0);
    set.outputs.resize(0, output_dim);
    return set;
  }

  Eigen::Index size() const { return inputs.cols(); }
  Eigen::Index input_dim() const { return inputs.rows(); }
  Eigen::Index output_dim() const { return outputs.cols(); }

  void validate() const {
    if (inputs.cols() != outputs.rows())
      throw DomainError("training inputs have " + std::to_string(inputs.cols()) + " columns but outputs have " +
                        std::to_string(outputs.rows()) + " rows");
    if (!inputs.allFinite() || !outputs.allFinite()) throw DomainError("training set has non-finite entries");
  }

  /// Keeps the given point indices, in the given order.
  TrainingSet subset(std::span<const Eigen::Index> indices) const {
    TrainingSet out;
    out.inputs.resize(input_dim(), static_cast<Eigen::Index>(indices.size()));
    out.outputs.resize(static_cast<Eigen::Index>(indices.size()), output_dim());
    for (std::size_t k = 0; k < indices.size(); ++k) {
      out.inputs.col(static_cast<Eigen::Index>(k)) = inputs.col(indices[k]);
      out.outputs.row(static_cast<Eigen::Index>(k)) = outputs.row(indices[k]);
    }
    return out;
  }
};

/// Posterior of all outputs at one query; the covariance is diagonal.
struct Prediction {
  Vector mean;
  Vector std;
};

namespace detail {

inline constexpr double kNegativeVarianceTolerance = -1e-12;

/// Lower Cholesky factor of a Gram matrix, or CholeskyError carrying the
/// smallest pivot. Pivots below m * eps * max(diag) count as failures.
inline Matrix cholesky_or_throw(const Matrix& gram, std::size_t output_index) {
  const Eigen::Index m = gram.rows();
  if (m == 0) return Matrix(0, 0);
  Eigen::LLT<Matrix> llt(gram);
  const double scale = gram.diagonal().maxCoeff();
  const double floor = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * std::max(scale, 0.0);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Matrix& l = llt.matrixLLT();
    const double min_pivot = l.diagonal().array().square().minCoeff();
    ok = std::isfinite(min_pivot) && min_pivot > floor;
  }
  if (!ok) {
    Eigen::LDLT<Matrix> ldlt(gram);
    throw CholeskyError(output_index, ldlt.vectorD().minCoeff());
  }
  return Matrix(llt.matrixL());
}

}  // namespace detail

/// Factored posterior of one output dimension.
class FittedGP {
 public:
  FittedGP(Hyperparameters hp, std::shared_ptr<const Matrix> inputs, Matrix cholesky, Vector alpha)
      : hp_(hp), inputs_(std::move(inputs)), chol_(std::move(cholesky)), alpha_(std::move(alpha)) {}

  const Hyperparameters& hyperparameters() const { return hp_; }
  const Matrix& training_inputs() const { return *inputs_; }
  const Matrix& cholesky_factor() const { return chol_; }
  const Vector& weights() const { return alpha_; }

  /// k(x*, X) from precomputed squared distances to the training inputs.
  Vector cross_covariance(const Vector& sqdist) const {
    return sqdist.unaryExpr([&](double v) { return covariance_from_sqdist(v, hp_); });
  }

  double mean_from(const Vector& kstar) const { return kstar.size() == 0 ? 0.0 : kstar.dot(alpha_); }

  double variance_from(const Vector& kstar) const {
    const double prior = hp_.signal_variance();
    if (kstar.size() == 0) return prior;
    const Vector v = chol_.triangularView<Eigen::Lower>().solve(kstar);
    double var = prior - v.squaredNorm();
    if (var < 0.0) {
      if (var < detail::kNegativeVarianceTolerance)
        throw NumericalError("posterior variance " + std::to_string(var) + " is below the cancellation tolerance");
      var = 0.0;
    }
    return var;
  }

 private:
  Hyperparameters hp_;
  std::shared_ptr<const Matrix> inputs_;
  Matrix chol_;
  Vector alpha_;
};

/// n independent GPs over one shared input matrix. Immutable after fit, so
/// concurrent prediction from several threads is safe.
class MultiGP {
 public:
  MultiGP() = default;
  MultiGP(Eigen::Index input_dim, std::shared_ptr<const Matrix> inputs, std::vector<FittedGP> components)
      : input_dim_(input_dim), inputs_(std::move(inputs)), components_(std::move(components)) {}

  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const { return static_cast<Eigen::Index>(components_.size()); }
  Eigen::Index training_size() const { return inputs_ ? inputs_->cols() : 0; }
  const FittedGP& component(std::size_t i) const { return components_.at(i); }

  Vector predict_mean(const Eigen::Ref<const Vector>& x) const { return predict(x, false).mean; }

  Vector predict_var(const Eigen::Ref<const Vector>& x) const {
    Prediction p = predict(x, true);
    return p.std.array().square();
  }

  /// Mean and (optionally) standard deviation at x. Without variance the std
  /// vector is left empty.
  Prediction predict(const Eigen::Ref<const Vector>& x, bool with_variance) const {
    if (x.size() != input_dim_)
      throw DomainError("query has dimension " + std::to_string(x.size()) + ", GP expects " +
                        std::to_string(input_dim_));
    const Eigen::Index m = training_size();
    Vector sqdist(m);
    for (Eigen::Index j = 0; j < m; ++j) sqdist[j] = (inputs_->col(j) - x).squaredNorm();

    Prediction out;
    out.mean.resize(output_dim());
    if (with_variance) out.std.resize(output_dim());
    const Hyperparameters* cached_hp = nullptr;
    Vector kstar;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      const FittedGP& gp = components_[i];
      if (cached_hp == nullptr || !(*cached_hp == gp.hyperparameters())) {
        kstar = gp.cross_covariance(sqdist);
        cached_hp = &gp.hyperparameters();
      }
      out.mean[static_cast<Eigen::Index>(i)] = gp.mean_from(kstar);
      if (with_variance) out.std[static_cast<Eigen::Index>(i)] = std::sqrt(gp.variance_from(kstar));
    }
    return out;
  }

 private:
  Eigen::Index input_dim_ = 0;
  std::shared_ptr<const Matrix> inputs_;
  std::vector<FittedGP> components_;
};

/// Factors the Gram matrix of every output. One hyperparameter set per output.
inline MultiGP fit(const TrainingSet& data, std::span<const Hyperparameters> hps) {
  data.validate();
  if (static_cast<Eigen::Index>(hps.size()) != data.output_dim())
    throw DomainError("need one hyperparameter set per output (" + std::to_string(data.output_dim()) + "), got " +
                      std::to_string(hps.size()));
  auto inputs = std::make_shared<const Matrix>(data.inputs);
  const Eigen::Index m = data.size();
  const Matrix d2 = squared_distances(data.inputs);

  std::vector<FittedGP> components;
  components.reserve(hps.size());
  for (std::size_t i = 0; i < hps.size(); ++i) {
    const Hyperparameters& hp = hps[i];
    hp.validate();
    Matrix chol(0, 0);
    Vector alpha(0);
    if (m > 0) {
      Matrix gram = d2.unaryExpr([&](double v) { return covariance_from_sqdist(v, hp); });
      gram.diagonal().array() += hp.noise_variance();
      chol = detail::cholesky_or_throw(gram, i);
      alpha = data.outputs.col(static_cast<Eigen::Index>(i));
      chol.triangularView<Eigen::Lower>().solveInPlace(alpha);
      chol.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);
    }
    components.emplace_back(hp, inputs, std::move(chol), std::move(alpha));
  }
  return MultiGP(data.input_dim(), std::move(inputs), std::move(components));
}

inline MultiGP fit(const TrainingSet& data, const std::vector<Hyperparameters>& hps) {
  return fit(data, std::span<const Hyperparameters>(hps));
}

}  // namespace gpct::gp
