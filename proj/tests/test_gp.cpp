#include "gpct/gp/io.hpp"
#include "gpct/gp/kernel.hpp"
#include "gpct/gp/likelihood.hpp"
#include "gpct/gp/regression.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace gpct;
using gp::Hyperparameters;

namespace {

gp::TrainingSet random_set(std::mt19937_64& rng, Eigen::Index d, Eigen::Index m, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  gp::TrainingSet s = gp::TrainingSet::empty(d, n);
  s.inputs = Matrix::NullaryExpr(d, m, [&] { return u(rng); });
  s.outputs = Matrix::NullaryExpr(m, n, [&] { return u(rng); });
  return s;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Kernel, ZeroDistanceGivesSignalVariance) {
  EXPECT_DOUBLE_EQ(gp::kernel_eval(vec({0.3, -1.0}), vec({0.3, -1.0}), {1.0, 1.0, 0.1}), 1.0);
}

TEST(Kernel, HandEvaluatedValues) {
  EXPECT_NEAR(gp::kernel_eval(vec({0.0}), vec({std::sqrt(2.0)}), {1.0, 1.0, 0.1}), 0.36787944117144233, 1e-15);
  EXPECT_NEAR(gp::kernel_eval(vec({0.0}), vec({2.0}), {2.0, 3.0, 0.1}), 5.458775937413701, 1e-12);
}

TEST(Kernel, SymmetricExactly) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 200; ++k) {
    const Vector a = Vector::NullaryExpr(4, [&] { return g(rng); });
    const Vector b = Vector::NullaryExpr(4, [&] { return g(rng); });
    const Hyperparameters hp{0.3 + std::abs(g(rng)), std::abs(g(rng)), 0.1};
    EXPECT_EQ(gp::kernel_eval(a, b, hp), gp::kernel_eval(b, a, hp));
  }
}

TEST(Kernel, RejectsNonFiniteInput) {
  EXPECT_THROW(gp::kernel_eval(vec({NAN}), vec({0.0}), {}), DomainError);
  EXPECT_THROW(gp::kernel_eval(vec({INFINITY}), vec({0.0}), {}), DomainError);
}

TEST(Gram, SinglePoint) {
  Matrix x(1, 1);
  x << 0.0;
  const Matrix k = gp::gram_matrix(x, {1.0, 1.0, 0.1});
  EXPECT_NEAR(k(0, 0), 1.01, 1e-15);
}

TEST(Gram, TwoPointsHandEvaluated) {
  Matrix x(1, 2);
  x << 0.0, 1.0;
  const Matrix k = gp::gram_matrix(x, {1.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(k(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(k(1, 1), 1.0);
  EXPECT_NEAR(k(0, 1), 0.6065306597126334, 1e-15);
  EXPECT_EQ(k(0, 1), k(1, 0));
}

TEST(Gram, DistinctPointsHavePositivePivots) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_set(rng, 3, 30, 1);
    const Matrix k = gp::gram_matrix(s.inputs, {0.7, 1.3, 0.05});
    Eigen::LDLT<Matrix> ldlt(k);
    EXPECT_GT(ldlt.vectorD().minCoeff(), 0.0);
  }
}

TEST(Fit, OnePointWeight) {
  gp::TrainingSet s = gp::TrainingSet::empty(1, 1);
  s.inputs = Matrix::Zero(1, 1);
  s.outputs = Matrix::Constant(1, 1, 2.0);
  const auto model = gp::fit(s, std::vector<Hyperparameters>{{1.0, 1.0, 0.0}});
  EXPECT_DOUBLE_EQ(model.component(0).weights()[0], 2.0);
}

TEST(Fit, DuplicateInputsWithoutNoiseFail) {
  gp::TrainingSet s = gp::TrainingSet::empty(1, 2);
  s.inputs = Matrix::Zero(1, 2);
  s.outputs = Matrix::Ones(2, 2);
  try {
    gp::fit(s, std::vector<Hyperparameters>{{1.0, 1.0, 0.1}, {1.0, 1.0, 0.0}});
    FAIL() << "expected a Cholesky failure";
  } catch (const CholeskyError& e) {
    EXPECT_EQ(e.output_index(), 1u);
    EXPECT_LE(e.smallest_pivot(), 1e-12);
    EXPECT_NE(std::string(e.what()).find("output 2"), std::string::npos);
  }
}

TEST(Fit, CholeskyReconstructsGram) {
  std::mt19937_64 rng(8);
  const auto s = random_set(rng, 2, 3, 1);
  const Hyperparameters hp{0.8, 1.1, 0.01};
  const auto model = gp::fit(s, std::vector<Hyperparameters>{hp});
  const Matrix& l = model.component(0).cholesky_factor();
  const Matrix k = oracle::gram(s.inputs, hp.length_scale, hp.signal_std, hp.noise_std);
  EXPECT_LT((l * l.transpose() - k).norm() / k.norm(), 1e-10);
}

TEST(Predict, ExactInterpolationSinglePoint) {
  gp::TrainingSet s = gp::TrainingSet::empty(1, 1);
  s.inputs = Matrix::Zero(1, 1);
  s.outputs = Matrix::Constant(1, 1, 2.0);
  const auto model = gp::fit(s, std::vector<Hyperparameters>{{1.0, 1.0, 1e-6}});
  EXPECT_NEAR(model.predict_mean(vec({0.0}))[0], 2.0, 1e-6);
}

TEST(Predict, ExactInterpolationAtTrainingInputs) {
  std::mt19937_64 rng(9);
  const auto s = random_set(rng, 2, 25, 2);
  const auto model = gp::fit(s, std::vector<Hyperparameters>(2, {0.5, 1.0, 1e-6}));
  const double scale = 1.0 + s.outputs.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const Vector mu = model.predict_mean(s.inputs.col(j));
    EXPECT_LT((mu - s.outputs.row(j).transpose()).cwiseAbs().maxCoeff(), 1e-6 * scale);
    EXPECT_LT(model.predict_var(s.inputs.col(j)).maxCoeff(), 1e-8);
  }
}

TEST(Predict, RevertsToPriorFarAway) {
  std::mt19937_64 rng(10);
  const auto s = random_set(rng, 2, 10, 1);
  const Hyperparameters hp{0.3, 2.0, 0.1};
  const auto model = gp::fit(s, std::vector<Hyperparameters>{hp});
  const Vector far = vec({2.0 + 21.0 * hp.length_scale, 0.0});
  EXPECT_LT(std::abs(model.predict_mean(far)[0]), 1e-8 * hp.signal_std);
  EXPECT_NEAR(model.predict_var(far)[0], hp.signal_variance(), 1e-8);
}

TEST(Predict, TwoPointMidpointMatchesDenseOracle) {
  gp::TrainingSet s = gp::TrainingSet::empty(1, 1);
  s.inputs.resize(1, 2);
  s.inputs << -0.5, 0.7;
  s.outputs.resize(2, 1);
  s.outputs << 1.5, -0.25;
  const Hyperparameters hp{0.6, 1.2, 0.05};
  const auto model = gp::fit(s, std::vector<Hyperparameters>{hp});
  const Vector mid = vec({0.1});
  const auto ref = oracle::dense_predict(s.inputs, s.outputs.col(0), mid, 0.6, 1.2, 0.05);
  EXPECT_NEAR(model.predict_mean(mid)[0], ref.mean, 1e-10);
  EXPECT_NEAR(model.predict_var(mid)[0], ref.var, 1e-10);
}

TEST(Predict, MatchesDenseOracleOnRandomInstances) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(u(rng) * 50);
    const auto s = random_set(rng, 3, m, 2);
    std::vector<Hyperparameters> hps{{0.4 + 2.0 * u(rng), 0.2 + 2.0 * u(rng), 0.05 + 0.5 * u(rng)},
                                     {0.4 + 2.0 * u(rng), 0.2 + 2.0 * u(rng), 0.05 + 0.5 * u(rng)}};
    const auto model = gp::fit(s, hps);
    const Vector query = Vector::NullaryExpr(3, [&] { return 4.0 * u(rng) - 2.0; });
    const auto p = model.predict(query, true);
    for (int i = 0; i < 2; ++i) {
      const auto& hp = hps[static_cast<std::size_t>(i)];
      const auto ref =
          oracle::dense_predict(s.inputs, s.outputs.col(i), query, hp.length_scale, hp.signal_std, hp.noise_std);
      EXPECT_NEAR(p.mean[i], ref.mean, 1e-10);
      EXPECT_NEAR(p.std[i] * p.std[i], ref.var, 1e-10);
      EXPECT_GE(p.std[i], 0.0);
      EXPECT_LE(p.std[i], hp.signal_std * (1.0 + 1e-12));
    }
  }
}

TEST(Predict, AddingAPointNeverIncreasesVariance) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = random_set(rng, 2, 8, 1);
    const Hyperparameters hp{0.7, 1.0, 0.1};
    const Vector query = Vector::NullaryExpr(2, [&] { return u(rng); });
    const double before = gp::fit(s, std::vector<Hyperparameters>{hp}).predict_var(query)[0];
    s.inputs.conservativeResize(2, 9);
    s.inputs.col(8) = Vector::NullaryExpr(2, [&] { return u(rng); });
    s.outputs.conservativeResize(9, 1);
    s.outputs(8, 0) = u(rng);
    const double after = gp::fit(s, std::vector<Hyperparameters>{hp}).predict_var(query)[0];
    EXPECT_LE(after, before + 1e-14);
  }
}

TEST(Predict, EmptySetIsPrior) {
  const gp::TrainingSet s = gp::TrainingSet::empty(3, 1);
  const auto model = gp::fit(s, std::vector<Hyperparameters>{{1.0, 0.5, 1.0}});
  const auto p = model.predict(vec({1.0, 2.0, 3.0}), true);
  EXPECT_EQ(p.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(p.std[0], 0.5);
}

TEST(Predict, DimensionMismatchRejected) {
  std::mt19937_64 rng(1);
  const auto model = gp::fit(random_set(rng, 3, 4, 1), std::vector<Hyperparameters>{{}});
  EXPECT_THROW(model.predict_mean(vec({1.0, 2.0})), DomainError);
}

TEST(Likelihood, ScalarHandValue) {
  gp::TrainingSet s = gp::TrainingSet::empty(1, 1);
  s.inputs = Matrix::Zero(1, 1);
  s.outputs = Matrix::Zero(1, 1);
  EXPECT_NEAR(gp::log_marginal_likelihood(s, {1.0, 1.0, 1.0}, 0).value, -1.2655121234846454, 1e-12);
}

TEST(Likelihood, MatchesDenseOracle) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_set(rng, 3, 20, 1);
    const Hyperparameters hp{0.9, 1.3, 0.2};
    EXPECT_NEAR(gp::log_marginal_likelihood(s, hp, 0).value,
                oracle::log_likelihood(s.inputs, s.outputs.col(0), 0.9, 1.3, 0.2), 1e-9);
  }
}

TEST(Likelihood, DoublingOutputsScalesDataFitByFour) {
  std::mt19937_64 rng(14);
  auto s = random_set(rng, 2, 15, 1);
  const Hyperparameters hp{0.8, 1.0, 0.3};
  const double at_zero = [&] {
    auto z = s;
    z.outputs.setZero();
    return gp::log_marginal_likelihood(z, hp, 0).value;
  }();
  const double fit1 = gp::log_marginal_likelihood(s, hp, 0).value - at_zero;
  s.outputs *= 2.0;
  const double fit2 = gp::log_marginal_likelihood(s, hp, 0).value - at_zero;
  EXPECT_NEAR(fit2, 4.0 * fit1, 1e-10 * std::abs(fit1));
}

TEST(Likelihood, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_set(rng, 2, 5 + static_cast<Eigen::Index>(u(rng) * 20), 1);
    const Hyperparameters hp{0.3 + 1.5 * u(rng), 0.3 + 1.5 * u(rng), 0.1 + 0.5 * u(rng)};
    const auto value = gp::log_marginal_likelihood(s, hp, 0);
    const Vector theta = gp::to_log_params(hp);
    const Vector fd = oracle::central_gradient(
        [&](const Vector& t) { return oracle::log_likelihood(s.inputs, s.outputs.col(0), std::exp(t[0]), std::exp(t[1]), std::exp(t[2])); },
        theta, 1e-5);
    EXPECT_LT((value.gradient - fd).norm() / std::max(1.0, fd.norm()), 1e-5) << "trial " << trial;
  }
}

TEST(Optimizer, ZeroBudgetReturnsInitial) {
  std::mt19937_64 rng(16);
  const auto s = random_set(rng, 2, 20, 1);
  const Hyperparameters init{0.7, 1.2, 0.3};
  EXPECT_EQ(gp::optimize_hyperparameters(s, 0, init, 0), init);
}

TEST(Optimizer, ImprovesOnInitialAndIsMonotone) {
  std::mt19937_64 rng(17);
  const auto s = random_set(rng, 2, 40, 1);
  const Hyperparameters init{3.0, 0.2, 1.0};
  const auto result = gp::optimize_hyperparameters_traced(s, 0, init);
  EXPECT_GE(result.best_log_likelihood, gp::log_marginal_likelihood(s, init, 0).value);
  for (std::size_t k = 1; k < result.accepted.size(); ++k)
    if (result.accepted[k].restart == result.accepted[k - 1].restart)
      EXPECT_GE(result.accepted[k].log_likelihood, result.accepted[k - 1].log_likelihood);
}

TEST(Optimizer, Deterministic) {
  std::mt19937_64 rng(18);
  const auto s = random_set(rng, 2, 30, 1);
  const Hyperparameters init{1.0, 1.0, 0.5};
  EXPECT_EQ(gp::optimize_hyperparameters(s, 0, init, 10), gp::optimize_hyperparameters(s, 0, init, 10));
}

TEST(Optimizer, RecoversLengthScaleOfAGpDraw) {
  // Draw y ~ GP(0, k) with lambda = 0.5 at 250 points and refit.
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::normal_distribution<double> g;
  const Eigen::Index m = 250;
  gp::TrainingSet s = gp::TrainingSet::empty(1, 1);
  s.inputs = Matrix::NullaryExpr(1, m, [&] { return u(rng); });
  const Matrix k = oracle::gram(s.inputs, 0.5, 1.0, 0.05);
  const Matrix l = Eigen::LLT<Matrix>(k).matrixL();
  s.outputs = l * Vector::NullaryExpr(m, [&] { return g(rng); });
  const auto hp = gp::optimize_hyperparameters(s, 0, {1.5, 0.5, 0.5}, 50);
  EXPECT_GT(hp.length_scale, 0.25);
  EXPECT_LT(hp.length_scale, 1.0);
}

TEST(Io, TrainingCsvRoundTripsExactly) {
  std::mt19937_64 rng(20);
  const auto s = random_set(rng, 6, 12, 2);
  std::stringstream buffer;
  gp::write_training_csv(buffer, s, "manifest line");
  const auto back = gp::read_training_csv(buffer);
  EXPECT_EQ(back.inputs, s.inputs);
  EXPECT_EQ(back.outputs, s.outputs);
}

TEST(Io, HyperparametersRoundTripExactly) {
  const std::vector<Hyperparameters> hps{{0.123456789012345, 3.3e-7, 0.1}, {1.0 / 3.0, 2.0, 1e-300}};
  std::stringstream buffer;
  gp::write_hyperparameters(buffer, hps, "manifest");
  EXPECT_EQ(gp::read_hyperparameters(buffer), hps);
}

TEST(Io, HyperparametersRejectUnknownKeys) {
  std::stringstream buffer("lambda_1 = 1\nsigma_f_1 = 1\nsigma_n_1 = 0.1\nlamda_2 = 3\n");
  EXPECT_THROW(gp::read_hyperparameters(buffer), ConfigError);
}

TEST(Io, TrainingCsvRejectsBadHeader) {
  std::stringstream buffer("x_1,z_1\n1,2\n");
  EXPECT_THROW(gp::read_training_csv(buffer), ConfigError);
}
