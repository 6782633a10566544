#pragma once
// Fixed-step closed-loop simulation: RK4, explicit Euler and Euler-Maruyama,
// seeded ensembles, RMSE and the Lyapunov trace of the tracking error.
//
// Euler-Maruyama integrates
//   q  <- q  + dt qd
//   qd <- qd + dt H^{-1}(tau_drift - C qd - g) + sqrt(dt) H^{-1} Sigma xi
// with the controller held over the step. The position rows of the
// diffusion are zero.

#include "gpct/common.hpp"
#include "gpct/control/controllers.hpp"
#include "gpct/dynamics/model.hpp"
#include "gpct/sim/reference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace gpct::sim {

using control::ControlOutput;
using control::ReferenceSample;
using dynamics::JointState;

enum class Integrator { rk4, euler, euler_maruyama };

inline std::string to_string(Integrator integrator) {
  switch (integrator) {
    case Integrator::rk4: return "rk4";
    case Integrator::euler: return "euler";
    case Integrator::euler_maruyama: return "euler-maruyama";
  }
  return "unknown";
}

inline Integrator parse_integrator(const std::string& text) {
  if (text == "rk4") return Integrator::rk4;
  if (text == "euler") return Integrator::euler;
  if (text == "euler-maruyama") return Integrator::euler_maruyama;
  throw ConfigError("integrator must be rk4, euler or euler-maruyama, got '" + text + "'");
}

struct SimConfig {
  double dt = 1e-3;
  double duration = 1.0;
  Integrator integrator = Integrator::rk4;
  int realizations = 1;
  std::uint64_t base_seed = 0;
  double lyapunov_epsilon = 0.1;
  double divergence_threshold = 1e6;
  bool record_gp_std = true;  ///< evaluate the GP variance at recorded steps
  int threads = 0;            ///< ensemble workers; 0 means hardware concurrency
  Vector initial_q;           ///< empty: start on the reference
  Vector initial_qd;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!(duration >= dt) || !std::isfinite(duration)) throw ConfigError("duration must be at least dt");
    if (realizations < 1) throw ConfigError("realizations must be at least 1");
  }

  std::size_t step_count() const {
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  }
};

/// Rows are time steps; matrices are steps x joints.
struct SimResult {
  Vector t;
  Matrix q, qd, e, ed, tau, gp_mean, gp_std;
  std::optional<Vector> lyapunov;
  std::uint64_t seed = 0;
  bool diverged = false;
  double divergence_time = 0.0;

  Eigen::Index steps() const { return t.size(); }
  Eigen::Index dof() const { return q.cols(); }
};

namespace detail {

inline bool out_of_bounds(const Vector& q, const Vector& qd, double threshold) {
  if (!q.allFinite() || !qd.allFinite()) return true;
  return q.cwiseAbs().maxCoeff() > threshold || qd.cwiseAbs().maxCoeff() > threshold;
}

struct Recorder {
  SimResult& r;
  Eigen::Index n;

  void reserve(Eigen::Index rows) {
    r.t.resize(rows);
    for (Matrix* m : {&r.q, &r.qd, &r.e, &r.ed, &r.tau, &r.gp_mean, &r.gp_std}) m->resize(rows, n);
  }

  void store(Eigen::Index k, double t, const JointState& s, const ReferenceSample& ref, const ControlOutput& u) {
    r.t[k] = t;
    r.q.row(k) = s.q.transpose();
    r.qd.row(k) = s.qd.transpose();
    r.e.row(k) = (s.q - ref.q).transpose();
    r.ed.row(k) = (s.qd - ref.qd).transpose();
    r.tau.row(k) = u.drift.transpose();
    r.gp_mean.row(k) = u.gp_mean.transpose();
    r.gp_std.row(k) = u.gp_std.transpose();
  }

  void truncate(Eigen::Index rows) {
    r.t.conservativeResize(rows);
    for (Matrix* m : {&r.q, &r.qd, &r.e, &r.ed, &r.tau, &r.gp_mean, &r.gp_std}) m->conservativeResize(rows, n);
  }
};

}  // namespace detail

/// One closed-loop run. A stochastic controller requires Euler-Maruyama.
/// On divergence the trace ends at the last admissible state.
template <dynamics::ManipulatorModel Plant, control::Controller Ctrl, typename Ref>
SimResult simulate(const Plant& plant, const Ctrl& controller, const Ref& reference, const SimConfig& config,
                   std::uint64_t seed) {
  config.validate();
  if (controller.stochastic() && config.integrator != Integrator::euler_maruyama)
    throw ConfigError("a stochastic controller needs the euler-maruyama integrator");
  const Eigen::Index n = plant.dof();
  const std::size_t steps = config.step_count();
  const double dt = config.dt;
  const double sqrt_dt = std::sqrt(dt);

  SimResult result;
  result.seed = seed;
  detail::Recorder rec{result, n};
  rec.reserve(static_cast<Eigen::Index>(steps) + 1);

  JointState state;
  const ReferenceSample ref0 = reference(0.0);
  state.q = config.initial_q.size() ? config.initial_q : ref0.q;
  state.qd = config.initial_qd.size() ? config.initial_qd : ref0.qd;
  if (state.q.size() != n || state.qd.size() != n) throw ConfigError("initial state has the wrong dimension");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto acceleration = [&](const JointState& s, const Vector& tau) { return dynamics::forward_dynamics(plant, s, tau); };

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const ReferenceSample ref = reference(t);
    const ControlOutput u = controller(state, ref, config.record_gp_std);
    rec.store(static_cast<Eigen::Index>(k), t, state, ref, u);
    if (k == steps) break;

    JointState next;
    if (config.integrator == Integrator::rk4) {
      const Vector a1 = acceleration(state, u.drift);
      auto stage = [&](double h, const Vector& dq, const Vector& dqd) {
        JointState s{state.q + h * dq, state.qd + h * dqd, {}};
        const ControlOutput us = controller(s, reference(t + h), false);
        return std::pair{Vector(s.qd), acceleration(s, us.drift)};
      };
      const auto [v2, a2] = stage(0.5 * dt, state.qd, a1);
      const auto [v3, a3] = stage(0.5 * dt, v2, a2);
      const auto [v4, a4] = stage(dt, v3, a3);
      next.q = state.q + (dt / 6.0) * (state.qd + 2.0 * v2 + 2.0 * v3 + v4);
      next.qd = state.qd + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    } else {
      const Vector a = acceleration(state, u.drift);
      next.q = state.q + dt * state.qd;
      next.qd = state.qd + dt * a;
      if (config.integrator == Integrator::euler_maruyama && u.diffusion.size() == n &&
          (u.diffusion.array() != 0.0).any()) {
        Vector xi(n);
        for (Eigen::Index i = 0; i < n; ++i) xi[i] = gauss(rng);
        const Eigen::LLT<Matrix> llt(plant.mass_matrix(state.q));
        next.qd += sqrt_dt * llt.solve(Vector(u.diffusion.cwiseProduct(xi)));
      }
    }
    if (detail::out_of_bounds(next.q, next.qd, config.divergence_threshold)) {
      result.diverged = true;
      result.divergence_time = t + dt;
      rec.truncate(static_cast<Eigen::Index>(k) + 1);
      break;
    }
    state = std::move(next);
  }
  return result;
}

/// Per-joint RMSE of e over samples with t >= t_skip.
inline Vector rmse(const SimResult& r, double t_skip) {
  Vector sum = Vector::Zero(r.dof());
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < r.steps(); ++k) {
    if (r.t[k] < t_skip) continue;
    sum += r.e.row(k).transpose().cwiseAbs2();
    ++count;
  }
  if (count == 0) throw DomainError("no samples at or after t_skip");
  return (sum / static_cast<double>(count)).cwiseSqrt();
}

struct EnsembleStats {
  Vector t;
  Matrix mean_q, std_q, mean_qd, std_qd;
  std::size_t included = 0;   ///< non-divergent runs
  std::size_t divergent = 0;
  bool std_defined = false;   ///< at least two runs entered the statistics
  std::vector<Vector> run_rmse;  ///< per run, divergent runs left empty
};

struct Ensemble {
  std::vector<SimResult> runs;
  EnsembleStats stats;
};

/// Sample mean and standard deviation per time step over the non-divergent
/// runs, reduced in run order.
inline EnsembleStats ensemble_statistics(const std::vector<SimResult>& runs, double t_skip) {
  EnsembleStats s;
  const SimResult* first = nullptr;
  for (const auto& r : runs) {
    if (r.diverged) {
      ++s.divergent;
    } else if (!first) {
      first = &r;
    }
  }
  s.run_rmse.resize(runs.size());
  if (!first) return s;
  const Eigen::Index rows = first->steps(), n = first->dof();
  s.t = first->t;
  s.mean_q = Matrix::Zero(rows, n);
  s.mean_qd = Matrix::Zero(rows, n);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const SimResult& r = runs[i];
    if (r.diverged) continue;
    if (r.steps() != rows) throw DomainError("ensemble runs have different lengths");
    s.mean_q += r.q;
    s.mean_qd += r.qd;
    s.run_rmse[i] = rmse(r, t_skip);
    ++s.included;
  }
  s.mean_q /= static_cast<double>(s.included);
  s.mean_qd /= static_cast<double>(s.included);
  s.std_q = Matrix::Zero(rows, n);
  s.std_qd = Matrix::Zero(rows, n);
  s.std_defined = s.included >= 2;
  if (s.std_defined) {
    for (const auto& r : runs) {
      if (r.diverged) continue;
      s.std_q += (r.q - s.mean_q).cwiseAbs2();
      s.std_qd += (r.qd - s.mean_qd).cwiseAbs2();
    }
    const double denom = static_cast<double>(s.included - 1);
    s.std_q = (s.std_q / denom).cwiseSqrt();
    s.std_qd = (s.std_qd / denom).cwiseSqrt();
  }
  return s;
}

/// Runs `config.realizations` simulations, run i seeded with base_seed + i.
/// Workers pull run indices from a shared counter; results are stored by index.
template <dynamics::ManipulatorModel Plant, control::Controller Ctrl, typename Ref>
Ensemble run_ensemble(const Plant& plant, const Ctrl& controller, const Ref& reference, const SimConfig& config,
                      double t_skip = 1.0) {
  config.validate();
  const std::size_t count = static_cast<std::size_t>(config.realizations);
  Ensemble ens;
  ens.runs.resize(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        ens.runs[i] = simulate(plant, controller, reference, config, config.base_seed + i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  ens.stats = ensemble_statistics(ens.runs, t_skip);
  return ens;
}

struct LyapunovTrace {
  Vector values;
  double min_form_eigenvalue = 0.0;  ///< smallest eigenvalue of [[Kp, eps H], [eps H, H]] seen
  bool indefinite_warning = false;
};

/// V = 1/2 ed' H ed + 1/2 e' Kp e + eps e' H ed along a trajectory, with H of
/// the true plant.
template <dynamics::ManipulatorModel Plant>
LyapunovTrace lyapunov_trace(const SimResult& r, const Plant& plant, const control::Gains& gains, double epsilon) {
  const Eigen::Index n = r.dof();
  if (gains.kp.rows() != n) throw DomainError("gain dimension does not match the trajectory");
  LyapunovTrace trace;
  trace.values.resize(r.steps());
  trace.min_form_eigenvalue = std::numeric_limits<double>::infinity();
  Matrix form(2 * n, 2 * n);
  for (Eigen::Index k = 0; k < r.steps(); ++k) {
    const Vector q = r.q.row(k).transpose();
    const Vector e = r.e.row(k).transpose();
    const Vector ed = r.ed.row(k).transpose();
    const Matrix h = plant.mass_matrix(q);
    trace.values[k] = 0.5 * ed.dot(h * ed) + 0.5 * e.dot(gains.kp * e) + epsilon * e.dot(h * ed);
    form << gains.kp, epsilon * h, epsilon * h, h;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(form, Eigen::EigenvaluesOnly);
    trace.min_form_eigenvalue = std::min(trace.min_form_eigenvalue, eig.eigenvalues().minCoeff());
  }
  trace.indefinite_warning = trace.min_form_eigenvalue <= 0.0;
  return trace;
}

/// sup |(e, ed)| over samples with t > t_after; the empirical radius of the
/// ball the error stays in once the transient has passed.
inline double ball_radius(const SimResult& r, double t_after) {
  double radius = 0.0;
  for (Eigen::Index k = 0; k < r.steps(); ++k) {
    if (r.t[k] <= t_after) continue;
    radius = std::max(radius, std::sqrt(r.e.row(k).squaredNorm() + r.ed.row(k).squaredNorm()));
  }
  return radius;
}

}  // namespace gpct::sim
