#pragma once
// Training-set generation on the true plant. Each sample stores the measured
// triple [qdd; qd; q] and the residual tau - (H^ qdd + C^ qd + g^) of the
// estimated model. The recorded qdd is the plant's forward dynamics at the
// sample instant.

#include "gpct/common.hpp"
#include "gpct/control/controllers.hpp"
#include "gpct/dynamics/model.hpp"
#include "gpct/gp/regression.hpp"
#include "gpct/sim/simulate.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gpct::training {

enum class ExcitationMode { open_loop_torque, closed_loop_tracking };

inline std::string to_string(ExcitationMode mode) {
  return mode == ExcitationMode::open_loop_torque ? "open-loop-torque" : "closed-loop-tracking";
}

inline ExcitationMode parse_excitation_mode(const std::string& text) {
  if (text == "open-loop-torque") return ExcitationMode::open_loop_torque;
  if (text == "closed-loop-tracking") return ExcitationMode::closed_loop_tracking;
  throw ConfigError("excitation mode must be open-loop-torque or closed-loop-tracking, got '" + text + "'");
}

/// Inclusive evenly spaced grid.
struct Grid {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  double at(int k) const {
    return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
};

struct ExcitationPlan {
  ExcitationMode mode = ExcitationMode::open_loop_torque;
  // open loop
  Grid torque{-8.0, 8.0, 33};
  Grid initial_position{-std::numbers::pi, std::numbers::pi, 30};
  double hold = 0.5;
  // closed loop
  double sample_period = 0.03;
  double sample_offset = 0.0;  ///< first sample at offset + one period
  int sample_count = 351;
  double duration = 10.53;
  double noise_q = 1e-3;
  double noise_qd = 1e-2;
  // shared
  double dt = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("excitation dt must be positive");
    if (mode == ExcitationMode::open_loop_torque) {
      if (torque.count < 1 || initial_position.count < 1) throw ConfigError("excitation grids must be non-empty");
      if (!(hold > 0.0)) throw ConfigError("hold duration must be positive");
    } else {
      if (sample_count < 1) throw ConfigError("sample_count must be at least 1");
      if (!(sample_period > 0.0)) throw ConfigError("sample_period must be positive");
      if (!(duration > 0.0)) throw ConfigError("excitation duration must be positive");
      if (sample_offset < 0.0) throw ConfigError("sample_offset must be non-negative");
      if (sample_offset + static_cast<double>(sample_count) * sample_period > duration * (1.0 + 1e-12))
        throw ConfigError("sample_count x sample_period exceeds the excitation duration");
      if (noise_q < 0.0 || noise_qd < 0.0) throw ConfigError("sensor noise must be non-negative");
    }
  }
};

struct TrainingReport {
  ExcitationMode mode = ExcitationMode::open_loop_torque;
  std::size_t requested = 0;
  std::size_t emitted = 0;
  std::size_t dropped = 0;
};

struct GeneratedTraining {
  gp::TrainingSet data;
  TrainingReport report;
};

/// Residual of the estimated model: tau - (H^ qdd + C^ qd + g^).
template <dynamics::ManipulatorModel Est>
Vector torque_residual(const Est& est, const Vector& q, const Vector& qd, const Vector& qdd, const Vector& tau) {
  return tau - dynamics::inverse_dynamics(est, q, qd, qdd);
}

namespace detail {

inline void append_sample(std::vector<double>& inputs, std::vector<double>& outputs, const Vector& q, const Vector& qd,
                          const Vector& qdd, const Vector& residual) {
  for (const Vector* v : {&qdd, &qd, &q}) inputs.insert(inputs.end(), v->data(), v->data() + v->size());
  outputs.insert(outputs.end(), residual.data(), residual.data() + residual.size());
}

inline gp::TrainingSet assemble(const std::vector<double>& inputs, const std::vector<double>& outputs, Eigen::Index n) {
  const Eigen::Index m = static_cast<Eigen::Index>(outputs.size()) / n;
  gp::TrainingSet set = gp::TrainingSet::empty(3 * n, n);
  set.inputs = Eigen::Map<const Matrix>(inputs.data(), 3 * n, m);
  set.outputs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      outputs.data(), m, n);
  return set;
}

}  // namespace detail

/// Constant torque from rest for `hold` seconds at every (tau, q0) grid cell,
/// torque-major order. With more than one joint every joint receives the same
/// torque and initial position. Divergent cells are dropped and counted.
template <dynamics::ManipulatorModel True, dynamics::ManipulatorModel Est>
GeneratedTraining generate_open_loop(const ExcitationPlan& plan, const True& plant, const Est& est) {
  if (plan.mode != ExcitationMode::open_loop_torque) throw ConfigError("plan is not an open-loop plan");
  plan.validate();
  const Eigen::Index n = plant.dof();
  const std::size_t steps = static_cast<std::size_t>(std::floor(plan.hold / plan.dt + 1e-9));

  std::vector<double> inputs, outputs;
  GeneratedTraining out;
  out.report.mode = plan.mode;
  for (int a = 0; a < plan.torque.count; ++a) {
    for (int b = 0; b < plan.initial_position.count; ++b) {
      ++out.report.requested;
      const Vector tau = Vector::Constant(n, plan.torque.at(a));
      dynamics::JointState s{Vector::Constant(n, plan.initial_position.at(b)), Vector::Zero(n), {}};
      auto f = [&](const Vector& q, const Vector& qd) {
        return dynamics::forward_dynamics(plant, dynamics::JointState{q, qd, {}}, tau);
      };
      bool diverged = false;
      for (std::size_t k = 0; k < steps && !diverged; ++k) {
        const double h = plan.dt;
        const Vector a1 = f(s.q, s.qd);
        const Vector v2 = s.qd + 0.5 * h * a1;
        const Vector a2 = f(s.q + 0.5 * h * s.qd, v2);
        const Vector v3 = s.qd + 0.5 * h * a2;
        const Vector a3 = f(s.q + 0.5 * h * v2, v3);
        const Vector v4 = s.qd + h * a3;
        const Vector a4 = f(s.q + h * v3, v4);
        s.q += (h / 6.0) * (s.qd + 2.0 * v2 + 2.0 * v3 + v4);
        s.qd += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        diverged = sim::detail::out_of_bounds(s.q, s.qd, 1e6);
      }
      if (diverged) {
        ++out.report.dropped;
        continue;
      }
      const Vector qdd = f(s.q, s.qd);
      if (!qdd.allFinite()) {
        ++out.report.dropped;
        continue;
      }
      detail::append_sample(inputs, outputs, s.q, s.qd, qdd, torque_residual(est, s.q, s.qd, qdd, tau));
    }
  }
  out.data = detail::assemble(inputs, outputs, n);
  out.report.emitted = static_cast<std::size_t>(out.data.size());
  return out;
}

/// Runs `controller` on the plant along `reference` (RK4, plan.dt) and samples
/// every sample_period starting at sample_offset + one period. Sensor noise is added to the
/// recorded q and qd before the residual is formed; qdd is the plant's
/// forward dynamics under the applied torque.
template <dynamics::ManipulatorModel True, dynamics::ManipulatorModel Est, control::Controller Ctrl, typename Ref>
GeneratedTraining generate_closed_loop(const ExcitationPlan& plan, const True& plant, const Est& est,
                                       const Ctrl& controller, const Ref& reference) {
  if (plan.mode != ExcitationMode::closed_loop_tracking) throw ConfigError("plan is not a closed-loop plan");
  plan.validate();
  if (controller.stochastic()) throw ConfigError("closed-loop excitation needs a deterministic controller");
  const double ratio = plan.sample_period / plan.dt;
  const long stride = std::lround(ratio);
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio)
    throw ConfigError("sample_period must be an integer multiple of dt");
  const long offset = std::lround(plan.sample_offset / plan.dt);
  if (std::abs(plan.sample_offset / plan.dt - static_cast<double>(offset)) > 1e-9 * std::max(1.0, plan.sample_offset / plan.dt))
    throw ConfigError("sample_offset must be an integer multiple of dt");

  sim::SimConfig cfg;
  cfg.dt = plan.dt;
  cfg.duration = static_cast<double>(offset + stride * plan.sample_count) * plan.dt;
  cfg.integrator = sim::Integrator::rk4;
  cfg.record_gp_std = false;
  const sim::SimResult run = sim::simulate(plant, controller, reference, cfg, plan.seed);

  const Eigen::Index n = plant.dof();
  std::mt19937_64 rng(plan.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> inputs, outputs;
  GeneratedTraining out;
  out.report.mode = plan.mode;
  out.report.requested = static_cast<std::size_t>(plan.sample_count);
  for (int j = 1; j <= plan.sample_count; ++j) {
    const Eigen::Index k = static_cast<Eigen::Index>(offset + j * stride);
    if (k >= run.steps()) {
      ++out.report.dropped;
      continue;
    }
    const Vector q = run.q.row(k).transpose();
    const Vector qd = run.qd.row(k).transpose();
    const Vector tau = run.tau.row(k).transpose();
    const Vector qdd = dynamics::forward_dynamics(plant, dynamics::JointState{q, qd, {}}, tau);
    Vector q_meas = q, qd_meas = qd;
    for (Eigen::Index i = 0; i < n; ++i) q_meas[i] += plan.noise_q * gauss(rng);
    for (Eigen::Index i = 0; i < n; ++i) qd_meas[i] += plan.noise_qd * gauss(rng);
    detail::append_sample(inputs, outputs, q_meas, qd_meas, qdd, torque_residual(est, q_meas, qd_meas, qdd, tau));
  }
  out.data = detail::assemble(inputs, outputs, n);
  out.report.emitted = static_cast<std::size_t>(out.data.size());
  return out;
}

/// key = value sidecar describing how a training set was produced.
inline std::string provenance(const ExcitationPlan& plan, const TrainingReport& report) {
  std::ostringstream os;
  os << "mode = " << to_string(plan.mode) << '\n';
  if (plan.mode == ExcitationMode::open_loop_torque) {
    os << "torque_grid = " << format_double(plan.torque.lo) << ' ' << format_double(plan.torque.hi) << ' '
       << plan.torque.count << '\n';
    os << "position_grid = " << format_double(plan.initial_position.lo) << ' '
       << format_double(plan.initial_position.hi) << ' ' << plan.initial_position.count << '\n';
    os << "hold = " << format_double(plan.hold) << '\n';
  } else {
    os << "sample_period = " << format_double(plan.sample_period) << '\n';
    os << "sample_offset = " << format_double(plan.sample_offset) << '\n';
    os << "sample_count = " << plan.sample_count << '\n';
    os << "duration = " << format_double(plan.duration) << '\n';
    os << "noise_q = " << format_double(plan.noise_q) << '\n';
    os << "noise_qd = " << format_double(plan.noise_qd) << '\n';
  }
  os << "dt = " << format_double(plan.dt) << '\n';
  os << "seed = " << plan.seed << '\n';
  os << "requested = " << report.requested << '\n';
  os << "emitted = " << report.emitted << '\n';
  os << "dropped = " << report.dropped << '\n';
  return os.str();
}

}  // namespace gpct::training
