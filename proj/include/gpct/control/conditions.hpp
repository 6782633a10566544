#pragma once
// Runtime verification of the tracking conditions: bounded reference (C1),
// sigma_min(Kd) above the velocity slope of the model error (C2), and an
// affine bound  |model error| <= alpha + beta |qd|  fitted from probes (C3).

#include "gpct/common.hpp"
#include "gpct/control/controllers.hpp"
#include "gpct/dynamics/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gpct::control {

/// Upper bounds of |q_d|, |qd_d|, |qdd_d| along a reference.
struct TrajectoryBounds {
  double c_q = 0.0;
  double c_qd = 0.0;
  double c_qdd = 0.0;
};

/// Sampling-based (probabilistic, not certified) bound. Covers every probe.
struct ModelErrorBound {
  double alpha = 0.0;  ///< N m
  double beta = 0.0;   ///< N m s / rad
  bool superlinear_warning = false;
  double max_probe_speed = 0.0;
  std::size_t probe_count = 0;
};

struct ErrorProbeSettings {
  double speed_range = -1.0;  ///< max |qd| probed; negative means max(1, 2 c_qd)
  int rungs = 8;              ///< speeds probed per sampled configuration
};

/// One probe: speed |qd| and model-error norm r.
struct ErrorProbe {
  double speed;
  double residual;
};

namespace detail {

/// Line alpha + beta s covering all probes with alpha, beta >= 0 that
/// minimizes the average slack, i.e. alpha + beta * mean(s). Candidates are
/// beta = 0 and the non-negative slopes of the upper hull; ties go to the
/// smaller alpha.
inline std::pair<double, double> fit_affine_cover(std::vector<ErrorProbe> probes) {
  if (probes.empty()) return {0.0, 0.0};
  std::sort(probes.begin(), probes.end(), [](const ErrorProbe& a, const ErrorProbe& b) {
    return a.speed < b.speed || (a.speed == b.speed && a.residual < b.residual);
  });
  double mean_speed = 0.0;
  for (const auto& p : probes) mean_speed += p.speed;
  mean_speed /= static_cast<double>(probes.size());

  // Upper hull, monotone chain from the right-most point backwards.
  std::vector<ErrorProbe> hull;
  auto cross = [](const ErrorProbe& o, const ErrorProbe& a, const ErrorProbe& b) {
    return (a.speed - o.speed) * (b.residual - o.residual) - (a.residual - o.residual) * (b.speed - o.speed);
  };
  for (const auto& p : probes) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0.0) hull.pop_back();
    hull.push_back(p);
  }
  std::vector<double> slopes{0.0};
  for (std::size_t k = 1; k < hull.size(); ++k) {
    const double ds = hull[k].speed - hull[k - 1].speed;
    if (ds > 0.0) {
      const double slope = (hull[k].residual - hull[k - 1].residual) / ds;
      if (slope > 0.0) slopes.push_back(slope);
    }
  }
  auto intercept = [&](double beta) {
    double a = 0.0;
    for (const auto& p : probes) a = std::max(a, p.residual - beta * p.speed);
    return a;
  };
  double best_alpha = intercept(0.0), best_beta = 0.0;
  double best_objective = best_alpha;
  for (double beta : slopes) {
    const double a = intercept(beta);
    const double objective = a + beta * mean_speed;
    const double tol = 1e-12 * std::max(1.0, std::abs(best_objective));
    if (objective < best_objective - tol || (std::abs(objective - best_objective) <= tol && a < best_alpha)) {
      best_objective = objective;
      best_alpha = a;
      best_beta = beta;
    }
  }
  // Make coverage hold in floating point as well.
  for (const auto& p : probes)
    while (p.residual > best_alpha + best_beta * p.speed) best_alpha = std::nextafter(best_alpha, INFINITY);
  return {best_alpha, best_beta};
}

}  // namespace detail

/// Probes the model error |H qdd_d + C qd_d + g - (H^ qdd_d + C^ qd_d + g^)|
/// over random configurations with bounded reference derivatives. Each sampled
/// configuration is evaluated on a ladder of speeds along one velocity
/// direction, so a speed-independent error yields beta = 0 exactly.
template <dynamics::ManipulatorModel True, dynamics::ManipulatorModel Est>
ModelErrorBound estimate_error_bound(const True& plant, const Est& est, const TrajectoryBounds& bounds,
                                     std::size_t probe_count, std::uint64_t seed,
                                     std::vector<ErrorProbe>* probes_out = nullptr,
                                     const ErrorProbeSettings& settings = {}) {
  if (!std::isfinite(bounds.c_q) || !std::isfinite(bounds.c_qd) || !std::isfinite(bounds.c_qdd))
    throw DomainError("reference bounds must be finite");
  const Eigen::Index n = plant.dof();
  if (est.dof() != n) throw DomainError("true and estimated models differ in joint count");
  const int rungs = std::max(2, settings.rungs);
  const double speed_max = settings.speed_range >= 0.0 ? settings.speed_range : std::max(1.0, 2.0 * bounds.c_qd);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto direction = [&] {
    Vector u(n);
    do {
      for (Eigen::Index i = 0; i < n; ++i) u[i] = gauss(rng);
    } while (u.norm() == 0.0);
    return Vector(u / u.norm());
  };
  auto in_ball = [&](double radius) {
    return Vector(direction() * radius * std::pow(uniform(rng), 1.0 / static_cast<double>(n)));
  };

  std::vector<ErrorProbe> probes;
  probes.reserve(probe_count);
  while (probes.size() < probe_count) {
    Vector q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = angle(rng);
    const Vector qd_dir = direction();
    const Vector ref_qd = in_ball(bounds.c_qd);
    const Vector ref_qdd = in_ball(bounds.c_qdd);
    const Matrix dh = plant.mass_matrix(q) - est.mass_matrix(q);
    for (int k = 0; k < rungs && probes.size() < probe_count; ++k) {
      const double s = speed_max * static_cast<double>(k) / static_cast<double>(rungs - 1);
      const Vector qd = s * qd_dir;
      const Vector err = dh * ref_qdd +
                         (dynamics::coriolis_matrix(plant, q, qd) - dynamics::coriolis_matrix(est, q, qd)) * ref_qd +
                         plant.gravity_vector(q, qd) - est.gravity_vector(q, qd);
      probes.push_back({qd.norm(), err.norm()});
    }
  }

  ModelErrorBound bound;
  bound.probe_count = probes.size();
  bound.max_probe_speed = speed_max;
  std::tie(bound.alpha, bound.beta) = detail::fit_affine_cover(probes);

  // Growth faster than affine shows up as a steeper required slope once the
  // fast half of the probes is included.
  std::vector<ErrorProbe> slow;
  for (const auto& p : probes)
    if (p.speed <= 0.5 * speed_max) slow.push_back(p);
  const double beta_slow = detail::fit_affine_cover(slow).second;
  double scale = 0.0;
  for (const auto& p : probes) scale = std::max(scale, p.residual);
  bound.superlinear_warning = bound.beta > 1.5 * beta_slow + 1e-9 * (1.0 + scale);

  if (probes_out) *probes_out = std::move(probes);
  return bound;
}

struct ConditionReport {
  TrajectoryBounds reference;
  double kd_min_singular_value = 0.0;
  double beta = 0.0;
  bool gains_positive_definite = false;
  bool reference_bounded = false;  // C1
  bool kd_dominates_beta = false;  // C2

  bool passed() const { return gains_positive_definite && reference_bounded && kd_dominates_beta; }

  std::string summary() const {
    std::ostringstream os;
    os << (reference_bounded ? "PASS" : "FAIL") << " C1 reference bounded: c_q = " << reference.c_q
       << ", c_qd = " << reference.c_qd << ", c_qdd = " << reference.c_qdd << '\n';
    os << (gains_positive_definite ? "PASS" : "FAIL") << " gains positive definite\n";
    os << (kd_dominates_beta ? "PASS" : "FAIL") << " C2 sigma_min(Kd) = " << kd_min_singular_value
       << " > beta = " << beta << '\n';
    return os.str();
  }
};

inline ConditionReport verify_conditions(const Gains& gains, const ModelErrorBound& bound,
                                         const TrajectoryBounds& reference) {
  ConditionReport report;
  report.reference = reference;
  report.beta = bound.beta;
  report.reference_bounded = std::isfinite(reference.c_q) && std::isfinite(reference.c_qd) &&
                             std::isfinite(reference.c_qdd);
  try {
    gains.validate();
    report.gains_positive_definite = true;
  } catch (const DomainError&) {
    report.gains_positive_definite = false;
  }
  report.kd_min_singular_value = gains.kd.size() ? gains.kd_min_singular_value() : 0.0;
  report.kd_dominates_beta = report.kd_min_singular_value > bound.beta;
  return report;
}

}  // namespace gpct::control
