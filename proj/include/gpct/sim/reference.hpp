#pragma once
// Sinusoidal joint references with exact derivatives.

#include "gpct/common.hpp"
#include "gpct/control/conditions.hpp"
#include "gpct/control/controllers.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace gpct::sim {

/// Unit of the frequency field. `hertz`: q_d = A sin(2 pi f t + phi);
/// `rad_per_s`: q_d = A sin(f t + phi).
enum class FrequencyUnit { hertz, rad_per_s };

inline std::string to_string(FrequencyUnit unit) { return unit == FrequencyUnit::hertz ? "hz" : "rad_per_s"; }

inline FrequencyUnit parse_frequency_unit(const std::string& text) {
  if (text == "hz") return FrequencyUnit::hertz;
  if (text == "rad_per_s") return FrequencyUnit::rad_per_s;
  throw ConfigError("frequency_unit must be 'hz' or 'rad_per_s', got '" + text + "'");
}

/// q_d,i(t) = offset_i + A_i sin(w_i t + phi_i) per joint.
struct SinusoidalReference {
  Vector amplitude;
  Vector frequency;
  Vector phase;
  Vector offset;
  FrequencyUnit unit = FrequencyUnit::hertz;

  static SinusoidalReference make(Vector amplitude, Vector frequency, FrequencyUnit unit) {
    const Eigen::Index n = amplitude.size();
    return {std::move(amplitude), std::move(frequency), Vector::Zero(n), Vector::Zero(n), unit};
  }

  Eigen::Index dof() const { return amplitude.size(); }

  void validate() const {
    const Eigen::Index n = amplitude.size();
    if (n == 0) throw ConfigError("reference needs at least one joint");
    if (frequency.size() != n || phase.size() != n || offset.size() != n)
      throw ConfigError("reference amplitude, frequency, phase and offset must have the same length");
    if (!amplitude.allFinite() || !frequency.allFinite() || !phase.allFinite() || !offset.allFinite())
      throw ConfigError("reference parameters must be finite");
  }

  /// Angular frequency in rad/s.
  Vector omega() const { return unit == FrequencyUnit::hertz ? Vector(2.0 * std::numbers::pi * frequency) : frequency; }

  control::ReferenceSample operator()(double t) const {
    const Vector w = omega();
    const Eigen::Index n = dof();
    control::ReferenceSample r{Vector(n), Vector(n), Vector(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      const double arg = w[i] * t + phase[i];
      const double s = std::sin(arg), c = std::cos(arg);
      r.q[i] = offset[i] + amplitude[i] * s;
      r.qd[i] = amplitude[i] * w[i] * c;
      r.qdd[i] = -amplitude[i] * w[i] * w[i] * s;
    }
    return r;
  }

  /// Euclidean-norm bounds over all t: c_q = |offset| + |A|, c_qd = |A w|,
  /// c_qdd = |A w^2|.
  control::TrajectoryBounds bounds() const {
    const Vector w = omega();
    const Vector a = amplitude.cwiseAbs();
    return {offset.norm() + a.norm(), a.cwiseProduct(w.cwiseAbs()).norm(),
            a.cwiseProduct(w.cwiseAbs2()).norm()};
  }
};

}  // namespace gpct::sim
