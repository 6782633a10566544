#pragma once
// Single-joint wing: a pendulum with an aerodynamic load, and the
// damping-free pendulum used as its estimated model.

#include "gpct/common.hpp"
#include "gpct/dynamics/aero.hpp"

#include <cmath>

namespace gpct::dynamics {

inline constexpr double kStandardGravity = 9.81;

/// J qdd + (m l) g0 sin q = tau
struct PendulumModel {
  double inertia = 1.0;     ///< kg m^2
  double mass_lever = 1.0;  ///< kg m
  double gravity = kStandardGravity;

  Eigen::Index dof() const { return 1; }
  Matrix mass_matrix(const Vector&) const { return Matrix::Constant(1, 1, inertia); }
  Matrix mass_matrix_derivative(const Vector&, Eigen::Index) const { return Matrix::Zero(1, 1); }
  Matrix coriolis_matrix(const Vector&, const Vector&) const { return Matrix::Zero(1, 1); }
  Vector gravity_vector(const Vector& q, const Vector&) const {
    return Vector::Constant(1, mass_lever * gravity * std::sin(q[0]));
  }
};

/// Rigid wing on a joint. g = m g0 l sin q + aerodynamic load.
struct WingModel {
  double inertia = 1.0;  ///< J_a, kg m^2
  double mass = 1.0;     ///< kg
  double lever = 1.0;    ///< joint to centre of mass, m
  double gravity = kStandardGravity;
  AeroTable table = synthetic_naca0015_table();
  AeroGeometry aero;

  Eigen::Index dof() const { return 1; }
  Matrix mass_matrix(const Vector&) const { return Matrix::Constant(1, 1, inertia); }
  Matrix mass_matrix_derivative(const Vector&, Eigen::Index) const { return Matrix::Zero(1, 1); }
  Matrix coriolis_matrix(const Vector&, const Vector&) const { return Matrix::Zero(1, 1); }
  Vector gravity_vector(const Vector& q, const Vector& qd) const {
    return Vector::Constant(1, mass * gravity * lever * std::sin(q[0]) + aero_torque(table, q[0], qd[0], aero));
  }

  /// The estimate used for this wing: J^ = 0.9 J, (m l)^ = 0.9 m l, no aerodynamics.
  PendulumModel estimate(double factor = 0.9) const {
    return PendulumModel{factor * inertia, factor * mass * lever, gravity};
  }
};

}  // namespace gpct::dynamics
