#pragma once
// Planar two-link arm (SCARA plane, optional in-plane gravity) with joint
// friction and a zero-rest-length nonlinear spring between the end effector
// and a fixed anchor, standing in for an elastic band.

#include "gpct/common.hpp"

#include <cmath>

namespace gpct::dynamics {

struct JointFriction {
  double viscous = 0.0;    ///< N m s / rad
  double coulomb = 0.0;    ///< N m
  double smoothing = 0.05; ///< rad/s, tanh width of the Coulomb term
};

/// F = -(k1 + k3 d^2) (p - anchor), d = |p - anchor|. Radial, so the force
/// magnitude is k1 d + k3 d^3.
struct EndEffectorSpring {
  double k1 = 0.0;  ///< N/m
  double k3 = 0.0;  ///< N/m^3
  double anchor_x = 0.7;
  double anchor_y = -0.3;
};

struct TwoLinkArm {
  double length1 = 0.3;
  double length2 = 0.3;
  double mass1 = 1.5;
  double mass2 = 1.0;
  /// Inertias about the link centres of mass; negative means uniform rod m l^2 / 12.
  double inertia1 = -1.0;
  double inertia2 = -1.0;
  double gravity = 0.0;  ///< along -y of the arm plane; 0 for a horizontal SCARA
  JointFriction friction1;
  JointFriction friction2;
  EndEffectorSpring spring;

  Eigen::Index dof() const { return 2; }

  double com1() const { return 0.5 * length1; }
  double com2() const { return 0.5 * length2; }
  double rod_inertia1() const { return inertia1 >= 0.0 ? inertia1 : mass1 * length1 * length1 / 12.0; }
  double rod_inertia2() const { return inertia2 >= 0.0 ? inertia2 : mass2 * length2 * length2 / 12.0; }

  // H = [[a + 2 b c2, d + b c2], [d + b c2, d]]
  double coeff_a() const {
    return rod_inertia1() + rod_inertia2() + mass1 * com1() * com1() +
           mass2 * (length1 * length1 + com2() * com2());
  }
  double coeff_b() const { return mass2 * length1 * com2(); }
  double coeff_d() const { return rod_inertia2() + mass2 * com2() * com2(); }

  Matrix mass_matrix(const Vector& q) const {
    const double c2 = std::cos(q[1]);
    const double a = coeff_a(), b = coeff_b(), d = coeff_d();
    Matrix h(2, 2);
    h << a + 2.0 * b * c2, d + b * c2, d + b * c2, d;
    return h;
  }

  Matrix mass_matrix_derivative(const Vector& q, Eigen::Index k) const {
    Matrix dh = Matrix::Zero(2, 2);
    if (k == 1) {
      const double s2 = std::sin(q[1]);
      const double b = coeff_b();
      dh << -2.0 * b * s2, -b * s2, -b * s2, 0.0;
    }
    return dh;
  }

  Eigen::Vector2d end_effector(const Vector& q) const {
    return {length1 * std::cos(q[0]) + length2 * std::cos(q[0] + q[1]),
            length1 * std::sin(q[0]) + length2 * std::sin(q[0] + q[1])};
  }

  Eigen::Matrix2d jacobian(const Vector& q) const {
    const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
    const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
    Eigen::Matrix2d j;
    j << -length1 * s1 - length2 * s12, -length2 * s12, length1 * c1 + length2 * c12, length2 * c12;
    return j;
  }

  /// Joint load of the spring (positive opposes the joint motion it resists).
  Vector spring_load(const Vector& q) const {
    if (spring.k1 == 0.0 && spring.k3 == 0.0) return Vector::Zero(2);
    const Eigen::Vector2d r = end_effector(q) - Eigen::Vector2d(spring.anchor_x, spring.anchor_y);
    const Eigen::Vector2d force = -(spring.k1 + spring.k3 * r.squaredNorm()) * r;
    return -(jacobian(q).transpose() * force);
  }

  Vector friction_load(const Vector& qd) const {
    Vector f(2);
    const JointFriction* fr[2] = {&friction1, &friction2};
    for (int i = 0; i < 2; ++i) {
      const double coulomb = fr[i]->coulomb == 0.0 ? 0.0 : fr[i]->coulomb * std::tanh(qd[i] / fr[i]->smoothing);
      f[i] = fr[i]->viscous * qd[i] + coulomb;
    }
    return f;
  }

  Vector gravity_load(const Vector& q) const {
    Vector g = Vector::Zero(2);
    if (gravity == 0.0) return g;
    const double c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
    g[0] = (mass1 * com1() + mass2 * length1) * gravity * c1 + mass2 * com2() * gravity * c12;
    g[1] = mass2 * com2() * gravity * c12;
    return g;
  }

  Vector gravity_vector(const Vector& q, const Vector& qd) const {
    return gravity_load(q) + friction_load(qd) + spring_load(q);
  }

  /// Rigid-body copy with scaled masses/inertias and no friction or spring.
  TwoLinkArm rigid_estimate(double scale) const {
    TwoLinkArm est = *this;
    est.mass1 *= scale;
    est.mass2 *= scale;
    est.inertia1 = scale * rod_inertia1();
    est.inertia2 = scale * rod_inertia2();
    est.friction1 = {};
    est.friction2 = {};
    est.spring = {};
    return est;
  }
};

}  // namespace gpct::dynamics
