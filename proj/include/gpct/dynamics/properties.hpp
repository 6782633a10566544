#pragma once
// Sampled checks of the structural properties every rigid manipulator model
// must satisfy: H symmetric positive definite, Hdot - 2C skew-symmetric,
// C linear in qd, H Lipschitz in q.

#include "gpct/common.hpp"
#include "gpct/dynamics/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace gpct::dynamics {

struct StructuralThresholds {
  double symmetry = 1e-10;
  double skew = 1e-8;
  double linearity = 1e-10;
  double fd_step = 1e-6;   ///< central-difference step along the flow
  double velocity_range = 3.0;
};

struct StructuralReport {
  int samples = 0;
  double max_symmetry_defect = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double max_skew_defect = 0.0;
  double max_linearity_defect = 0.0;
  double lipschitz_estimate = 0.0;
  StructuralThresholds thresholds;

  bool symmetric() const { return max_symmetry_defect <= thresholds.symmetry; }
  bool positive_definite() const { return min_eigenvalue > 0.0; }
  bool skew_symmetric() const { return max_skew_defect <= thresholds.skew; }
  bool linear_in_velocity() const { return max_linearity_defect <= thresholds.linearity; }
  bool lipschitz_finite() const { return std::isfinite(lipschitz_estimate); }
  bool passed() const {
    return symmetric() && positive_definite() && skew_symmetric() && linear_in_velocity() && lipschitz_finite();
  }

  std::string summary() const {
    std::ostringstream os;
    auto line = [&](const char* name, double value, bool ok) {
      os << (ok ? "PASS " : "FAIL ") << name << " = " << value << '\n';
    };
    line("H symmetry defect", max_symmetry_defect, symmetric());
    line("H minimum eigenvalue", min_eigenvalue, positive_definite());
    line("Hdot-2C skew-symmetry defect", max_skew_defect, skew_symmetric());
    line("C linearity defect", max_linearity_defect, linear_in_velocity());
    line("H Lipschitz estimate", lipschitz_estimate, lipschitz_finite());
    return os.str();
  }
};

template <ManipulatorModel M>
StructuralReport check_structural_properties(const M& model, int sample_count, std::uint64_t seed,
                                             const StructuralThresholds& thresholds = {}) {
  StructuralReport report;
  report.thresholds = thresholds;
  report.samples = sample_count;
  const Eigen::Index n = model.dof();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-thresholds.velocity_range, thresholds.velocity_range);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto draw = [&](auto& dist) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
  };

  Vector previous_q;
  Matrix previous_h;
  for (int s = 0; s < sample_count; ++s) {
    const Vector q = draw(angle);
    const Vector qd = draw(speed);
    const Vector v = draw(unit);
    const Vector a = draw(speed);
    const Vector b = draw(speed);

    const Matrix h = model.mass_matrix(q);
    report.max_symmetry_defect = std::max(report.max_symmetry_defect, (h - h.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
    report.min_eigenvalue = std::min(report.min_eigenvalue, eig.eigenvalues().minCoeff());

    const double step = thresholds.fd_step;
    const Matrix hdot = (model.mass_matrix(q + step * qd) - model.mass_matrix(q - step * qd)) / (2.0 * step);
    const Matrix c = coriolis_matrix(model, q, qd);
    report.max_skew_defect = std::max(report.max_skew_defect, std::abs(v.dot((hdot - 2.0 * c) * v)));

    const Vector lhs = coriolis_matrix(model, q, Vector(a + b)) * v;
    const Vector rhs = coriolis_matrix(model, q, a) * v + coriolis_matrix(model, q, b) * v;
    const Vector swapped = coriolis_matrix(model, q, a) * b - coriolis_matrix(model, q, b) * a;
    report.max_linearity_defect =
        std::max({report.max_linearity_defect, (lhs - rhs).cwiseAbs().maxCoeff(), swapped.cwiseAbs().maxCoeff()});

    // Local difference quotient plus one between consecutive samples.
    const Vector q_near = q + 1e-4 * v;
    const double near_dq = (q_near - q).norm();
    if (near_dq > 0.0)
      report.lipschitz_estimate =
          std::max(report.lipschitz_estimate, (model.mass_matrix(q_near) - h).norm() / near_dq);
    if (s > 0) {
      const double dq = (q - previous_q).norm();
      if (dq > 0.0) report.lipschitz_estimate = std::max(report.lipschitz_estimate, (h - previous_h).norm() / dq);
    }
    previous_q = q;
    previous_h = h;
  }
  return report;
}

}  // namespace gpct::dynamics
