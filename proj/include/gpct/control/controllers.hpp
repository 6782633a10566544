#pragma once
// Joint-space tracking controllers: PD, computed torque on an estimated
// model, and computed torque with a GP feedforward (CT-GP).
//
// The CT-GP law is
//   tau = H^(q) qdd_d + C^(q, qd) qd_d + g^(q, qd) + f_GP(q_c) - Kd ed - Kp e
// with q_c = [qdd_d; qd_d; q]. The measured velocity goes into C^ while the GP
// sees the desired velocity. In stochastic mode f_GP = mu + Sigma w is returned
// as a drift/diffusion pair; the integrator owns the noise.

#include "gpct/common.hpp"
#include "gpct/dynamics/model.hpp"
#include "gpct/gp/regression.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace gpct::control {

using dynamics::JointState;

struct Gains {
  Matrix kp;
  Matrix kd;

  static Gains diagonal(const Vector& kp_diag, const Vector& kd_diag) {
    return {Matrix(kp_diag.asDiagonal()), Matrix(kd_diag.asDiagonal())};
  }

  Eigen::Index dof() const { return kp.rows(); }

  /// Throws DomainError unless both matrices are symmetric positive definite.
  void validate() const {
    auto check = [](const Matrix& k, const char* name) {
      if (k.rows() != k.cols() || k.rows() == 0) throw DomainError(std::string(name) + " must be square");
      if (!k.allFinite()) throw DomainError(std::string(name) + " has non-finite entries");
      if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, k.cwiseAbs().maxCoeff()))
        throw DomainError(std::string(name) + " must be symmetric");
      Eigen::LLT<Matrix> llt(k);
      if (llt.info() != Eigen::Success) throw DomainError(std::string(name) + " must be positive definite");
    };
    check(kp, "Kp");
    check(kd, "Kd");
    if (kp.rows() != kd.rows()) throw DomainError("Kp and Kd differ in size");
  }

  double kd_min_singular_value() const {
    Eigen::JacobiSVD<Matrix> svd(kd);
    return svd.singularValues().minCoeff();
  }
};

/// Desired position, velocity and acceleration at one instant.
struct ReferenceSample {
  Vector q;
  Vector qd;
  Vector qdd;
};

/// GP query [qdd_d; qd_d; q]: desired acceleration and velocity, measured position.
inline Vector gp_input(const JointState& state, const ReferenceSample& ref) {
  const Eigen::Index n = state.q.size();
  Vector x(3 * n);
  x << ref.qdd, ref.qd, state.q;
  return x;
}

struct ControlOutput {
  Vector torque;     ///< applied torque (drift + Sigma * noise)
  Vector drift;      ///< deterministic part
  Vector diffusion;  ///< diagonal of Sigma(q_c); zero in deterministic mode
  Vector gp_mean;    ///< GP mean at q_c (zero without a GP)
  Vector gp_std;     ///< GP standard deviation at q_c when requested (zero otherwise)

  static ControlOutput deterministic(Vector tau) {
    ControlOutput out;
    const Eigen::Index n = tau.size();
    out.drift = tau;
    out.torque = std::move(tau);
    out.diffusion = Vector::Zero(n);
    out.gp_mean = Vector::Zero(n);
    out.gp_std = Vector::Zero(n);
    return out;
  }
};

enum class GpMode { deterministic, stochastic };

inline ControlOutput pd_control(const Gains& gains, const JointState& state, const ReferenceSample& ref) {
  const Vector e = state.q - ref.q;
  const Vector ed = state.qd - ref.qd;
  return ControlOutput::deterministic(-(gains.kp * e) - gains.kd * ed);
}

namespace detail {

template <dynamics::ManipulatorModel M>
Vector model_feedforward(const M& est, const JointState& state, const ReferenceSample& ref) {
  return est.mass_matrix(state.q) * ref.qdd + dynamics::coriolis_matrix(est, state.q, state.qd) * ref.qd +
         est.gravity_vector(state.q, state.qd);
}

inline Vector feedback(const Gains& gains, const JointState& state, const ReferenceSample& ref) {
  const Vector e = state.q - ref.q;
  const Vector ed = state.qd - ref.qd;
  return gains.kd * ed + gains.kp * e;
}

}  // namespace detail

template <dynamics::ManipulatorModel M>
ControlOutput computed_torque(const M& est, const Gains& gains, const JointState& state, const ReferenceSample& ref) {
  const Vector ff = detail::model_feedforward(est, state, ref);
  return ControlOutput::deterministic(ff - detail::feedback(gains, state, ref));
}

/// CT-GP law. `noise` (standard normals) is only used in stochastic mode and
/// may be omitted, in which case torque equals drift. `with_std` requests the
/// GP standard deviation in deterministic mode as well.
template <dynamics::ManipulatorModel M>
ControlOutput ct_gp_control(const M& est, const gp::MultiGP& gp, const Gains& gains, const JointState& state,
                            const ReferenceSample& ref, GpMode mode, const Vector* noise = nullptr,
                            bool with_std = false) {
  const Eigen::Index n = state.q.size();
  if (gp.input_dim() != 3 * n || gp.output_dim() != n)
    throw DomainError("GP maps " + std::to_string(gp.input_dim()) + " -> " + std::to_string(gp.output_dim()) +
                      " but the controller needs " + std::to_string(3 * n) + " -> " + std::to_string(n));
  const bool stochastic = mode == GpMode::stochastic;
  const gp::Prediction p = gp.predict(gp_input(state, ref), stochastic || with_std);

  const Vector ff = detail::model_feedforward(est, state, ref) + p.mean;
  ControlOutput out;
  out.drift = ff - detail::feedback(gains, state, ref);
  out.gp_mean = p.mean;
  out.gp_std = p.std.size() == n ? p.std : Vector::Zero(n);
  if (stochastic) {
    out.diffusion = p.std;
    out.torque = out.drift;
    if (noise != nullptr) {
      if (noise->size() != n) throw DomainError("noise vector has the wrong dimension");
      out.torque += out.diffusion.cwiseProduct(*noise);
    }
  } else {
    out.diffusion = Vector::Zero(n);
    out.torque = out.drift;
  }
  return out;
}

/// Controller objects used by the simulator. `with_std` asks for GP
/// diagnostics at recorded steps.
class PdController {
 public:
  explicit PdController(Gains gains) : gains_(std::move(gains)) {}
  ControlOutput operator()(const JointState& s, const ReferenceSample& r, bool /*with_std*/ = false) const {
    return pd_control(gains_, s, r);
  }
  bool stochastic() const { return false; }
  const Gains& gains() const { return gains_; }

 private:
  Gains gains_;
};

template <dynamics::ManipulatorModel M>
class ComputedTorqueController {
 public:
  ComputedTorqueController(M est, Gains gains) : est_(std::move(est)), gains_(std::move(gains)) {}
  ControlOutput operator()(const JointState& s, const ReferenceSample& r, bool /*with_std*/ = false) const {
    return computed_torque(est_, gains_, s, r);
  }
  bool stochastic() const { return false; }
  const Gains& gains() const { return gains_; }

 private:
  M est_;
  Gains gains_;
};

template <dynamics::ManipulatorModel M>
class CtGpController {
 public:
  CtGpController(M est, std::shared_ptr<const gp::MultiGP> gp, Gains gains, GpMode mode)
      : est_(std::move(est)), gp_(std::move(gp)), gains_(std::move(gains)), mode_(mode) {}
  ControlOutput operator()(const JointState& s, const ReferenceSample& r, bool with_std = false) const {
    return ct_gp_control(est_, *gp_, gains_, s, r, mode_, nullptr, with_std);
  }
  bool stochastic() const { return mode_ == GpMode::stochastic; }
  const Gains& gains() const { return gains_; }

 private:
  M est_;
  std::shared_ptr<const gp::MultiGP> gp_;
  Gains gains_;
  GpMode mode_;
};

template <typename C>
concept Controller = requires(const C& c, const JointState& s, const ReferenceSample& r) {
  { c(s, r, true) } -> std::convertible_to<ControlOutput>;
  { c.stochastic() } -> std::convertible_to<bool>;
};

/// Type-erased controller for runtime selection.
class AnyController {
 public:
  template <Controller C>
    requires(!std::same_as<std::remove_cvref_t<C>, AnyController>)
  AnyController(C c) : impl_(std::make_shared<Holder<C>>(std::move(c))) {}

  ControlOutput operator()(const JointState& s, const ReferenceSample& r, bool with_std = false) const {
    return impl_->call(s, r, with_std);
  }
  bool stochastic() const { return impl_->stochastic(); }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual ControlOutput call(const JointState&, const ReferenceSample&, bool) const = 0;
    virtual bool stochastic() const = 0;
  };
  template <typename C>
  struct Holder final : Concept {
    explicit Holder(C c) : controller(std::move(c)) {}
    ControlOutput call(const JointState& s, const ReferenceSample& r, bool w) const override {
      return controller(s, r, w);
    }
    bool stochastic() const override { return controller.stochastic(); }
    C controller;
  };
  std::shared_ptr<const Concept> impl_;
};

}  // namespace gpct::control
