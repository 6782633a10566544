#pragma once
// Rigid manipulator dynamics  H(q) qdd + C(q, qd) qd + g(q, qd) = tau.
//
// A model provides H, its partial derivatives dH/dq_k and the joint load g.
// g collects gravity and every other joint force (friction, springs,
// aerodynamics), which is why it may depend on qd. C is derived from the
// Christoffel symbols of H unless the model overrides it, which makes
// Hdot - 2C skew-symmetric by construction.

#include "gpct/common.hpp"

#include <concepts>
#include <cstddef>
#include <memory>
#include <type_traits>
#include <utility>
#include <vector>

namespace gpct::dynamics {

struct JointState {
  Vector q;
  Vector qd;
  Vector qdd;  ///< filled by forward dynamics when needed

  Eigen::Index dof() const { return q.size(); }
};

template <typename M>
concept ManipulatorModel = requires(const M& model, const Vector& q, const Vector& qd, Eigen::Index k) {
  { model.dof() } -> std::convertible_to<Eigen::Index>;
  { model.mass_matrix(q) } -> std::convertible_to<Matrix>;
  { model.mass_matrix_derivative(q, k) } -> std::convertible_to<Matrix>;
  { model.gravity_vector(q, qd) } -> std::convertible_to<Vector>;
};

template <typename M>
concept HasCoriolisOverride = requires(const M& model, const Vector& q, const Vector& qd) {
  { model.coriolis_matrix(q, qd) } -> std::convertible_to<Matrix>;
};

/// C_kj = sum_i 1/2 (dH_kj/dq_i + dH_ki/dq_j - dH_ij/dq_k) qd_i
template <ManipulatorModel M>
Matrix christoffel_coriolis(const M& model, const Vector& q, const Vector& qd) {
  const Eigen::Index n = model.dof();
  std::vector<Matrix> dh;
  dh.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) dh.push_back(model.mass_matrix_derivative(q, k));
  Matrix c = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < n; ++j) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double gamma = 0.5 * (dh[static_cast<std::size_t>(i)](k, j) + dh[static_cast<std::size_t>(j)](k, i) -
                                    dh[static_cast<std::size_t>(k)](i, j));
        sum += gamma * qd[i];
      }
      c(k, j) = sum;
    }
  return c;
}

template <ManipulatorModel M>
Matrix mass_matrix(const M& model, const Vector& q) {
  return model.mass_matrix(q);
}

template <ManipulatorModel M>
Matrix coriolis_matrix(const M& model, const Vector& q, const Vector& qd) {
  if constexpr (HasCoriolisOverride<M>) {
    return model.coriolis_matrix(q, qd);
  } else {
    return christoffel_coriolis(model, q, qd);
  }
}

template <ManipulatorModel M>
Vector gravity_vector(const M& model, const Vector& q, const Vector& qd) {
  return model.gravity_vector(q, qd);
}

/// H qdd + C qd + g for a given acceleration.
template <ManipulatorModel M>
Vector inverse_dynamics(const M& model, const Vector& q, const Vector& qd, const Vector& qdd) {
  return model.mass_matrix(q) * qdd + coriolis_matrix(model, q, qd) * qd + model.gravity_vector(q, qd);
}

/// qdd = H^{-1} (tau - C qd - g), solved through a Cholesky factorization.
template <ManipulatorModel M>
Vector forward_dynamics(const M& model, const JointState& state, const Vector& tau) {
  const Matrix h = model.mass_matrix(state.q);
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
  const Vector rhs = tau - coriolis_matrix(model, state.q, state.qd) * state.qd - model.gravity_vector(state.q, state.qd);
  return llt.solve(rhs);
}

template <ManipulatorModel M>
double kinetic_energy(const M& model, const Vector& q, const Vector& qd) {
  return 0.5 * qd.dot(model.mass_matrix(q) * qd);
}

/// Type-erased model for runtime selection. Copies share the wrapped object.
class AnyModel {
 public:
  template <ManipulatorModel M>
    requires(!std::same_as<std::remove_cvref_t<M>, AnyModel>)
  AnyModel(M model) : impl_(std::make_shared<Holder<M>>(std::move(model))) {}

  Eigen::Index dof() const { return impl_->dof(); }
  Matrix mass_matrix(const Vector& q) const { return impl_->mass_matrix(q); }
  Matrix mass_matrix_derivative(const Vector& q, Eigen::Index k) const { return impl_->mass_matrix_derivative(q, k); }
  Matrix coriolis_matrix(const Vector& q, const Vector& qd) const { return impl_->coriolis_matrix(q, qd); }
  Vector gravity_vector(const Vector& q, const Vector& qd) const { return impl_->gravity_vector(q, qd); }

  template <typename M>
  const M* target() const {
    auto* holder = dynamic_cast<const Holder<M>*>(impl_.get());
    return holder ? &holder->model : nullptr;
  }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual Eigen::Index dof() const = 0;
    virtual Matrix mass_matrix(const Vector& q) const = 0;
    virtual Matrix mass_matrix_derivative(const Vector& q, Eigen::Index k) const = 0;
    virtual Matrix coriolis_matrix(const Vector& q, const Vector& qd) const = 0;
    virtual Vector gravity_vector(const Vector& q, const Vector& qd) const = 0;
  };

  template <typename M>
  struct Holder final : Concept {
    explicit Holder(M m) : model(std::move(m)) {}
    Eigen::Index dof() const override { return model.dof(); }
    Matrix mass_matrix(const Vector& q) const override { return model.mass_matrix(q); }
    Matrix mass_matrix_derivative(const Vector& q, Eigen::Index k) const override {
      return model.mass_matrix_derivative(q, k);
    }
    Matrix coriolis_matrix(const Vector& q, const Vector& qd) const override {
      return dynamics::coriolis_matrix(model, q, qd);
    }
    Vector gravity_vector(const Vector& q, const Vector& qd) const override { return model.gravity_vector(q, qd); }
    M model;
  };

  std::shared_ptr<const Concept> impl_;
};

/// Wraps a model and negates its Coriolis matrix. Only useful as a negative
/// control for the structural property checks.
template <ManipulatorModel M>
struct CorruptedCoriolis {
  M inner;

  Eigen::Index dof() const { return inner.dof(); }
  Matrix mass_matrix(const Vector& q) const { return inner.mass_matrix(q); }
  Matrix mass_matrix_derivative(const Vector& q, Eigen::Index k) const { return inner.mass_matrix_derivative(q, k); }
  Matrix coriolis_matrix(const Vector& q, const Vector& qd) const { return -dynamics::coriolis_matrix(inner, q, qd); }
  Vector gravity_vector(const Vector& q, const Vector& qd) const { return inner.gravity_vector(q, qd); }
};

}  // namespace gpct::dynamics
