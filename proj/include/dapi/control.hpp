#pragma once

// Controller laws for a plant with one sensor/actuator pair per node:
//
//   P       u = Kp (r - y)
//   DecPI   u = Kp (r - y) + Ki z,   dz/dt = r - y
//   DistPI  u = Kp (r - y) + Ki z,   dz/dt = (r - y) - gamma Lc z
//
// DecPI is DistPI with gamma = 0 and no communication; both share one code
// path. Gains are diagonal and stored as vectors.

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "dapi/errors.hpp"
#include "dapi/graph.hpp"
#include "dapi/types.hpp"

namespace dapi {

enum class ControllerKind { Proportional, DecentralizedPI, DistributedPI };

inline const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Proportional: return "P";
    case ControllerKind::DecentralizedPI: return "DecPI";
    case ControllerKind::DistributedPI: return "DistPI";
  }
  return "?";
}

class ControllerSpec {
 public:
  static ControllerSpec proportional(Vector kp) {
    ControllerSpec c(ControllerKind::Proportional, std::move(kp));
    c.ki_ = Vector::Zero(c.kp_.size());
    c.comm_laplacian_ = Matrix::Zero(c.kp_.size(), c.kp_.size());
    return c;
  }

  static ControllerSpec decentralized_pi(Vector kp, Vector ki) {
    ControllerSpec c(ControllerKind::DecentralizedPI, std::move(kp));
    c.set_ki(std::move(ki));
    c.comm_laplacian_ = Matrix::Zero(c.kp_.size(), c.kp_.size());
    return c;
  }

  /// gamma = 0 is accepted and yields the decentralized integrator exactly.
  static ControllerSpec distributed_pi(Vector kp, Vector ki, double gamma, WeightedGraph comm) {
    ControllerSpec c(ControllerKind::DistributedPI, std::move(kp));
    c.set_ki(std::move(ki));
    c.set_comm(std::move(comm));
    c.set_gamma(gamma);
    return c;
  }

  /// Integral gains chosen as Ki_i = 1 / C_i, which makes the stationary
  /// inputs satisfy C_i u_i = C_j u_j.
  static ControllerSpec distributed_pi_with_costs(Vector kp, const Vector& cost, double gamma, WeightedGraph comm) {
    if (cost.size() == 0 || !cost.allFinite() || (cost.array() <= 0.0).any()) {
      throw InvalidArgument("cost coefficients must be finite and strictly positive");
    }
    Vector ki = cost.cwiseInverse();
    ControllerSpec c = distributed_pi(std::move(kp), std::move(ki), gamma, std::move(comm));
    c.cost_ = cost;
    return c;
  }

  ControllerKind kind() const noexcept { return kind_; }
  Index size() const noexcept { return kp_.size(); }
  const Vector& kp() const noexcept { return kp_; }
  const Vector& ki() const noexcept { return ki_; }
  double gamma() const noexcept { return gamma_; }
  const std::optional<WeightedGraph>& comm_graph() const noexcept { return comm_; }
  const Matrix& comm_laplacian() const noexcept { return comm_laplacian_; }
  const std::optional<Vector>& cost_coeffs() const noexcept { return cost_; }
  bool has_integrator() const noexcept { return kind_ != ControllerKind::Proportional; }

  /// Copy with a different averaging gain (DistPI only).
  ControllerSpec with_gamma(double gamma) const {
    if (kind_ != ControllerKind::DistributedPI) throw InvalidArgument("with_gamma: controller is not DistPI");
    ControllerSpec c = *this;
    c.set_gamma(gamma);
    return c;
  }

 private:
  ControllerSpec(ControllerKind kind, Vector kp) : kind_(kind), kp_(std::move(kp)) {
    if (kp_.size() == 0) throw InvalidArgument("controller needs at least one node");
    if (!kp_.allFinite() || (kp_.array() <= 0.0).any()) throw InvalidArgument("Kp gains must be strictly positive");
  }

  void set_ki(Vector ki) {
    if (ki.size() != kp_.size()) throw InvalidArgument("Ki and Kp must have the same length");
    if (!ki.allFinite() || (ki.array() <= 0.0).any()) throw InvalidArgument("Ki gains must be strictly positive");
    ki_ = std::move(ki);
  }

  void set_comm(WeightedGraph comm) {
    if (static_cast<Index>(comm.size()) != kp_.size()) {
      throw InvalidArgument("communication graph has " + std::to_string(comm.size()) + " nodes, expected " +
                            std::to_string(kp_.size()));
    }
    if (!is_connected(comm)) throw InvalidArgument("communication graph must be connected");
    comm_laplacian_ = laplacian(comm);
    comm_ = std::move(comm);
  }

  void set_gamma(double gamma) {
    if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("averaging gain gamma must be non-negative");
    gamma_ = gamma;
  }

  ControllerKind kind_;
  Vector kp_;
  Vector ki_;
  double gamma_ = 0.0;
  std::optional<WeightedGraph> comm_;
  Matrix comm_laplacian_;
  std::optional<Vector> cost_;
};

namespace detail {
inline void require_io_dims(const ControllerSpec& ctrl, const Vector& r, const Vector& y, const Vector& z) {
  const Index m = ctrl.size();
  if (r.size() != m || y.size() != m) throw InvalidArgument("reference/output length does not match controller");
  if (ctrl.has_integrator() && z.size() != m) throw InvalidArgument("integrator state length does not match controller");
}
}  // namespace detail

/// u = Kp (r - y) + Ki z. The integrator state is ignored for a P-controller.
inline Vector control_output(const ControllerSpec& ctrl, const Vector& r, const Vector& y, const Vector& z) {
  detail::require_io_dims(ctrl, r, y, z);
  Vector u = ctrl.kp().cwiseProduct(r - y);
  if (ctrl.has_integrator()) u += ctrl.ki().cwiseProduct(z);
  return u;
}

/// dz/dt = (r - y) - gamma Lc z. For DecPI the coupling term is identically zero.
inline Vector integrator_dynamics(const ControllerSpec& ctrl, const Vector& r, const Vector& y, const Vector& z) {
  if (!ctrl.has_integrator()) throw InvalidArgument("integrator_dynamics: P-controller has no integrator state");
  detail::require_io_dims(ctrl, r, y, z);
  Vector dz = r - y;
  if (ctrl.gamma() != 0.0) dz.noalias() -= ctrl.gamma() * (ctrl.comm_laplacian() * z);
  return dz;
}

}  // namespace dapi
