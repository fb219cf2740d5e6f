#pragma once

// Plant models and closed-loop assembly.
//
// LtiSystem is the generic plant  dx/dt = A x + B u + d,  y = C x + y0 + eta,
// where y0 is a constant output offset (zero for a plain LTI plant). The swing
// network compiles to an LtiSystem in deviation coordinates: the state is
// (delta, omega - omega_ref), y0 = omega_ref 1, and the damping acting on the
// absolute frequency appears as the constant term -M D omega_ref 1 in d.
// For the linear model this shift is exact, and the uniform angle mode stays
// at rest whenever the frequencies sit at the reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dapi/control.hpp"
#include "dapi/errors.hpp"
#include "dapi/graph.hpp"
#include "dapi/numerics.hpp"
#include "dapi/types.hpp"

namespace dapi {

/// Named contiguous block of a state vector.
struct StateSlice {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

struct LtiSystem {
  Matrix A;
  Matrix B;
  Matrix C;
  Vector d;              ///< constant disturbance, length n
  Vector eta;            ///< constant measurement noise, length m
  Vector r;              ///< reference, length m
  Vector output_offset;  ///< y0, length m
  std::vector<StateSlice> layout;

  /// Plant with zero disturbance, noise, reference and offset.
  static LtiSystem from_matrices(Matrix A, Matrix B, Matrix C) {
    LtiSystem s;
    const Index n = A.rows();
    const Index m = B.cols();
    s.A = std::move(A);
    s.B = std::move(B);
    s.C = std::move(C);
    s.d = Vector::Zero(n);
    s.eta = Vector::Zero(m);
    s.r = Vector::Zero(m);
    s.output_offset = Vector::Zero(m);
    s.layout = {{"x", 0, n}};
    s.validate();
    return s;
  }

  Index state_dim() const noexcept { return A.rows(); }
  Index io_dim() const noexcept { return B.cols(); }

  void validate() const {
    const Index n = A.rows();
    const Index m = B.cols();
    if (A.cols() != n) throw InvalidArgument("LtiSystem: A must be square");
    if (B.rows() != n) throw InvalidArgument("LtiSystem: B must have as many rows as A");
    if (C.rows() != m || C.cols() != n) throw InvalidArgument("LtiSystem: C must be m x n");
    if (m > n) throw InvalidArgument("LtiSystem: more actuators than states");
    if (d.size() != n) throw InvalidArgument("LtiSystem: disturbance length must equal the state dimension");
    if (eta.size() != m || r.size() != m || output_offset.size() != m) {
      throw InvalidArgument("LtiSystem: noise, reference and output offset must have length m");
    }
    if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !d.allFinite() || !eta.allFinite() || !r.allFinite() ||
        !output_offset.allFinite()) {
      throw InvalidArgument("LtiSystem: non-finite entries");
    }
  }
};

/// Generator bus in SI units.
struct Bus {
  int id = 0;             ///< label from the data file
  double inertia = 0.0;   ///< m_i [kg m^2]
  double damping = 0.0;   ///< d_i [1/s]
  double load = 0.0;      ///< consumed power [W]; enters the swing equation as p^m_i = -load
  double voltage = 0.0;   ///< |V_i| [V]
};

struct Line {
  std::size_t from = 0;  ///< bus index
  std::size_t to = 0;
  double susceptance = 0.0;  ///< b_ij [S]
};

struct PowerNetwork {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  double omega_ref = 0.0;  ///< [rad/s]

  Index size() const noexcept { return static_cast<Index>(buses.size()); }

  /// Coupling graph with weights k_ij = |V_i| |V_j| b_ij.
  WeightedGraph coupling_graph() const {
    WeightedGraph g(buses.size());
    for (const auto& line : lines) {
      if (line.from >= buses.size() || line.to >= buses.size()) throw ValidationError("line endpoint out of range");
      g.add_edge(line.from, line.to, buses[line.from].voltage * buses[line.to].voltage * line.susceptance);
    }
    return g;
  }

  Vector inertia() const { return collect([](const Bus& b) { return b.inertia; }); }
  Vector damping() const { return collect([](const Bus& b) { return b.damping; }); }
  Vector loads() const { return collect([](const Bus& b) { return b.load; }); }
  /// p^m, the net mechanical-side injection of the swing equation (= -load).
  Vector injections() const { return -loads(); }

  void validate() const {
    if (buses.empty()) throw ValidationError("network has no buses");
    if (!std::isfinite(omega_ref)) throw ValidationError("reference frequency must be finite");
    for (const auto& b : buses) {
      const std::string who = "bus " + std::to_string(b.id);
      if (!(b.inertia > 0.0) || !std::isfinite(b.inertia)) throw ValidationError(who + ": inertia must be positive");
      if (!(b.damping > 0.0) || !std::isfinite(b.damping)) throw ValidationError(who + ": damping must be positive");
      if (!(b.voltage > 0.0) || !std::isfinite(b.voltage)) throw ValidationError(who + ": voltage must be positive");
      if (!std::isfinite(b.load)) throw ValidationError(who + ": load must be finite");
    }
    for (const auto& line : lines) {
      if (line.from >= buses.size() || line.to >= buses.size()) throw ValidationError("line endpoint out of range");
      if (!(line.susceptance > 0.0) || !std::isfinite(line.susceptance)) {
        throw ValidationError("line " + std::to_string(buses[line.from].id) + "-" + std::to_string(buses[line.to].id) +
                              ": susceptance must be positive");
      }
    }
    WeightedGraph g;
    try {
      g = coupling_graph();
    } catch (const InvalidArgument& e) {
      throw ValidationError(std::string("line data: ") + e.what());
    }
    if (!is_connected(g)) throw ValidationError("transmission network is not connected");
  }

 private:
  template <typename F>
  Vector collect(F field) const {
    Vector v(size());
    for (Index i = 0; i < size(); ++i) v(i) = field(buses[static_cast<std::size_t>(i)]);
    return v;
  }
};

/// Linearized swing equation with y = omega, in deviation coordinates:
///
///   A = [0 I; -M Lk  -M D],  B = [0; M],  C = [0 I],  M = diag(1/m_i),
///   d = [0; M (p^m - D omega_ref 1)],  r = y0 = omega_ref 1.
inline LtiSystem swing_to_lti(const PowerNetwork& net) {
  net.validate();
  const Index n = net.size();
  const Matrix Lk = laplacian(net.coupling_graph());
  const Vector minv = net.inertia().cwiseInverse();
  const Vector damping = net.damping();

  LtiSystem s;
  s.A = Matrix::Zero(2 * n, 2 * n);
  s.A.topRightCorner(n, n).setIdentity();
  s.A.bottomLeftCorner(n, n) = -(minv.asDiagonal() * Lk);
  s.A.bottomRightCorner(n, n) = Matrix((-minv.cwiseProduct(damping)).asDiagonal());
  s.B = Matrix::Zero(2 * n, n);
  s.B.bottomRows(n) = minv.asDiagonal();
  s.C = Matrix::Zero(n, 2 * n);
  s.C.rightCols(n).setIdentity();
  s.d = Vector::Zero(2 * n);
  s.d.tail(n) = minv.cwiseProduct(net.injections() - damping * net.omega_ref);
  s.eta = Vector::Zero(n);
  s.r = Vector::Constant(n, net.omega_ref);
  s.output_offset = Vector::Constant(n, net.omega_ref);
  s.layout = {{"delta", 0, n}, {"omega", n, n}};
  return s;
}

/// Disturbance vector of the swing plant for a given load profile [W].
inline Vector swing_disturbance(const PowerNetwork& net, const Vector& loads) {
  if (loads.size() != net.size()) throw InvalidArgument("load vector length does not match the network");
  const Index n = net.size();
  Vector d = Vector::Zero(2 * n);
  d.tail(n) = net.inertia().cwiseInverse().cwiseProduct(-loads - net.damping() * net.omega_ref);
  return d;
}

/// Closed-loop affine system  dX/dt = F X + Gd d + Gr (r - y0 - eta)
/// with X = (x, z), output y = [C 0] X + y0.
struct ClosedLoop {
  Matrix system_matrix;     ///< F (or A - B Kp C for a P-controller)
  Matrix disturbance_gain;  ///< Gd = [I; 0]
  Matrix reference_gain;    ///< Gr = [B Kp; I]
  Matrix output_selector;   ///< [C 0]
  Vector disturbance;       ///< d
  Vector reference_error;   ///< r - y0 - eta
  std::vector<StateSlice> layout;
  LtiSystem plant;
  ControllerSpec controller;

  Index dim() const noexcept { return system_matrix.rows(); }
  Index plant_dim() const noexcept { return plant.state_dim(); }
  Index integrator_dim() const noexcept { return dim() - plant_dim(); }

  Vector forcing_for(const Vector& d) const {
    if (d.size() != plant_dim()) throw InvalidArgument("disturbance length does not match the plant");
    return disturbance_gain * d + reference_gain * reference_error;
  }
  Vector forcing() const { return forcing_for(disturbance); }

  std::optional<StateSlice> slice(std::string_view name) const {
    for (const auto& s : layout) {
      if (s.name == name) return s;
    }
    return std::nullopt;
  }

  /// Noise-free plant output C x + y0.
  Vector output_of(const Vector& X) const { return output_selector * X + plant.output_offset; }

  /// Control signal the controller emits at state X (it sees y + eta).
  Vector control_of(const Vector& X) const {
    const Vector measured = output_of(X) + plant.eta;
    const Vector z = integrator_dim() > 0 ? Vector(X.tail(integrator_dim())) : Vector();
    return control_output(controller, plant.r, measured, z);
  }
};

/// Assembles the closed loop of `sys` with `ctrl`.
///
/// PI kinds produce  F = [A - B Kp C, B Ki; -C, -gamma Lc]  with gamma Lc = 0
/// for DecPI. The plant's own sign conventions are kept as they are.
inline ClosedLoop close_loop(const LtiSystem& sys, const ControllerSpec& ctrl) {
  sys.validate();
  const Index n = sys.state_dim();
  const Index m = sys.io_dim();
  if (ctrl.size() != m) {
    throw InvalidArgument("controller has " + std::to_string(ctrl.size()) + " channels, plant has " +
                          std::to_string(m));
  }
  const Matrix BKp = sys.B * ctrl.kp().asDiagonal();
  const Matrix inner = sys.A - BKp * sys.C;
  const Index dim = ctrl.has_integrator() ? n + m : n;

  ClosedLoop cl{.system_matrix = Matrix::Zero(dim, dim),
                .disturbance_gain = Matrix::Zero(dim, n),
                .reference_gain = Matrix::Zero(dim, m),
                .output_selector = Matrix::Zero(m, dim),
                .disturbance = sys.d,
                .reference_error = sys.r - sys.output_offset - sys.eta,
                .layout = sys.layout,
                .plant = sys,
                .controller = ctrl};

  cl.system_matrix.topLeftCorner(n, n) = inner;
  cl.disturbance_gain.topRows(n).setIdentity();
  cl.reference_gain.topRows(n) = BKp;
  cl.output_selector.leftCols(n) = sys.C;
  if (ctrl.has_integrator()) {
    cl.system_matrix.topRightCorner(n, m) = sys.B * ctrl.ki().asDiagonal();
    cl.system_matrix.bottomLeftCorner(m, n) = -sys.C;
    cl.system_matrix.bottomRightCorner(m, m) = -ctrl.gamma() * ctrl.comm_laplacian();
    cl.reference_gain.bottomRows(m).setIdentity();
    cl.layout.push_back({"z", n, m});
  }
  return cl;
}

/// Minimum-norm state X with F X + Gd d + Gr (r - y0 - eta) = 0, if one
/// exists. For the DistPI swing loop the null space of F is the uniform angle
/// direction, so the minimum-norm solution has angles summing to zero.
inline std::optional<Vector> equilibrium(const ClosedLoop& cl, const std::optional<Vector>& disturbance = std::nullopt) {
  const Vector f = cl.forcing_for(disturbance.value_or(cl.disturbance));
  if (cl.dim() == 0) return Vector();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cl.system_matrix);
  const Vector x = cod.solve(-f);
  const double residual = (cl.system_matrix * x + f).norm();
  const double scale = cl.system_matrix.norm() * x.norm() + f.norm();
  // Near-singular F lets a large least-squares x pass a backward-error test
  // alone; an inconsistent system leaves a residual comparable to f.
  if (!x.allFinite() || residual > 1e-9 * std::max(scale, std::numeric_limits<double>::min()) ||
      residual > 1e-6 * f.norm()) {
    return std::nullopt;
  }
  return x;
}

struct SimulationTrace {
  std::vector<double> times;  ///< [s]
  Matrix states;              ///< sample x state (closed-loop coordinates)
  Matrix outputs;             ///< sample x m, noise-free C x + y0
  Matrix controls;            ///< sample x m
  bool diverged = false;

  std::size_t samples() const noexcept { return times.size(); }
};

/// Piecewise-constant disturbance: from `time` on, d = `disturbance`.
struct DisturbanceSwitch {
  double time = 0.0;
  Vector disturbance;
};

struct SimulationOptions {
  std::size_t stride = 1;
  std::optional<Vector> initial_state;  ///< default: equilibrium(cl), or zero if none exists
  std::vector<DisturbanceSwitch> schedule;
  double divergence_threshold = 1e12;
};

/// Integrates the closed loop with RK4 and reconstructs outputs and control
/// signals at every sample. The integrator restarts at each disturbance
/// switch so no step straddles a discontinuity.
inline SimulationTrace simulate(const ClosedLoop& cl, double t_end, double h, const SimulationOptions& options = {}) {
  if (!(h > 0.0)) throw InvalidArgument("simulate: step must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("simulate: horizon must be non-negative");
  double last = 0.0;
  for (const auto& sw : options.schedule) {
    if (!std::isfinite(sw.time) || sw.time < 0.0) throw InvalidArgument("simulate: switch times must be non-negative");
    if (sw.time < last) throw InvalidArgument("simulate: switch times must be non-decreasing");
    if (sw.disturbance.size() != cl.plant_dim()) throw InvalidArgument("simulate: switch disturbance has wrong length");
    last = sw.time;
  }

  Vector x;
  if (options.initial_state) {
    x = *options.initial_state;
    if (x.size() != cl.dim()) throw InvalidArgument("simulate: initial state has wrong length");
  } else {
    x = equilibrium(cl).value_or(Vector::Zero(cl.dim()));
  }

  Vector d = cl.disturbance;
  std::size_t next = 0;
  auto apply_switches_at = [&](double t) {
    while (next < options.schedule.size() && options.schedule[next].time <= t) {
      d = options.schedule[next].disturbance;
      ++next;
    }
  };
  apply_switches_at(0.0);

  std::vector<double> times;
  std::vector<Matrix> chunks;
  bool diverged = false;
  double t0 = 0.0;
  bool first = true;
  while (true) {
    double t1 = t_end;
    if (next < options.schedule.size()) t1 = std::min(t_end, options.schedule[next].time);
    const AffineOde ode{cl.system_matrix, cl.forcing_for(d), x};
    StateTrace seg = integrate_rk4(ode, t1 - t0, h, {options.stride, options.divergence_threshold});
    const Index skip = first ? 0 : 1;
    for (std::size_t k = static_cast<std::size_t>(skip); k < seg.samples(); ++k) times.push_back(t0 + seg.times[k]);
    chunks.push_back(seg.states.bottomRows(seg.states.rows() - skip));
    x = seg.final_state();
    first = false;
    if (seg.diverged) {
      diverged = true;
      break;
    }
    if (t1 >= t_end) break;
    t0 = t1;
    apply_switches_at(t0);
  }

  SimulationTrace trace;
  trace.times = std::move(times);
  trace.diverged = diverged;
  const auto rows = static_cast<Index>(trace.times.size());
  trace.states.resize(rows, cl.dim());
  Index row = 0;
  for (const auto& c : chunks) {
    trace.states.middleRows(row, c.rows()) = c;
    row += c.rows();
  }
  const Index m = cl.plant.io_dim();
  trace.outputs.resize(rows, m);
  trace.controls.resize(rows, m);
  for (Index k = 0; k < rows; ++k) {
    const Vector X = trace.states.row(k).transpose();
    trace.outputs.row(k) = cl.output_of(X).transpose();
    trace.controls.row(k) = cl.control_of(X).transpose();
  }
  return trace;
}

}  // namespace dapi
