#pragma once

// Executable stability and steady-state results for PI-controlled networks:
//
//  * xi_rank_test           necessary condition for decentralized PI to remove
//                           static errors under arbitrary constant d and eta
//  * output_stability_check observable modes stable (PBH on marginal modes)
//  * gamma_bar              sufficient averaging-gain bound from the
//                           Routh-Hurwitz coefficient bounds of the swing loop
//  * predict_steady_state   stationary frequency, inputs and integrator states
//                           of the swing network under DistPI

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dapi/control.hpp"
#include "dapi/errors.hpp"
#include "dapi/graph.hpp"
#include "dapi/numerics.hpp"
#include "dapi/sysmodel.hpp"
#include "dapi/types.hpp"

namespace dapi {

// ---------------------------------------------------------------------------
// Rank test
// ---------------------------------------------------------------------------

struct XiRankResult {
  Index rank = 0;
  Index size = 0;  ///< n + m
  bool full_rank = false;
  Index deficiency = 0;
};

/// Xi = [A, B Ki; C, 0]. If Xi is rank deficient, the decentralized PI loop
/// has no equilibrium for some constant measurement error eta.
inline Matrix xi_matrix(const LtiSystem& sys, const Vector& ki) {
  sys.validate();
  const Index n = sys.state_dim();
  const Index m = sys.io_dim();
  if (ki.size() != m) throw InvalidArgument("xi_matrix: Ki length must equal the number of outputs");
  Matrix xi = Matrix::Zero(n + m, n + m);
  xi.topLeftCorner(n, n) = sys.A;
  xi.topRightCorner(n, m) = sys.B * ki.asDiagonal();
  xi.bottomLeftCorner(m, n) = sys.C;
  return xi;
}

inline XiRankResult xi_rank_test(const LtiSystem& sys, const Vector& ki, double rel_tol = 1e-10) {
  const Matrix xi = xi_matrix(sys, ki);
  XiRankResult out;
  out.size = xi.rows();
  out.rank = numerical_rank(xi, rel_tol);
  out.deficiency = out.size - out.rank;
  out.full_rank = out.deficiency == 0;
  return out;
}

// ---------------------------------------------------------------------------
// Output stability
// ---------------------------------------------------------------------------

struct ZeroMode {
  Complex eigenvalue;
  ComplexVector eigenvector;
  bool observable = false;
};

struct StabilityReport {
  Spectrum eigenvalues;
  std::vector<ZeroMode> zero_modes;
  bool output_stable = false;
  /// Largest real part among eigenvalues that are not zero modes (-inf if none).
  double max_real_part_excluding_zero_modes = -std::numeric_limits<double>::infinity();
  /// Eigenvalues that could not be certified to lie in the open left half-plane.
  std::size_t marginal_modes = 0;
};

namespace detail {

inline double resolved_error(const Spectrum& s, std::size_t k) {
  const double e = s.error_bound(k);
  if (std::isfinite(e)) return e;
  return std::sqrt(std::numeric_limits<double>::epsilon()) * s.balanced_norm;
}

}  // namespace detail

/// Classifies the modes of the closed-loop matrix.
///
/// An eigenvalue is marginal when its real part is not below minus its own
/// accuracy estimate (Spectrum::error_bound), and a zero mode when its
/// modulus is within that estimate. Marginal eigenvalues are grouped into
/// clusters; a cluster of algebraic multiplicity a passes when every
/// eigenvector v satisfies |C v| <= pbh_tol |v| and the PBH matrix
/// [F - lambda I; C] has at least a singular values at the cluster's
/// accuracy level, i.e. the whole generalized eigenspace is unobservable.
inline StabilityReport output_stability_check(const ClosedLoop& cl, double pbh_tol = 1e-8) {
  StabilityReport report;
  report.eigenvalues = eigen(cl.system_matrix);
  const Spectrum& spec = report.eigenvalues;
  const std::size_t N = spec.size();
  const ComplexMatrix Cout = cl.output_selector.cast<Complex>();

  std::vector<double> err(N);
  std::vector<std::size_t> marginal;
  for (std::size_t k = 0; k < N; ++k) {
    err[k] = detail::resolved_error(spec, k);
    const Complex lambda = spec.eigenvalues[k];
    const bool is_zero = std::abs(lambda) <= err[k];
    if (is_zero) {
      const ComplexVector v = spec.right_eigenvectors.col(static_cast<Index>(k));
      report.zero_modes.push_back({lambda, v, (Cout * v).norm() > pbh_tol * v.norm()});
    } else {
      report.max_real_part_excluding_zero_modes = std::max(report.max_real_part_excluding_zero_modes, lambda.real());
    }
    if (lambda.real() >= -err[k]) marginal.push_back(k);
  }
  report.marginal_modes = marginal.size();

  // Group marginal eigenvalues whose accuracy discs overlap.
  std::vector<std::size_t> cluster(marginal.size());
  std::iota(cluster.begin(), cluster.end(), 0);
  auto find = [&](std::size_t i) {
    while (cluster[i] != i) i = cluster[i] = cluster[cluster[i]];
    return i;
  };
  for (std::size_t a = 0; a < marginal.size(); ++a) {
    for (std::size_t b = a + 1; b < marginal.size(); ++b) {
      const std::size_t i = marginal[a];
      const std::size_t j = marginal[b];
      if (std::abs(spec.eigenvalues[i] - spec.eigenvalues[j]) <= err[i] + err[j]) cluster[find(a)] = find(b);
    }
  }

  bool stable = true;
  const double floor_tol = 64.0 * std::numeric_limits<double>::epsilon() *
                           std::max(cl.system_matrix.norm() + cl.output_selector.norm(), 1.0);
  for (std::size_t root = 0; root < marginal.size() && stable; ++root) {
    if (find(root) != root) continue;
    std::vector<std::size_t> members;
    for (std::size_t a = 0; a < marginal.size(); ++a) {
      if (find(a) == root) members.push_back(marginal[a]);
    }
    Complex center = 0.0;
    double worst = 0.0;
    for (std::size_t k : members) {
      center += spec.eigenvalues[k];
      worst = std::max(worst, err[k]);
      const ComplexVector v = spec.right_eigenvectors.col(static_cast<Index>(k));
      if ((Cout * v).norm() > pbh_tol * v.norm()) stable = false;
    }
    if (!stable) break;
    center /= static_cast<double>(members.size());

    const Index n = cl.dim();
    const Index m = cl.output_selector.rows();
    ComplexMatrix pbh(n + m, n);
    pbh.topRows(n) = cl.system_matrix.cast<Complex>();
    pbh.topRows(n).diagonal().array() -= center;
    pbh.bottomRows(m) = Cout;
    Eigen::JacobiSVD<ComplexMatrix> svd(pbh);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double tol = std::max(10.0 * worst, floor_tol);
    const auto unobservable = static_cast<std::size_t>((sigma.array() <= tol).count());
    if (unobservable < members.size()) stable = false;
  }
  report.output_stable = stable;
  return report;
}

// ---------------------------------------------------------------------------
// Averaging-gain bound for the swing network
// ---------------------------------------------------------------------------

struct BoundCoefficients {
  double a1_lower = 0.0;
  double a2_lower = 0.0;
  double a1a2_lower = 0.0;
  double a0a3_upper = 0.0;
};

/// Lower bounds on a1, a2 and upper bound on a0 a3 of the cubic
/// a3 s^3 + a2 s^2 + a1 s + a0 = x^T Q(s) x, as affine functions of gamma:
///
///   a1_lower   = gamma lmin(sym((D+Kp) Lc)) + min Ki
///   a2_lower   = gamma lmin(sym(diag(m) Lc)) + min (d + Kp)
///   a0a3_upper = gamma max(m) lmax(sym(Lk Lc))
///
/// gamma_bar is the first gamma > 0 where one of the three conditions fails.
struct GammaBound {
  double gamma_bar = 0.0;
  BoundCoefficients coefficient_bounds;  ///< evaluated at gamma_bar
  double a1_slope = 0.0;
  double a1_intercept = 0.0;
  double a2_slope = 0.0;
  double a2_intercept = 0.0;
  double a0a3_slope = 0.0;

  BoundCoefficients evaluate(double gamma) const {
    BoundCoefficients c;
    c.a1_lower = a1_slope * gamma + a1_intercept;
    c.a2_lower = a2_slope * gamma + a2_intercept;
    c.a1a2_lower = c.a1_lower * c.a2_lower;
    c.a0a3_upper = a0a3_slope * gamma;
    return c;
  }

  bool holds_at(double gamma) const {
    const auto c = evaluate(gamma);
    return c.a1_lower > 0.0 && c.a2_lower > 0.0 && c.a0a3_upper < c.a1a2_lower;
  }
};

namespace detail {

/// Smallest strictly positive real root of a x^2 + b x + c (c > 0), or +inf.
inline double smallest_positive_root(double a, double b, double c) {
  const double inf = std::numeric_limits<double>::infinity();
  if (a == 0.0) return b < 0.0 ? -c / b : inf;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return inf;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double best = inf;
  for (double root : {q / a, q != 0.0 ? c / q : inf}) {
    if (root > 0.0 && std::isfinite(root)) best = std::min(best, root);
  }
  return best;
}

inline void require_swing_distpi(const PowerNetwork& net, const ControllerSpec& ctrl, const char* what) {
  if (ctrl.kind() != ControllerKind::DistributedPI) throw InvalidArgument(std::string(what) + ": controller must be DistPI");
  if (ctrl.size() != net.size()) throw InvalidArgument(std::string(what) + ": controller size does not match the network");
}

}  // namespace detail

/// Computes gamma_bar analytically (smallest positive root of the three
/// scalar conditions) and re-checks the conditions on a 100-point grid in
/// (0, gamma_bar). Throws PreconditionError when x^T Lk Lc x >= 0 fails.
inline GammaBound gamma_bar(const PowerNetwork& net, const ControllerSpec& ctrl) {
  net.validate();
  detail::require_swing_distpi(net, ctrl, "gamma_bar");
  const Matrix Lk = laplacian(net.coupling_graph());
  const Matrix& Lc = ctrl.comm_laplacian();
  const Vector inertia = net.inertia();
  const Vector dkp = net.damping() + ctrl.kp();

  const Vector prod = symmetric_eigenvalues(symmetrized(Lk * Lc));
  const double prod_max = prod(prod.size() - 1);
  if (prod(0) < -1e-9 * std::max(std::abs(prod_max), std::numeric_limits<double>::min())) {
    throw PreconditionError(
        "x^T Lk Lc x >= 0 does not hold (smallest eigenvalue of the symmetrized product is " + std::to_string(prod(0)) +
        "); use a communication Laplacian proportional to the grid Laplacian");
  }

  GammaBound gb;
  gb.a1_slope = symmetric_eigenvalues(symmetrized(dkp.asDiagonal() * Lc))(0);
  gb.a1_intercept = ctrl.ki().minCoeff();
  gb.a2_slope = symmetric_eigenvalues(symmetrized(inertia.asDiagonal() * Lc))(0);
  gb.a2_intercept = dkp.minCoeff();
  gb.a0a3_slope = inertia.maxCoeff() * std::max(prod_max, 0.0);

  const double inf = std::numeric_limits<double>::infinity();
  double bar = inf;
  if (gb.a1_slope < 0.0) bar = std::min(bar, -gb.a1_intercept / gb.a1_slope);
  if (gb.a2_slope < 0.0) bar = std::min(bar, -gb.a2_intercept / gb.a2_slope);
  // (a1s g + a1i)(a2s g + a2i) - c g = 0
  bar = std::min(bar, detail::smallest_positive_root(gb.a1_slope * gb.a2_slope,
                                                     gb.a1_slope * gb.a2_intercept + gb.a2_slope * gb.a1_intercept -
                                                         gb.a0a3_slope,
                                                     gb.a1_intercept * gb.a2_intercept));
  gb.gamma_bar = bar;
  if (std::isfinite(bar)) {
    gb.coefficient_bounds = gb.evaluate(bar);
    for (int k = 1; k <= 100; ++k) {
      const double g = bar * static_cast<double>(k) / 101.0;
      if (!gb.holds_at(g)) throw InternalError("gamma_bar: bound conditions fail inside (0, gamma_bar)");
    }
  } else {
    gb.coefficient_bounds = gb.evaluate(0.0);
  }
  return gb;
}

/// Closed loop of the swing network under `ctrl`.
inline ClosedLoop swing_closed_loop(const PowerNetwork& net, const ControllerSpec& ctrl) {
  return close_loop(swing_to_lti(net), ctrl);
}

struct SpectralGammaResult {
  double gamma_star = 0.0;  ///< largest gamma found output-stable
  bool bounded = false;     ///< false if stability persisted up to the search cap
};

/// Searches upward from `start` by doubling, then bisects, for the first
/// averaging gain at which the swing loop stops being output stable. The
/// result is only as meaningful as the monotonicity of stability in gamma;
/// it is reported next to gamma_bar to expose the bound's conservatism.
inline SpectralGammaResult spectral_gamma_search(const PowerNetwork& net, const ControllerSpec& ctrl, double start,
                                                 double max_factor = 1e12, double rel_tol = 1e-4) {
  detail::require_swing_distpi(net, ctrl, "spectral_gamma_search");
  if (!(start > 0.0) || !std::isfinite(start)) throw InvalidArgument("spectral_gamma_search: start must be positive");
  const LtiSystem sys = swing_to_lti(net);
  auto stable = [&](double g) { return output_stability_check(close_loop(sys, ctrl.with_gamma(g))).output_stable; };

  SpectralGammaResult out;
  if (!stable(start)) {
    out.gamma_star = 0.0;
    out.bounded = true;
    double lo = 0.0;
    double hi = start;
    while ((hi - lo) > rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      (stable(mid) ? lo : hi) = mid;
    }
    out.gamma_star = lo;
    return out;
  }
  double lo = start;
  double hi = start * 2.0;
  while (stable(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > start * max_factor) {
      out.gamma_star = lo;
      out.bounded = false;
      return out;
    }
  }
  while ((hi - lo) > rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    (stable(mid) ? lo : hi) = mid;
  }
  out.gamma_star = lo;
  out.bounded = true;
  return out;
}

// ---------------------------------------------------------------------------
// Steady state of the swing network under DistPI
// ---------------------------------------------------------------------------

struct SteadyStatePrediction {
  double omega_hat = 0.0;  ///< common stationary frequency [rad/s]
  Vector u_stationary;     ///< stationary inputs [W]
  double k = 0.0;          ///< consensus value of the integrator states
  Vector z_stationary;     ///< stationary integrator states
  Vector angles;           ///< stationary angle differences, pinned to zero mean
};

/// Stationary point of the DistPI swing loop for constant noise `eta` [rad/s].
///
/// omega_hat = omega_ref - mean(eta). The integrator states split as
/// z = z_p + k 1 with gamma Lc z_p = mean(eta) 1 - eta and 1^T z_p = 0, and
/// (angles, k) solve [Lk, -Ki 1; 1^T, 0] [delta; k] = [p^m - D omega_hat 1 +
/// Kp e + Ki z_p; 0] with e = mean(eta) 1 - eta. With eta = 0 this gives
/// u = k Ki 1. With eta != 0 the angles drift uniformly at omega_hat -
/// omega_ref; `angles` then holds their (stationary) differences.
inline SteadyStatePrediction predict_steady_state(const PowerNetwork& net, const ControllerSpec& ctrl,
                                                  const Vector& eta) {
  net.validate();
  detail::require_swing_distpi(net, ctrl, "predict_steady_state");
  const Index n = net.size();
  if (eta.size() != n) throw InvalidArgument("predict_steady_state: noise vector has wrong length");

  SteadyStatePrediction out;
  const double mean_eta = eta.mean();
  out.omega_hat = net.omega_ref - mean_eta;
  const Vector e = Vector::Constant(n, mean_eta) - eta;

  Vector zp = Vector::Zero(n);
  if (e.cwiseAbs().maxCoeff() > 0.0) {
    if (ctrl.gamma() == 0.0) {
      throw PreconditionError("predict_steady_state: nonuniform noise has no stationary point without averaging");
    }
    Matrix K = Matrix::Zero(n + 1, n + 1);
    K.topLeftCorner(n, n) = ctrl.gamma() * ctrl.comm_laplacian();
    K.topRightCorner(n, 1).setOnes();
    K.bottomLeftCorner(1, n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs.head(n) = e;
    const Vector sol = K.fullPivLu().solve(rhs);
    zp = sol.head(n);
  }

  const Matrix Lk = laplacian(net.coupling_graph());
  Matrix S = Matrix::Zero(n + 1, n + 1);
  S.topLeftCorner(n, n) = Lk;
  S.topRightCorner(n, 1) = -ctrl.ki();
  S.bottomLeftCorner(1, n).setOnes();
  Vector rhs = Vector::Zero(n + 1);
  rhs.head(n) = net.injections() - net.damping() * out.omega_hat + ctrl.kp().cwiseProduct(e) + ctrl.ki().cwiseProduct(zp);
  Eigen::FullPivLU<Matrix> lu(S);
  if (!lu.isInvertible()) throw InternalError("predict_steady_state: stationarity system is singular");
  const Vector sol = lu.solve(rhs);
  const double residual = (S * sol - rhs).norm();
  if (!(residual <= 1e-8 * (S.norm() * sol.norm() + rhs.norm()))) {
    throw InternalError("predict_steady_state: stationarity solve is inaccurate");
  }

  out.angles = sol.head(n);
  out.k = sol(n);
  out.z_stationary = zp + Vector::Constant(n, out.k);
  out.u_stationary = ctrl.kp().cwiseProduct(e) + ctrl.ki().cwiseProduct(out.z_stationary);
  return out;
}

// ---------------------------------------------------------------------------
// Routh-Hurwitz view of the characteristic equation
// ---------------------------------------------------------------------------

/// a3 s^3 + a2 s^2 + a1 s + a0.
struct Cubic {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

/// True iff every root lies in the open left half-plane.
inline bool routh_hurwitz_stable(const Cubic& c) {
  return c.a3 > 0.0 && c.a2 > 0.0 && c.a1 > 0.0 && c.a0 > 0.0 && c.a0 * c.a3 < c.a1 * c.a2;
}

inline std::vector<Complex> roots(const Cubic& c) {
  const double coeffs[] = {c.a0, c.a1, c.a2, c.a3};
  return polynomial_roots(coeffs);
}

/// Scalar cubic x^T Q(s) x of the DistPI swing loop, where
///   Q(s) = s^3 diag(m) + s^2 ((D+Kp) + gamma diag(m) Lc)
///        + s (gamma (D+Kp) Lc + Ki + Lk) + gamma Lk Lc.
class CharacteristicForm {
 public:
  CharacteristicForm(const PowerNetwork& net, const ControllerSpec& ctrl, double gamma) {
    net.validate();
    detail::require_swing_distpi(net, ctrl, "CharacteristicForm");
    const Matrix Lk = laplacian(net.coupling_graph());
    const Matrix& Lc = ctrl.comm_laplacian();
    const Vector inertia = net.inertia();
    const Vector dkp = net.damping() + ctrl.kp();
    q0_ = symmetrized(gamma * Lk * Lc);
    q1_ = symmetrized(gamma * dkp.asDiagonal() * Lc) + Matrix(ctrl.ki().asDiagonal()) + Lk;
    q2_ = symmetrized(gamma * inertia.asDiagonal() * Lc) + Matrix(dkp.asDiagonal());
    q3_ = inertia.asDiagonal();
  }

  Cubic at(const Vector& x) const {
    return {x.dot(q0_ * x), x.dot(q1_ * x), x.dot(q2_ * x), x.dot(q3_ * x)};
  }

 private:
  Matrix q0_, q1_, q2_, q3_;
};

}  // namespace dapi
