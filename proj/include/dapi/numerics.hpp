#pragma once

// Dense numerical kernels shared by the model and analysis layers:
// non-symmetric eigen-decomposition with per-eigenvalue error estimates,
// numerical rank, a fixed-step RK4 integrator for affine ODEs and a matrix
// exponential used as an independent reference solution.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "dapi/errors.hpp"
#include "dapi/types.hpp"

namespace dapi {

/// Eigenvalues and unit-norm right eigenvectors of a real square matrix.
///
/// Eigenvalues are sorted by real part (descending), ties by imaginary part
/// (descending). `condition[k]` is the eigenvalue condition number
/// |x_k| |y_k| / |y_k^H x_k| measured on the balanced matrix (infinite for a
/// numerically defective matrix), and `balanced_norm` the Frobenius norm of
/// that balanced matrix. Together they give the first-order accuracy of each
/// computed eigenvalue, see error_bound().
struct Spectrum {
  std::vector<Complex> eigenvalues;
  ComplexMatrix right_eigenvectors;
  std::vector<double> condition;
  double balanced_norm = 0.0;

  std::size_t size() const noexcept { return eigenvalues.size(); }

  /// Absolute accuracy estimate of eigenvalue k.
  double error_bound(std::size_t k) const {
    constexpr double kSafety = 64.0;
    return kSafety * std::numeric_limits<double>::epsilon() * balanced_norm * condition[k];
  }
};

namespace detail {

inline void require_finite_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols()) throw InvalidArgument(std::string(what) + ": matrix must be square");
  if (!A.allFinite()) throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
}

/// Diagonal similarity scaling by powers of two (Parlett-Reinsch). Returns
/// the scaling vector s such that diag(s)^-1 * A * diag(s) is balanced.
inline Vector balance_in_place(Matrix& A) {
  constexpr double kRadix = 2.0;
  constexpr double kRadixSq = kRadix * kRadix;
  const Index n = A.rows();
  Vector scale = Vector::Ones(n);
  bool done = false;
  while (!done) {
    done = true;
    for (Index i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(A(j, i));
        r += std::abs(A(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / kRadix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= kRadix;
        c *= kRadixSq;
      }
      g = r * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kRadixSq;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        scale(i) *= f;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
  return scale;
}

/// Ruiz equilibration: alternately scales rows and columns to unit max-norm.
/// Zero rows and columns are left alone. Rank is invariant under the scaling.
inline Matrix equilibrated(const Matrix& A) {
  Matrix B = A;
  for (int sweep = 0; sweep < 40; ++sweep) {
    double worst = 0.0;
    for (Index i = 0; i < B.rows(); ++i) {
      const double m = B.row(i).cwiseAbs().maxCoeff();
      if (m > 0.0) {
        B.row(i) /= std::sqrt(m);
        worst = std::max(worst, std::abs(1.0 - m));
      }
    }
    for (Index j = 0; j < B.cols(); ++j) {
      const double m = B.col(j).cwiseAbs().maxCoeff();
      if (m > 0.0) {
        B.col(j) /= std::sqrt(m);
        worst = std::max(worst, std::abs(1.0 - m));
      }
    }
    if (worst < 1e-3) break;
  }
  return B;
}

}  // namespace detail

/// Eigen-decomposition of a general real square matrix.
///
/// The matrix is balanced, reduced to real Schur form by Eigen's
/// Hessenberg/shifted-QR solver, and the eigenvectors are mapped back and
/// normalised. Throws ConvergenceError if the QR iteration hits its cap.
inline Spectrum eigen(const Matrix& A) {
  detail::require_finite_square(A, "eigen");
  Spectrum out;
  const Index n = A.rows();
  if (n == 0) return out;

  Matrix balanced = A;
  const Vector scale = detail::balance_in_place(balanced);

  Eigen::EigenSolver<Matrix> solver(balanced, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eigen: QR iteration did not converge for " + std::to_string(n) + "x" +
                           std::to_string(n) + " matrix");
  }
  const ComplexVector values = solver.eigenvalues();
  ComplexMatrix vectors = solver.eigenvectors();

  std::vector<double> condition(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::FullPivLU<ComplexMatrix> lu(vectors);
  if (lu.isInvertible()) {
    const ComplexMatrix left = lu.inverse();
    for (Index k = 0; k < n; ++k) {
      condition[static_cast<std::size_t>(k)] = vectors.col(k).norm() * left.row(k).norm();
    }
  }

  for (Index k = 0; k < n; ++k) {
    vectors.col(k) = scale.cast<Complex>().asDiagonal() * vectors.col(k);
    const double norm = vectors.col(k).norm();
    if (norm > 0.0) vectors.col(k) /= norm;
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (values(a).real() != values(b).real()) return values(a).real() > values(b).real();
    return values(a).imag() > values(b).imag();
  });

  out.eigenvalues.reserve(static_cast<std::size_t>(n));
  out.condition.reserve(static_cast<std::size_t>(n));
  out.right_eigenvectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues.push_back(values(src));
    out.condition.push_back(condition[static_cast<std::size_t>(src)]);
    out.right_eigenvectors.col(k) = vectors.col(src);
  }
  out.balanced_norm = balanced.norm();
  return out;
}

/// Eigenvalues of a symmetric matrix, ascending. Only the lower triangle is read.
inline Vector symmetric_eigenvalues(const Matrix& S) {
  detail::require_finite_square(S, "symmetric_eigenvalues");
  if (S.rows() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("symmetric_eigenvalues did not converge");
  return solver.eigenvalues();
}

/// 1/2 (A + A^T).
inline Matrix symmetrized(const Matrix& A) { return 0.5 * (A + A.transpose()); }

/// Number of singular values above rel_tol * sigma_max, computed on a
/// row/column-equilibrated copy so that the count does not depend on the
/// units of individual rows or columns. Zero for a zero (or empty) matrix.
inline Index numerical_rank(const Matrix& A, double rel_tol = 1e-10) {
  if (!A.allFinite()) throw InvalidArgument("numerical_rank: matrix has non-finite entries");
  if (A.size() == 0) return 0;
  const Matrix B = detail::equilibrated(A);
  Eigen::JacobiSVD<Matrix> svd(B);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  const double threshold = rel_tol * sigma(0);
  return static_cast<Index>((sigma.array() > threshold).count());
}

/// Roots of a0 + a1 s + ... + an s^n, coefficients given lowest degree first,
/// as eigenvalues of the companion matrix. Leading coefficient must be nonzero.
inline std::vector<Complex> polynomial_roots(std::span<const double> coefficients) {
  if (coefficients.size() < 2) return {};
  const double lead = coefficients.back();
  if (lead == 0.0 || !std::isfinite(lead)) throw InvalidArgument("polynomial_roots: leading coefficient must be nonzero");
  const auto degree = static_cast<Index>(coefficients.size() - 1);
  Matrix companion = Matrix::Zero(degree, degree);
  for (Index i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (Index i = 0; i < degree; ++i) companion(i, degree - 1) = -coefficients[static_cast<std::size_t>(i)] / lead;
  return eigen(companion).eigenvalues;
}

/// dx/dt = M x + b, x(0) = x0.
struct AffineOde {
  Matrix M;
  Vector b;
  Vector x0;

  void validate() const {
    if (M.rows() != M.cols()) throw InvalidArgument("AffineOde: system matrix must be square");
    if (b.size() != M.rows() || x0.size() != M.rows()) {
      throw InvalidArgument("AffineOde: forcing and initial state must match the system dimension");
    }
  }
};

/// Sampled state trajectory. Row k of `states` is the state at `times[k]`.
struct StateTrace {
  std::vector<double> times;
  Matrix states;
  bool diverged = false;

  std::size_t samples() const noexcept { return times.size(); }
  Vector final_state() const { return states.row(states.rows() - 1).transpose(); }
};

struct Rk4Options {
  /// Record every `stride`-th step; the initial and final states are always recorded.
  std::size_t stride = 1;
  /// Any state component above this magnitude (or non-finite) stops the run.
  double divergence_threshold = 1e12;
};

/// Classical fixed-step fourth-order Runge-Kutta on an affine ODE.
///
/// Step k ends at min(k h, t_end), so the last step is shortened when h does
/// not divide t_end and the final sample sits exactly at t_end. On divergence
/// the trace ends at the last admissible state and `diverged` is set.
inline StateTrace integrate_rk4(const AffineOde& ode, double t_end, double h, const Rk4Options& options = {}) {
  ode.validate();
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("integrate_rk4: step must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("integrate_rk4: t_end must be non-negative");
  const std::size_t stride = std::max<std::size_t>(options.stride, 1);

  std::size_t steps = 0;
  if (t_end > 0.0) {
    steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
    steps = std::max<std::size_t>(steps, 1);
  }
  const std::size_t capacity = 1 + steps / stride + 1;

  const Index dim = ode.M.rows();
  StateTrace trace;
  trace.times.reserve(capacity);
  trace.states.resize(static_cast<Index>(capacity), dim);

  Vector x = ode.x0;
  Index row = 0;
  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.states.row(row++) = x.transpose();
  };
  record(0.0);

  Vector k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  double t_prev = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = (k == steps) ? t_end : std::min(static_cast<double>(k) * h, t_end);
    const double dt = t - t_prev;
    k1.noalias() = ode.M * x;
    k1 += ode.b;
    tmp = x + 0.5 * dt * k1;
    k2.noalias() = ode.M * tmp;
    k2 += ode.b;
    tmp = x + 0.5 * dt * k2;
    k3.noalias() = ode.M * tmp;
    k3 += ode.b;
    tmp = x + dt * k3;
    k4.noalias() = ode.M * tmp;
    k4 += ode.b;
    tmp = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!tmp.allFinite() || tmp.cwiseAbs().maxCoeff() > options.divergence_threshold) {
      trace.diverged = true;
      if (trace.times.back() != t_prev) record(t_prev);
      break;
    }
    x = tmp;
    t_prev = t;
    if (k % stride == 0 || k == steps) record(t);
  }
  trace.states.conservativeResize(row, dim);
  return trace;
}

/// exp(M t) by Pade scaling and squaring. Used as an independent reference
/// for the integrator.
inline Matrix expm_reference(const Matrix& M, double t) {
  detail::require_finite_square(M, "expm_reference");
  if (!std::isfinite(t)) throw InvalidArgument("expm_reference: t must be finite");
  const Matrix scaled = M * t;
  return scaled.exp();
}

}  // namespace dapi
