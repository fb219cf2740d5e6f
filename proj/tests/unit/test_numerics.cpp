#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "dapi/numerics.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

dapi::Matrix random_matrix(std::mt19937_64& rng, dapi::Index n) {
  std::normal_distribution<double> normal;
  dapi::Matrix A(n, n);
  for (dapi::Index i = 0; i < n; ++i)
    for (dapi::Index j = 0; j < n; ++j) A(i, j) = normal(rng);
  return A;
}

void require_spectrum_contract(const dapi::Matrix& A, const dapi::Spectrum& s) {
  REQUIRE(s.size() == static_cast<std::size_t>(A.rows()));
  const dapi::ComplexMatrix Ac = A.cast<dapi::Complex>();
  for (std::size_t k = 0; k < s.size(); ++k) {
    const dapi::ComplexVector v = s.right_eigenvectors.col(static_cast<dapi::Index>(k));
    REQUIRE_THAT(v.norm(), WithinAbs(1.0, 1e-12));
    REQUIRE((Ac * v - s.eigenvalues[k] * v).norm() <= 1e-8 * std::max(A.norm(), 1.0));
    if (k > 0) {
      const auto prev = s.eigenvalues[k - 1];
      const auto cur = s.eigenvalues[k];
      REQUIRE((prev.real() > cur.real() || (prev.real() == cur.real() && prev.imag() >= cur.imag())));
    }
  }
}

}  // namespace

TEST_CASE("eigen of the 3x3 identity", "[numerics]") {
  const auto s = dapi::eigen(dapi::Matrix::Identity(3, 3));
  for (const auto& l : s.eigenvalues) CHECK(std::abs(l - dapi::Complex(1.0, 0.0)) < 1e-14);
}

TEST_CASE("eigen of a companion matrix with roots -1 and -2", "[numerics]") {
  dapi::Matrix A(2, 2);
  A << 0, 1, -2, -3;
  const auto s = dapi::eigen(A);
  require_spectrum_contract(A, s);
  CHECK(std::abs(s.eigenvalues[0] - dapi::Complex(-1.0, 0.0)) < 1e-12);
  CHECK(std::abs(s.eigenvalues[1] - dapi::Complex(-2.0, 0.0)) < 1e-12);
}

TEST_CASE("eigen of the unit 3-path Laplacian", "[numerics]") {
  dapi::Matrix L(3, 3);
  L << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  const auto s = dapi::eigen(L);
  CHECK(std::abs(s.eigenvalues[0] - 3.0) < 1e-12);
  CHECK(std::abs(s.eigenvalues[1] - 1.0) < 1e-12);
  CHECK(std::abs(s.eigenvalues[2]) < 1e-12);
}

TEST_CASE("eigen returns conjugate pairs for a rotation", "[numerics]") {
  dapi::Matrix A(2, 2);
  A << 0, -2, 2, 0;
  const auto s = dapi::eigen(A);
  require_spectrum_contract(A, s);
  CHECK(std::abs(s.eigenvalues[0] - dapi::Complex(0.0, 2.0)) < 1e-12);
  CHECK(std::abs(s.eigenvalues[1] - dapi::Complex(0.0, -2.0)) < 1e-12);
}

TEST_CASE("eigen rejects non-square and non-finite input", "[numerics]") {
  CHECK_THROWS_AS(dapi::eigen(dapi::Matrix::Zero(2, 3)), dapi::InvalidArgument);
  dapi::Matrix A = dapi::Matrix::Zero(2, 2);
  A(0, 1) = std::nan("");
  CHECK_THROWS_AS(dapi::eigen(A), dapi::InvalidArgument);
  CHECK(dapi::eigen(dapi::Matrix(0, 0)).size() == 0);
}

TEST_CASE("a Jordan block has an infinite condition estimate", "[numerics]") {
  dapi::Matrix J(2, 2);
  J << 0, 1, 0, 0;
  const auto s = dapi::eigen(J);
  CHECK(std::abs(s.eigenvalues[0]) < 1e-12);
  CHECK(std::isinf(s.error_bound(0)));
}

TEST_CASE("eigen properties on random matrices", "[numerics][property]") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(2, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const dapi::Index n = dim(rng);
    const dapi::Matrix A = random_matrix(rng, n);
    INFO("trial " << trial);
    const auto s = dapi::eigen(A);
    require_spectrum_contract(A, s);

    dapi::Complex sum = 0.0, prod = 1.0;
    for (const auto& l : s.eigenvalues) {
      sum += l;
      prod *= l;
    }
    const double tr = A.trace();
    const double det = A.determinant();
    REQUIRE(std::abs(sum - tr) <= 1e-6 * std::max(1.0, std::abs(tr)));
    REQUIRE(std::abs(prod - det) <= 1e-6 * std::max(1.0, std::abs(det)));
    REQUIRE(std::abs(sum.imag()) <= 1e-10);

    // Similarity by a random orthogonal matrix.
    const dapi::Matrix Q = Eigen::HouseholderQR<dapi::Matrix>(random_matrix(rng, n)).householderQ();
    const auto t = dapi::eigen(Q * A * Q.transpose());
    for (const auto& l : s.eigenvalues) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& m : t.eigenvalues) best = std::min(best, std::abs(l - m));
      REQUIRE(best <= 1e-6 * std::max(1.0, std::abs(l)));
    }
  }
}

TEST_CASE("numerical rank examples", "[numerics]") {
  CHECK(dapi::numerical_rank(dapi::Matrix::Identity(3, 3), 1e-10) == 3);
  CHECK(dapi::numerical_rank(dapi::Matrix::Zero(4, 4)) == 0);
  CHECK(dapi::numerical_rank(dapi::Matrix(0, 0)) == 0);
  dapi::Matrix D(3, 3);
  D << 1, 2, 3, 4, 5, 6, 1, 2, 3;
  CHECK(dapi::numerical_rank(D) == 2);
}

TEST_CASE("numerical rank is invariant under row permutation and scaling", "[numerics][property]") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(2, 9);
  std::uniform_real_distribution<double> mag(-6.0, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const dapi::Index n = dim(rng);
    const dapi::Index r = std::uniform_int_distribution<dapi::Index>(0, n)(rng);
    const dapi::Matrix A = random_matrix(rng, n).leftCols(r) * random_matrix(rng, n).topRows(r);
    const dapi::Index base = dapi::numerical_rank(A);
    INFO("trial " << trial << " n " << n << " r " << r);
    REQUIRE(base == r);
    REQUIRE(oracle::rank(A, 1e-12L) == static_cast<long>(r));

    Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
    P.setIdentity();
    std::shuffle(P.indices().data(), P.indices().data() + n, rng);
    dapi::Vector scale(n);
    for (dapi::Index i = 0; i < n; ++i) scale(i) = std::pow(10.0, mag(rng)) * (i % 2 ? -1.0 : 1.0);
    REQUIRE(dapi::numerical_rank(scale.asDiagonal() * (P * A)) == base);
  }
}

TEST_CASE("rk4 keeps a zero system constant", "[numerics]") {
  dapi::Vector c(3);
  c << 1, -2, 3;
  const dapi::AffineOde ode{dapi::Matrix::Zero(3, 3), dapi::Vector::Zero(3), c};
  const auto tr = dapi::integrate_rk4(ode, 1.0, 0.1);
  REQUIRE(tr.samples() == 11);
  for (dapi::Index k = 0; k < tr.states.rows(); ++k) REQUIRE(tr.states.row(k).transpose() == c);
}

TEST_CASE("rk4 on exponential decay", "[numerics]") {
  const dapi::AffineOde ode{dapi::Matrix::Constant(1, 1, -1.0), dapi::Vector::Zero(1), dapi::Vector::Ones(1)};
  const auto tr = dapi::integrate_rk4(ode, 1.0, 0.01);
  CHECK(tr.times.back() == 1.0);
  CHECK_THAT(tr.final_state()(0), WithinAbs(std::exp(-1.0), 1e-6));

  double prev = 0.0;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    const double err = std::abs(dapi::integrate_rk4(ode, 1.0, h).final_state()(0) - std::exp(-1.0));
    if (prev > 0.0) CHECK_THAT(prev / err, WithinAbs(16.0, 1.0));
    prev = err;
  }
}

TEST_CASE("rk4 shortens the last step and respects the stride", "[numerics]") {
  const dapi::AffineOde ode{dapi::Matrix::Constant(1, 1, -1.0), dapi::Vector::Zero(1), dapi::Vector::Ones(1)};
  const auto tr = dapi::integrate_rk4(ode, 0.35, 0.1);
  REQUIRE(tr.samples() == 5);
  CHECK(tr.times.back() == 0.35);
  CHECK_THAT(tr.times[3], WithinAbs(0.3, 1e-15));
  const auto strided = dapi::integrate_rk4(ode, 1.0, 0.01, {.stride = 30});
  CHECK(strided.samples() == 5);  // 0, 0.3, 0.6, 0.9, 1.0
  CHECK(strided.times.back() == 1.0);
  CHECK(dapi::integrate_rk4(ode, 0.0, 0.1).samples() == 1);
}

TEST_CASE("rk4 flags divergence and truncates", "[numerics]") {
  const dapi::AffineOde ode{dapi::Matrix::Constant(1, 1, 50.0), dapi::Vector::Zero(1), dapi::Vector::Ones(1)};
  const auto tr = dapi::integrate_rk4(ode, 10.0, 0.01);
  CHECK(tr.diverged);
  CHECK(tr.times.back() < 10.0);
  CHECK(tr.states.cwiseAbs().maxCoeff() <= 1e12);
}

TEST_CASE("rk4 rejects bad arguments", "[numerics]") {
  const dapi::AffineOde ode{dapi::Matrix::Zero(1, 1), dapi::Vector::Zero(1), dapi::Vector::Zero(1)};
  CHECK_THROWS_AS(dapi::integrate_rk4(ode, 1.0, 0.0), dapi::InvalidArgument);
  CHECK_THROWS_AS(dapi::integrate_rk4(ode, -1.0, 0.1), dapi::InvalidArgument);
  const dapi::AffineOde bad{dapi::Matrix::Zero(2, 2), dapi::Vector::Zero(1), dapi::Vector::Zero(2)};
  CHECK_THROWS_AS(dapi::integrate_rk4(bad, 1.0, 0.1), dapi::InvalidArgument);
}

TEST_CASE("expm reference examples", "[numerics]") {
  CHECK(dapi::expm_reference(dapi::Matrix::Zero(3, 3), 1.0).isApprox(dapi::Matrix::Identity(3, 3)));
  dapi::Matrix D = dapi::Matrix::Zero(2, 2);
  D(0, 0) = -1;
  D(1, 1) = -2;
  const auto E = dapi::expm_reference(D, 1.0);
  CHECK_THAT(E(0, 0), WithinRel(std::exp(-1.0), 1e-14));
  CHECK_THAT(E(1, 1), WithinRel(std::exp(-2.0), 1e-14));
  CHECK(E(0, 1) == 0.0);
  dapi::Matrix N(2, 2);
  N << 0, 1, 0, 0;
  dapi::Matrix expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK(dapi::expm_reference(N, 1.0).isApprox(expected, 1e-15));
}

TEST_CASE("expm reference agrees with the long double Taylor oracle", "[numerics][property]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const dapi::Matrix A = random_matrix(rng, 6) * 0.7;
    const dapi::Matrix ref = oracle::expm(A.cast<long double>()).cast<double>();
    REQUIRE((dapi::expm_reference(A, 1.0) - ref).norm() <= 1e-10 * ref.norm());
  }
}

TEST_CASE("rk4 endpoint converges at fourth order towards the exact affine solution", "[numerics][property]") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    dapi::Matrix M = random_matrix(rng, 4);
    M.diagonal().array() -= 3.0;
    dapi::Vector b(4), x0(4);
    for (int i = 0; i < 4; ++i) {
      b(i) = normal(rng);
      x0(i) = normal(rng);
    }
    const dapi::Vector exact = oracle::affine_solution(M, b, x0, 1.0);
    double prev = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
      const double err = (dapi::integrate_rk4({M, b, x0}, 1.0, h).final_state() - exact).norm();
      REQUIRE(err <= 50.0 * std::pow(h, 4) * std::max(1.0, exact.norm()));
      if (prev > 0.0) REQUIRE(prev / err > 12.0);
      prev = err;
    }
  }
}

TEST_CASE("polynomial roots via companion matrix", "[numerics]") {
  const double coeffs[] = {-6.0, 11.0, -6.0, 1.0};  // (s-1)(s-2)(s-3)
  auto r = dapi::polynomial_roots(coeffs);
  REQUIRE(r.size() == 3);
  std::sort(r.begin(), r.end(), [](auto a, auto b) { return a.real() < b.real(); });
  for (int k = 0; k < 3; ++k) CHECK(std::abs(r[static_cast<std::size_t>(k)] - dapi::Complex(k + 1.0, 0.0)) < 1e-10);
  const double bad[] = {1.0, 0.0};
  CHECK_THROWS_AS(dapi::polynomial_roots(bad), dapi::InvalidArgument);
}
