#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mptrim/numkit.hpp"
#include "test_util.hpp"

using namespace mptrim;
using mptrim::test::expect_matrix_near;

TEST(Cholesky, Identity)
{
  expect_matrix_near(cholesky(Matrix::Identity(3, 3)), Matrix::Identity(3, 3), 0.0);
}

TEST(Cholesky, TwoByTwo)
{
  Matrix A(2, 2);
  A << 4, 2, 2, 3;
  Matrix L(2, 2);
  L << 2, 0, 1, std::sqrt(2.0);
  expect_matrix_near(cholesky(A), L, 1e-15);
  expect_matrix_near(L * L.transpose(), A, 1e-14);
}

TEST(Cholesky, Indefinite)
{
  Matrix A(2, 2);
  A << 1, 2, 2, 1;
  try {
    cholesky(A);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(Cholesky, ReconstructsRandomSpd)
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n  = 1 + trial % 20;
    const Matrix A = test::random_spd(rng, n);
    const Matrix L = cholesky(A);
    EXPECT_TRUE(L.isLowerTriangular());
    EXPECT_LE((L * L.transpose() - A).norm() / A.norm(), 1e-9);
  }
}

TEST(SpectralNorm, Examples)
{
  EXPECT_EQ(spectral_norm(Matrix::Zero(3, 2)), 0.0);
  Matrix D(2, 2);
  D << 3, 0, 0, 4;
  EXPECT_NEAR(spectral_norm(D), 4.0, 1e-12);
  Matrix r(1, 2);
  r << 1.5, -0.5;
  EXPECT_NEAR(spectral_norm(r), std::sqrt(2.5), 1e-12);
}

// power iteration on A^T A as an independent route
static double power_norm(const Matrix & A)
{
  Vector v = Vector::Ones(A.cols()) / std::sqrt(double(A.cols()));
  double s = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Vector u = A.transpose() * (A * v);
    const double nu = u.norm();
    if (nu == 0.0) { return 0.0; }
    v = u / nu;
    s = std::sqrt(nu);
  }
  return s;
}

TEST(SpectralNorm, NeverBelowRandomDirections)
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A    = test::random_matrix(rng, 1 + trial % 5, 1 + (trial * 3) % 4);
    const double norm = spectral_norm(A);
    double best       = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Vector u = test::unit_vector(rng, A.cols());
      best           = std::max(best, (A * u).norm());
    }
    EXPECT_LE(best, norm * (1.0 + 1e-12));
    EXPECT_NEAR(norm, power_norm(A), 1e-9 * (1.0 + norm));
  }
}

TEST(Lp, Examples)
{
  Matrix C(1, 1);
  C << -1;
  Vector d(1);
  d << -1;
  auto r = lp_solve(Vector::Ones(1), C, d, Box::uniform(1, 0, 10));
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.point(0), 1.0, 1e-12);

  C << 1;
  d << 5;
  r = lp_solve(-Vector::Ones(1), C, d);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.point(0), 5.0, 1e-12);

  Matrix C2(2, 1);
  C2 << 1, -1;
  Vector d2(2);
  d2 << -1, -1;
  EXPECT_EQ(lp_solve(Vector::Zero(1), C2, d2).status, LpStatus::Infeasible);
}

TEST(Lp, Unbounded)
{
  Matrix C(1, 2);
  C << 1, 1;
  Vector d(1);
  d << 1;
  EXPECT_EQ(lp_solve(Vector::Ones(2), C, d).status, LpStatus::Unbounded);
}

// Exhaustive vertex enumeration oracle: every n-subset of rows.
static double vertex_oracle(const Vector & c, const Matrix & C, const Vector & d)
{
  const Index m = C.rows(), n = C.cols();
  double best   = kInf;
  std::vector<int> pick(static_cast<std::size_t>(n));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == n) {
      Matrix A(n, n);
      Vector b(n);
      for (Index k = 0; k < n; ++k) {
        A.row(k) = C.row(pick[k]);
        b(k)     = d(pick[k]);
      }
      Eigen::FullPivLU<Matrix> lu(A);
      if (lu.rank() < n) { return; }
      const Vector x = lu.solve(b);
      if ((C * x - d).maxCoeff() <= 1e-9) { best = std::min(best, c.dot(x)); }
      return;
    }
    for (Index i = start; i < m; ++i) {
      pick[depth] = static_cast<int>(i);
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

TEST(Lp, AgreesWithVertexEnumeration)
{
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + trial % 2;
    const Index extra = 8 - 2 * n;
    Matrix C(2 * n + extra, n);
    Vector d(2 * n + extra);
    C.topRows(n)         = Matrix::Identity(n, n);
    C.middleRows(n, n)   = -Matrix::Identity(n, n);
    d.head(2 * n).setOnes();
    for (Index k = 0; k < extra; ++k) {
      C.row(2 * n + k) = test::unit_vector(rng, n).transpose();
      d(2 * n + k)     = u(rng);
    }
    const Vector c = test::random_matrix(rng, n, 1);
    const auto r   = lp_solve(c, C, d);
    ASSERT_EQ(r.status, LpStatus::Optimal);
    EXPECT_LE((C * r.point - d).maxCoeff(), 1e-8 * (1.0 + d.cwiseAbs().maxCoeff()));
    EXPECT_NEAR(r.objective, vertex_oracle(c, C, d), 1e-7);

    // same polytope with the unit box passed as variable bounds
    const auto rb = lp_solve(c, C.bottomRows(extra), d.tail(extra), Box::uniform(n, -1, 1));
    ASSERT_EQ(rb.status, LpStatus::Optimal);
    EXPECT_NEAR(rb.objective, r.objective, 1e-7);
  }
}

TEST(Lp, DegenerateVertexTerminates)
{
  // many constraints through the same vertex
  const int m = 30;
  Matrix C(m, 2);
  Vector d = Vector::Zero(m);
  for (int k = 0; k < m; ++k) {
    const double t = 0.05 + 1.4 * k / m;
    C(k, 0)        = std::cos(t);
    C(k, 1)        = std::sin(t);
  }
  const auto r = lp_solve(Vector(Vector::Constant(2, -1.0)), C, d, Box::uniform(2, -5, 5));
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_LE((C * r.point - d).maxCoeff(), 1e-9);
}

TEST(Zoh, ZeroDynamics)
{
  const auto [A, B] = zoh_discretize(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 0.1);
  expect_matrix_near(A, Matrix::Identity(2, 2), 1e-15);
  expect_matrix_near(B, 0.1 * Matrix::Identity(2, 2), 1e-15);
}

TEST(Zoh, DoubleIntegrator)
{
  Matrix Ac(2, 2), Bc(2, 1);
  Ac << 0, 1, 0, 0;
  Bc << 0, 1;
  const auto [A, B] = zoh_discretize(Ac, Bc, 0.1);
  Matrix Ae(2, 2), Be(2, 1);
  Ae << 1, 0.1, 0, 1;
  Be << 0.005, 0.1;
  EXPECT_LE((A - Ae).norm() / Ae.norm(), 1e-10);
  EXPECT_LE((B - Be).norm() / Be.norm(), 1e-10);
}

TEST(Zoh, Scalar)
{
  Matrix Ac(1, 1), Bc(1, 1);
  Ac << -1;
  Bc << 1;
  const auto [A, B] = zoh_discretize(Ac, Bc, 1.0);
  EXPECT_NEAR(A(0, 0), std::exp(-1.0), 1e-10 * std::exp(-1.0));
  EXPECT_NEAR(B(0, 0), 1.0 - std::exp(-1.0), 1e-10);
}

TEST(Zoh, StableStaysStable)
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n  = 1 + trial % 6;
    const Matrix M = test::random_matrix(rng, n, n);
    const Matrix K = test::random_matrix(rng, n, n);
    const Matrix Ac = -(M * M.transpose() + 0.1 * Matrix::Identity(n, n)) + (K - K.transpose());
    const auto [A, B] = zoh_discretize(Ac, test::random_matrix(rng, n, 2), 0.3);
    EXPECT_LT(spectral_radius(A), 1.0);
  }
}

TEST(Zoh, RejectsNonPositiveStep)
{
  EXPECT_THROW(zoh_discretize(Matrix::Zero(1, 1), Matrix::Zero(1, 1), 0.0), Error);
}
