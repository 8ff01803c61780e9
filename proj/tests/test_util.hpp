#pragma once

#include <random>

#include <gtest/gtest.h>

#include "mptrim/numkit.hpp"

namespace mptrim::test {

inline Matrix random_matrix(std::mt19937_64 & rng, Index r, Index c, double scale = 1.0)
{
  std::normal_distribution<double> n(0.0, scale);
  Matrix A(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) { A(i, j) = n(rng); }
  }
  return A;
}

inline Matrix random_spd(std::mt19937_64 & rng, Index n, double shift = 0.5)
{
  const Matrix M = random_matrix(rng, n, n);
  return M * M.transpose() + shift * Matrix::Identity(n, n);
}

inline Vector unit_vector(std::mt19937_64 & rng, Index n)
{
  Vector v = random_matrix(rng, n, 1);
  return v / v.norm();
}

inline void expect_matrix_near(const Matrix & A, const Matrix & B, double tol)
{
  ASSERT_EQ(A.rows(), B.rows());
  ASSERT_EQ(A.cols(), B.cols());
  EXPECT_LE((A - B).cwiseAbs().maxCoeff(), tol) << "A=\n" << A << "\nB=\n" << B;
}

}  // namespace mptrim::test
