#pragma once

#include <optional>
#include <random>

#include "mptrim/mpqp.hpp"

namespace mptrim {

/// Shape of randomly generated mp-QP instances.
struct RandomMpQpSpec
{
  Index n_z = 3;
  Index n_x = 2;
  Index n_c = 10;
  double w_min = 0.5;  ///< w_j drawn from [w_min, w_max] so x = 0 is strictly feasible
  double w_max = 2.0;
};

inline Matrix gaussian_matrix(std::mt19937_64 & rng, Index r, Index c)
{
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix A(r, c);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < r; ++i) { A(i, j) = n(rng); }
  }
  return A;
}

/// Random valid instance: H = MMᵀ + 0.5·I, Gaussian F, G, S and positive w.
inline MpQp random_mpqp(std::mt19937_64 & rng, const RandomMpQpSpec & spec)
{
  MpQp p;
  const Matrix M = gaussian_matrix(rng, spec.n_z, spec.n_z);
  p.H            = M * M.transpose() + 0.5 * Matrix::Identity(spec.n_z, spec.n_z);
  p.H            = 0.5 * (p.H + p.H.transpose()).eval();
  p.F            = gaussian_matrix(rng, spec.n_x, spec.n_z);
  p.G            = gaussian_matrix(rng, spec.n_c, spec.n_z);
  p.S            = gaussian_matrix(rng, spec.n_c, spec.n_x);
  std::uniform_real_distribution<double> u(spec.w_min, spec.w_max);
  p.w.resize(spec.n_c);
  for (Index j = 0; j < spec.n_c; ++j) { p.w(j) = u(rng); }
  return p;
}

/// Uniform point of the box [-radius, radius]^n.
inline Vector uniform_in_box(std::mt19937_64 & rng, Index n, double radius)
{
  std::uniform_real_distribution<double> u(-radius, radius);
  Vector x(n);
  for (Index i = 0; i < n; ++i) { x(i) = u(rng); }
  return x;
}

/// Rejection-sample a parameter in [-radius, radius]^n_x for which the full problem is feasible.
inline std::optional<Vector> sample_feasible_x(const QpSolver & solver, std::mt19937_64 & rng, double radius,
  int tries = 200)
{
  const MpQp & p = solver.problem();
  for (int t = 0; t < tries; ++t) {
    Vector x = uniform_in_box(rng, p.n_x(), radius);
    const Vector b = p.rhs(x);
    const auto r   = lp_solve(Vector::Zero(p.n_z()), p.G, b);
    if (r.status == LpStatus::Optimal) { return x; }
  }
  return std::nullopt;
}

}  // namespace mptrim

namespace mptrim {

/// Scalar two-row instance: min z² + xz  s.t.  z ≤ x,  z ≤ −x − 4.
inline MpQp scalar_two_row_example()
{
  MpQp p;
  p.H = Matrix::Constant(1, 1, 2.0);
  p.F = Matrix::Constant(1, 1, 1.0);
  p.G.resize(2, 1);
  p.G << 1, 1;
  p.S.resize(2, 1);
  p.S << 1, -1;
  p.w.resize(2);
  p.w << 0, -4;
  p.name = "scalar_two_row";
  return p;
}

}  // namespace mptrim

namespace mptrim {

/// Random mp-QP with n_x + n_z = n_v whose lifted polyhedron contains a ball of radius ≥ w_min around 0.
inline MpQp random_lifted_mpqp(std::mt19937_64 & rng, Index n_x, Index n_z, Index n_c, double w_min = 0.3)
{
  MpQp p = random_mpqp(rng, {n_z, n_x, n_c});
  std::uniform_real_distribution<double> u(w_min, 1.0);
  for (Index j = 0; j < n_c; ++j) {
    const double norm = std::sqrt(p.S.row(j).squaredNorm() + p.G.row(j).squaredNorm());
    p.w(j)            = norm * u(rng);
  }
  return p;
}

}  // namespace mptrim
