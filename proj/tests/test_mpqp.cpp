#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "mptrim/generators.hpp"
#include "mptrim/mpqp.hpp"
#include "test_util.hpp"

using namespace mptrim;

static Vector vec1(double v) { return Vector::Constant(1, v); }

TEST(IndexSet, Normalizes)
{
  IndexSet s{3, 1, 3, 2};
  EXPECT_EQ(s.items(), (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(s.contains(2));
  EXPECT_FALSE(s.contains(0));
  EXPECT_EQ((s | IndexSet{0}), (IndexSet{0, 1, 2, 3}));
  EXPECT_EQ((s & IndexSet{2, 5}), (IndexSet{2}));
  EXPECT_EQ((s - IndexSet{2}), (IndexSet{1, 3}));
  EXPECT_TRUE(IndexSet{}.subset_of(s));
  EXPECT_FALSE(s.in_range(3));
}

TEST(Validate, Examples)
{
  EXPECT_TRUE(validate(scalar_two_row_example()).empty());
  MpQp p = scalar_two_row_example();
  p.H(0, 0) = 0.0;
  ASSERT_EQ(validate(p).size(), 1u);
  EXPECT_EQ(validate(p)[0], "H-not-PD");
  p      = scalar_two_row_example();
  p.G(1, 0) = 0.0;
  ASSERT_EQ(validate(p).size(), 1u);
  EXPECT_EQ(validate(p)[0], "zero rows of G: 1");
  p = scalar_two_row_example();
  p.w.resize(3);
  EXPECT_FALSE(validate(p).empty());
}

TEST(QpSolve, ScalarExample)
{
  const MpQp p     = scalar_two_row_example();
  const IndexSet all = IndexSet::range(2);

  auto s = qp_solve(p, vec1(-1), all);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.z_star(0), -3.0, 1e-12);
  EXPECT_EQ(s.active, IndexSet{1});

  s = qp_solve(p, vec1(-3), all);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.z_star(0), -3.0, 1e-12);
  EXPECT_EQ(s.active, IndexSet{0});

  s = qp_solve(p, vec1(-2), IndexSet{});
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.z_star(0), 1.0, 1e-15);
  EXPECT_TRUE(s.active.empty());

  s = qp_solve(p, vec1(-2), all);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.z_star(0), -2.0, 1e-12);
  EXPECT_EQ(s.active, (IndexSet{0, 1}));
  EXPECT_LE(QpSolver(p).kkt_residual(vec1(-2), all, s), 1e-9);
}

TEST(QpSolve, Infeasible)
{
  MpQp p;
  p.H = Matrix::Identity(1, 1);
  p.F = Matrix::Zero(1, 1);
  p.G.resize(2, 1);
  p.G << 1, -1;
  p.S = Matrix::Zero(2, 1);
  p.w.resize(2);
  p.w << -1, -1;  // z ≤ −1 and z ≥ 1
  EXPECT_EQ(qp_solve(p, vec1(0), IndexSet::range(2)).status, QpStatus::Infeasible);
  EXPECT_EQ(qp_solve(p, vec1(0), IndexSet{0}).status, QpStatus::Optimal);
}

TEST(ActiveSet, Examples)
{
  const MpQp p = scalar_two_row_example();
  EXPECT_EQ(active_set(p, vec1(-1), vec1(-3), 1e-7), IndexSet{1});
  EXPECT_EQ(active_set(p, vec1(-2), vec1(-2), 1e-7), (IndexSet{0, 1}));
  EXPECT_TRUE(active_set(p, vec1(-1), vec1(-10), 1e-7).empty());
}

TEST(Scale, Examples)
{
  const MpQp p = scalar_two_row_example();
  const MpQp same = scale(p, Vector::Ones(2));
  EXPECT_EQ(same.G, p.G);
  EXPECT_EQ(same.S, p.S);
  EXPECT_EQ(same.w, p.w);
  Vector phi(2);
  phi << 2, 3;
  const MpQp q = scale(p, phi);
  EXPECT_EQ(q.G(0, 0), 2.0);
  EXPECT_EQ(q.G(1, 0), 3.0);
  EXPECT_EQ(q.S(0, 0), 2.0);
  EXPECT_EQ(q.S(1, 0), -3.0);
  EXPECT_EQ(q.w(0), 0.0);
  EXPECT_EQ(q.w(1), -12.0);
  phi << 1, 0;
  try {
    scale(p, phi);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveScale);
  }
}

TEST(Licq, Examples)
{
  const MpQp p = scalar_two_row_example();
  EXPECT_FALSE(licq_holds(p, IndexSet{0, 1}));
  EXPECT_TRUE(licq_holds(p, IndexSet{1}));
  EXPECT_TRUE(licq_holds(p, IndexSet{}));
}

TEST(QpSolve, EmptySetIsUnconstrainedMinimizer)
{
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const MpQp p   = random_mpqp(rng, {4, 3, 6});
    const Vector x = uniform_in_box(rng, 3, 2.0);
    const auto s   = qp_solve(p, x, IndexSet{});
    const Vector zu = -p.H.ldlt().solve(p.F.transpose() * x);
    EXPECT_LE((s.z_star - zu).norm(), 1e-10 * (1 + zu.norm()));
  }
}

// Enumerate every candidate active subset of size ≤ n_z and solve its KKT system.
static std::optional<Vector> kkt_enumeration(const MpQp & p, const Vector & x, const IndexSet & idx)
{
  const Index n  = p.n_z();
  const Vector b = p.rhs(x);
  std::optional<Vector> found;
  std::vector<int> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (found) { return; }
    const Index k = static_cast<Index>(pick.size());
    Matrix K      = Matrix::Zero(n + k, n + k);
    Vector r(n + k);
    K.topLeftCorner(n, n) = p.H;
    r.head(n)             = -p.F.transpose() * x;
    for (Index i = 0; i < k; ++i) {
      K.block(n + i, 0, 1, n) = p.G.row(pick[static_cast<std::size_t>(i)]);
      K.block(0, n + i, n, 1) = p.G.row(pick[static_cast<std::size_t>(i)]).transpose();
      r(n + i)                = b(pick[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Matrix> lu(K);
    if (lu.rank() == n + k) {
      const Vector sol = lu.solve(r);
      const Vector z   = sol.head(n);
      bool ok          = k == 0 || sol.tail(k).minCoeff() >= -1e-9;
      for (int j : idx) { ok = ok && p.G.row(j).dot(z) <= b(j) + 1e-9 * (1 + std::abs(b(j))); }
      if (ok) {
        found = z;
        return;
      }
    }
    if (k == n) { return; }
    for (std::size_t s = start; s < idx.size(); ++s) {
      pick.push_back(idx[s]);
      rec(s + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return found;
}

TEST(QpSolve, MatchesKktEnumeration)
{
  std::mt19937_64 rng(2024);
  int solved = 0;
  for (int t = 0; t < 150; ++t) {
    const Index nz = 1 + t % 4;
    const Index nc = 2 + t % 11;
    const MpQp p   = random_mpqp(rng, {nz, 2, nc});
    QpSolver solver(p);
    const auto x = sample_feasible_x(solver, rng, 3.0);
    if (!x) { continue; }
    const IndexSet all = IndexSet::range(nc);
    const auto s       = solver.solve(*x, all);
    ASSERT_EQ(s.status, QpStatus::Optimal);
    const auto ref = kkt_enumeration(p, *x, all);
    ASSERT_TRUE(ref.has_value());
    EXPECT_LE((s.z_star - *ref).norm(), 1e-6 * (1 + ref->norm()));
    EXPECT_LE(solver.kkt_residual(*x, all, s), 1e-7 * (1 + s.z_star.norm()));
    ++solved;
  }
  EXPECT_GT(solved, 100);
}

TEST(QpSolve, KktResidualsOnLargerInstances)
{
  std::mt19937_64 rng(77);
  for (int t = 0; t < 100; ++t) {
    const Index nz = 1 + t % 8;
    const Index nc = 5 + (t * 7) % 36;
    const MpQp p   = random_mpqp(rng, {nz, 3, nc});
    QpSolver solver(p);
    const auto x = sample_feasible_x(solver, rng, 3.0);
    if (!x) { continue; }
    const auto s = solver.solve(*x, IndexSet::range(nc));
    ASSERT_EQ(s.status, QpStatus::Optimal);
    EXPECT_LE(solver.kkt_residual(*x, IndexSet::range(nc), s), 1e-7 * (1 + s.z_star.norm()));
    EXPECT_EQ(s.active, active_set(p, *x, s.z_star, 1e-7));
  }
}

TEST(QpSolve, RemovingConstraintsNeverIncreasesValue)
{
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < 100; ++t) {
    const MpQp p = random_mpqp(rng, {3, 2, 12});
    QpSolver solver(p);
    const auto x = sample_feasible_x(solver, rng, 3.0);
    if (!x) { continue; }
    std::vector<int> big, small;
    for (int j = 0; j < 12; ++j) {
      if (coin(rng)) {
        big.push_back(j);
        if (coin(rng)) { small.push_back(j); }
      }
    }
    const auto s1 = solver.solve(*x, IndexSet(small));
    const auto s2 = solver.solve(*x, IndexSet(big));
    ASSERT_EQ(s1.status, QpStatus::Optimal);
    ASSERT_EQ(s2.status, QpStatus::Optimal);
    const double v1 = p.objective(*x, s1.z_star), v2 = p.objective(*x, s2.z_star);
    EXPECT_LE(v1, v2 + 1e-9 * (1 + std::abs(v2)));
  }
}

TEST(QpSolve, ScalingKeepsMinimizer)
{
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int t = 0; t < 60; ++t) {
    const MpQp p = random_mpqp(rng, {3, 2, 10});
    QpSolver solver(p);
    const auto x = sample_feasible_x(solver, rng, 3.0);
    if (!x) { continue; }
    Vector phi(10);
    for (Index j = 0; j < 10; ++j) { phi(j) = u(rng); }
    const auto a = solver.solve(*x, IndexSet::range(10));
    const auto b = qp_solve(scale(p, phi), *x, IndexSet::range(10));
    EXPECT_LE((a.z_star - b.z_star).norm(), 1e-8 * (1 + a.z_star.norm()));
  }
}

TEST(QpSolve, WarmStartAgrees)
{
  std::mt19937_64 rng(9);
  for (int t = 0; t < 60; ++t) {
    const MpQp p = random_mpqp(rng, {4, 2, 15});
    QpSolver solver(p);
    const auto x1 = sample_feasible_x(solver, rng, 3.0);
    const auto x2 = sample_feasible_x(solver, rng, 3.0);
    if (!x1 || !x2) { continue; }
    const IndexSet all = IndexSet::range(15);
    const auto s1      = solver.solve(*x1, all);
    const auto cold    = solver.solve(*x2, all);
    const auto warm    = solver.solve(*x2, all, s1.active);
    EXPECT_LE((cold.z_star - warm.z_star).norm(), 1e-8 * (1 + cold.z_star.norm()));
    const auto same = solver.solve(*x1, all, s1.active);
    EXPECT_LE(same.iterations, 2);
  }
}
