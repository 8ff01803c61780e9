#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "mptrim/generators.hpp"
#include "mptrim/lipschitz.hpp"
#include "mptrim/trim.hpp"

using namespace mptrim;

static Vector vec1(double v) { return Vector::Constant(1, v); }

static SolvedSample scalar_sample(double x)
{
  const MpQp p = scalar_two_row_example();
  return *solve_sample(QpSolver(p), vec1(x));
}

TEST(RemovalTest, ScalarExample)
{
  const MpQp p = scalar_two_row_example();
  const auto s1 = scalar_sample(-1);
  const auto s2 = scalar_sample(-3);
  EXPECT_EQ(s1.active, IndexSet{1});
  EXPECT_EQ(s2.active, IndexSet{0});
  EXPECT_DOUBLE_EQ(slack_distance(p, s1, vec1(-2), 0), 1.0);
  EXPECT_TRUE(removal_test(p, 1.0, s1, vec1(-2), 0));
  EXPECT_DOUBLE_EQ(slack_distance(p, s2, vec1(-2), 1), 1.0);
  EXPECT_TRUE(removal_test(p, 1.0, s2, vec1(-2), 1));
  EXPECT_FALSE(removal_test(p, 1.0 + 1e-12, s2, vec1(-2), 1));
  try {
    removal_test(p, 1.0, s1, vec1(-2), 1);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInactive);
  }
}

TEST(TrimSingle, ScalarExample)
{
  const MpQp p = scalar_two_row_example();
  const auto o1 = trim_single(p, 1.0, scalar_sample(-1), vec1(-2));
  const auto o2 = trim_single(p, 1.0, scalar_sample(-3), vec1(-2));
  EXPECT_EQ(o1.kept, IndexSet{1});
  EXPECT_EQ(o2.kept, IndexSet{0});
  EXPECT_EQ(o1.removed, IndexSet{0});
  EXPECT_DOUBLE_EQ(o1.radius, 1.0);
  const auto z1 = qp_solve(p, vec1(-2), o1.kept);
  const auto z2 = qp_solve(p, vec1(-2), o2.kept);
  EXPECT_NEAR(z1.z_star(0), -2.0, 1e-12);
  EXPECT_NEAR(z2.z_star(0), -2.0, 1e-12);
  EXPECT_TRUE(certify(p, 1.0, scalar_sample(-1), vec1(-2), o1));
}

TEST(TrimSingle, ZeroDistanceKeepsActiveOnly)
{
  std::mt19937_64 rng(1);
  const MpQp p = random_mpqp(rng, {3, 2, 12});
  QpSolver solver(p);
  const auto x = sample_feasible_x(solver, rng, 1.5);
  ASSERT_TRUE(x);
  const auto s = *solve_sample(solver, *x);
  EXPECT_EQ(trim_single(p, glc(p).kappa, s, *x).kept, s.active);
}

TEST(TrimSingle, HugeKappaKeepsAll)
{
  const MpQp p = scalar_two_row_example();
  EXPECT_EQ(trim_single(p, 1e9, scalar_sample(-1), vec1(-1.5)).kept, IndexSet::range(2));
}

TEST(TrimSingle, RejectsInconsistentSample)
{
  const MpQp p = scalar_two_row_example();
  SolvedSample s{vec1(-1), vec1(0.0), {}};  // z = 0 violates z ≤ x
  EXPECT_THROW(trim_single(p, 1.0, s, vec1(-1)), Error);
}

TEST(TrimMulti, SingleSampleMatchesTrimSingle)
{
  const MpQp p = scalar_two_row_example();
  const auto a = trim_multi(p, 1.0, {scalar_sample(-1)}, vec1(-2));
  EXPECT_EQ(a.kept, trim_single(p, 1.0, scalar_sample(-1), vec1(-2)).kept);
  EXPECT_EQ(trim_multi(p, 1.0, {}, vec1(-2)).kept, IndexSet::range(2));
  EXPECT_EQ(trim_parallel(p, 1.0, {}, vec1(-2)).kept, IndexSet::range(2));
}

TEST(TrimMulti, ScalarExampleHazard)
{
  const MpQp p = scalar_two_row_example();
  const std::vector<SolvedSample> both{scalar_sample(-1), scalar_sample(-3)};
  EXPECT_FALSE(licq_holds(p, IndexSet{0, 1}));

  TrimOptions opts;
  opts.assume_licq = true;
  const auto folded = trim_multi(p, 1.0, both, vec1(-2), opts);
  EXPECT_TRUE(folded.kept.empty());
  EXPECT_EQ(folded.samples_used, 2);
  EXPECT_EQ(trim_parallel(p, 1.0, both, vec1(-2), opts).kept, folded.kept);
  EXPECT_NEAR(qp_solve(p, vec1(-2), folded.kept).z_star(0), 1.0, 1e-15);
  EXPECT_NEAR(qp_solve(p, vec1(-2), IndexSet::range(2)).z_star(0), -2.0, 1e-12);

  // without the assertion the fold falls back to the nearest sample and stays safe
  const auto safe = trim_multi(p, 1.0, both, vec1(-2));
  EXPECT_EQ(safe.samples_used, 1);
  EXPECT_NEAR(qp_solve(p, vec1(-2), safe.kept).z_star(0), -2.0, 1e-12);
}

TEST(TrimMulti, RejectsDependentActiveRows)
{
  const MpQp p = scalar_two_row_example();
  const auto vertex = scalar_sample(-2);
  EXPECT_EQ(vertex.active, (IndexSet{0, 1}));
  try {
    trim_multi(p, 1.0, {scalar_sample(-1), vertex}, vec1(-2));
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::LicqViolation);
    EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos);
  }
}

TEST(Certify, DetectsTampering)
{
  const MpQp p  = scalar_two_row_example();
  const auto s  = scalar_sample(-1);
  auto out      = trim_single(p, 1.0, s, vec1(-2));
  TrimOutcome bad = out;
  bad.kept        = IndexSet{};
  bad.removed     = IndexSet::range(2);
  EXPECT_FALSE(certify(p, 1.0, s, vec1(-2), bad));
  bad.kept = IndexSet{0, 1};
  EXPECT_FALSE(certify(p, 1.0, s, vec1(-2), bad));
  EXPECT_TRUE(certify(p, 0.0, s, vec1(-1), trim_single(p, 0.0, s, vec1(-1))));
  EXPECT_FALSE(certify(p, 1.5, s, vec1(-2), out));
}

struct RandomCase
{
  MpQp p;
  std::vector<SolvedSample> samples;
  Vector x;
};

// Samples scattered around x at several length scales so that removal actually happens.
static std::optional<RandomCase> random_case(std::mt19937_64 & rng, Index nz, Index nc, int q)
{
  RandomCase c;
  c.p = random_mpqp(rng, {nz, 2, nc});
  QpSolver solver(c.p);
  const auto x = sample_feasible_x(solver, rng, 1.5);
  if (!x) { return std::nullopt; }
  c.x = *x;
  std::uniform_real_distribution<double> logscale(-4.0, 0.0);
  for (int k = 0; k < q; ++k) {
    const double r   = std::pow(10.0, logscale(rng));
    const Vector xh  = c.x + uniform_in_box(rng, 2, r);
    const auto s     = solve_sample(solver, xh);
    if (!s) { return std::nullopt; }
    c.samples.push_back(*s);
  }
  return c;
}

TEST(TrimSafety, SingleSampleZeroGap)
{
  std::mt19937_64 rng(100);
  int removed_any = 0, cases = 0;
  for (int t = 0; t < 200; ++t) {
    const auto c = random_case(rng, 1 + t % 5, 4 + t % 20, 1);
    if (!c) { continue; }
    ++cases;
    const double kappa = glc_enumerated(c->p);
    const auto out     = trim_single(c->p, kappa, c->samples[0], c->x);
    EXPECT_TRUE(certify(c->p, kappa, c->samples[0], c->x, out));
    removed_any += !out.removed.empty();
    const auto full = qp_solve(c->p, c->x, IndexSet::range(c->p.n_c()));
    const auto trim = qp_solve(c->p, c->x, out.kept);
    ASSERT_EQ(trim.status, QpStatus::Optimal);
    EXPECT_LE((full.z_star - trim.z_star).norm(), 1e-6 * (1 + full.z_star.norm()));
  }
  EXPECT_GT(cases, 150);
  EXPECT_GT(removed_any, cases / 2);
}

TEST(TrimSafety, MultiSampleZeroGapAndFoldIdentities)
{
  std::mt19937_64 rng(200);
  TrimOptions opts;
  opts.assume_licq = true;
  int cases        = 0;
  for (int t = 0; t < 200; ++t) {
    const int q  = 2 + t % 4;
    const auto c = random_case(rng, 1 + t % 4, 4 + t % 16, q);
    if (!c) { continue; }
    bool licq = true;
    for (const auto & s : c->samples) { licq = licq && licq_holds(c->p, s.active); }
    const auto full = qp_solve(c->p, c->x, IndexSet::range(c->p.n_c()));
    if (!licq || !licq_holds(c->p, full.active)) { continue; }
    ++cases;
    const double kappa = glc_enumerated(c->p);
    const auto multi   = trim_multi(c->p, kappa, c->samples, c->x, opts);
    EXPECT_EQ(multi.kept, trim_parallel(c->p, kappa, c->samples, c->x, opts).kept);

    auto reversed = c->samples;
    std::reverse(reversed.begin(), reversed.end());
    EXPECT_EQ(multi.kept, trim_multi(c->p, kappa, reversed, c->x, opts).kept);

    // more samples never keep more rows
    const std::vector<SolvedSample> first(c->samples.begin(), c->samples.begin() + 1);
    EXPECT_TRUE(multi.kept.subset_of(trim_multi(c->p, kappa, first, c->x, opts).kept));

    const auto trim = qp_solve(c->p, c->x, multi.kept);
    ASSERT_EQ(trim.status, QpStatus::Optimal);
    EXPECT_LE((full.z_star - trim.z_star).norm(), 1e-6 * (1 + full.z_star.norm()));

    // rows with strictly positive multipliers are never dropped
    for (Index k = 0; k < full.lambda.size(); ++k) {
      if (full.lambda(static_cast<Index>(k)) > 1e-6) { EXPECT_TRUE(multi.kept.contains(static_cast<int>(k))); }
    }
  }
  EXPECT_GT(cases, 100);
}
