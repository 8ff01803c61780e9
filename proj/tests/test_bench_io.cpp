#include <cstring>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mptrim/bench.hpp"
#include "mptrim/generators.hpp"
#include "mptrim/json_io.hpp"
#include "mptrim/scenarios.hpp"
#include "mptrim/verify.hpp"
#include "test_util.hpp"

using namespace mptrim;
using mptrim::test::expect_matrix_near;

namespace {

bool bitwise_equal(const Matrix & a, const Matrix & b)
{
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// CSV with the time_pct column removed; timing is excluded from the determinism contract.
std::string without_timing(const std::string & csv)
{
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) { cells.push_back(c); }
    cells.erase(cells.begin() + 4);
    for (std::size_t k = 0; k < cells.size(); ++k) { out += (k ? "," : "") + cells[k]; }
    out += '\n';
  }
  return out;
}

MpcScenario di(int N = 5)
{
  DoubleIntegratorSpec s;
  s.N = N;
  return make_scenario(double_integrator(s));
}

}  // namespace

TEST(Json, ProblemRoundTripIsBitExact)
{
  std::mt19937_64 rng(3);
  MpQp p = random_mpqp(rng, {3, 2, 7});
  p.H(0, 0) += 1.0 / 3.0;
  p.name = "r";
  const auto text = to_json(p).dump();
  const MpQp q    = mpqp_from_json(json::parse(text));
  EXPECT_TRUE(bitwise_equal(p.H, q.H));
  EXPECT_TRUE(bitwise_equal(p.F, q.F));
  EXPECT_TRUE(bitwise_equal(p.G, q.G));
  EXPECT_TRUE(bitwise_equal(p.S, q.S));
  EXPECT_TRUE(bitwise_equal(p.w, q.w));
  EXPECT_EQ(q.name, "r");
}

TEST(Json, RejectsInvalidProblems)
{
  json j = to_json(scalar_two_row_example());
  j["H"] = json::array({json::array({-1.0})});
  EXPECT_THROW(mpqp_from_json(j), Error);
  j.erase("w");
  EXPECT_THROW(mpqp_from_json(j), Error);
  EXPECT_THROW(matrix_from_json(json::parse("[[1, 2], [3]]")), Error);
}

TEST(Json, InfinityAndRecordsRoundTrip)
{
  const Box b{Vector::Constant(2, -kInf), Vector::Constant(2, 1.5)};
  const Box c = box_from_json(json::parse(to_json(b).dump()));
  EXPECT_TRUE(std::isinf(c.lower(0)) && c.lower(0) < 0);
  EXPECT_EQ(c.upper(1), 1.5);

  const SolvedSample s{Vector::Constant(1, -1.0), Vector::Constant(1, -3.0), IndexSet{1}};
  const auto s2 = sample_from_json(json::parse(to_json(s).dump()));
  EXPECT_EQ(s2.active, s.active);
  EXPECT_EQ(s2.z_star(0), -3.0);

  const TrimOutcome o{IndexSet{0, 4}, IndexSet{1, 2, 3}, 0.25, 2};
  const auto o2 = trim_outcome_from_json(json::parse(to_json(o).dump()));
  EXPECT_EQ(o2.kept, o.kept);
  EXPECT_EQ(o2.removed, o.removed);
  EXPECT_EQ(o2.radius, 0.25);
  EXPECT_EQ(o2.samples_used, 2);

  SigmaTable t;
  t.sigma = {{1, 0.0}, {2, 0.5}};
  t.lower = {{1, 0.0}, {2, 0.49}};
  t.r_max = 2.0;
  const auto t2 = sigma_table_from_json(json::parse(to_json(t).dump()));
  EXPECT_EQ(t2.sigma, t.sigma);
  EXPECT_EQ(t2.lower, t.lower);
  EXPECT_EQ(t2.r_max, 2.0);
}

TEST(Json, GlcReportRecombines)
{
  const auto r = glc(scalar_two_row_example());
  const json j = to_json(r);
  const auto & t = j.at("terms");
  EXPECT_NEAR(j.at("kappa").get<double>(),
    t.at("term_unconstrained").get<double>() +
      t.at("norm_HinvGt").get<double>() * t.at("norm_S_plus").get<double>() / t.at("denom_min_quad").get<double>(),
    1e-12);
}

TEST(Json, ScenarioWithDiscretization)
{
  const json j = json::parse(R"({
    "discretize": {"Ac": [[0, 1], [0, 0]], "Bc": [[0], [1]], "h": 0.1},
    "N": 5,
    "X": {"C": [[1, 0], [-1, 0], [0, 1], [0, -1]], "d": [5, 5, 2, 2]},
    "U": {"C": [[1], [-1]], "d": [1, 1]},
    "terminal": "auto"
  })");
  const MpcDesign d = design_from_json(j);
  const MpcDesign ref = double_integrator();
  expect_matrix_near(d.A, ref.A, 1e-15);
  expect_matrix_near(d.B, ref.B, 1e-15);
  expect_matrix_near(d.Q, Matrix::Identity(2, 2), 0.0);
  EXPECT_FALSE(d.terminal.has_value());

  const MpcDesign back = design_from_json(json::parse(to_json(ref).dump()));
  EXPECT_TRUE(bitwise_equal(back.A, ref.A));
  EXPECT_EQ(back.N, ref.N);

  json bad   = j;
  bad["terminal"] = "lqr";
  EXPECT_THROW(design_from_json(bad), Error);
  bad        = j;
  bad["discretize"]["h"] = 0.0;
  EXPECT_THROW(design_from_json(bad), Error);
  bad = j;
  bad["X"]["C"] = json::array({json::array({1, 0, 0})});
  EXPECT_THROW(design_from_json(bad), Error);
}

TEST(Json, ExampleGoldenFile)
{
  const json g   = read_json_file(std::string(MPTRIM_DATA_DIR) + "/example1.json");
  const MpQp p   = mpqp_from_json(g.at("problem"));
  const QpSolver solver(p);
  const double kappa = g.at("kappa").get<double>();
  const Vector x     = vector_from_json(g.at("trim_at"));
  std::vector<SolvedSample> samples;
  for (const auto & s : g.at("solves")) {
    const auto sol = solve_sample(solver, vector_from_json(s.at("x")));
    ASSERT_TRUE(sol);
    EXPECT_EQ(sol->active, index_set_from_json(s.at("active")));
    EXPECT_NEAR((sol->z_star - vector_from_json(s.at("z_star"))).norm(), 0.0, 1e-12);
    samples.push_back(*sol);
  }
  IndexSet common = IndexSet::range(p.n_c());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto out = trim_single(p, kappa, samples[k], x);
    EXPECT_EQ(out.kept, index_set_from_json(g.at("kept")[k]));
    EXPECT_NEAR((solver.solve(x, out.kept).z_star - vector_from_json(g.at("z_star_trimmed"))).norm(), 0.0, 1e-12);
    common = common & out.kept;
  }
  EXPECT_NEAR((solver.solve(x, common).z_star - vector_from_json(g.at("z_star_intersection"))).norm(), 0.0, 1e-12);
}

TEST(Json, TraceLines)
{
  const auto sc = di();
  const auto tr = simulate(sc, sample_feasible_states(sc, 1, 3).front(), 7, SimMode::AdaptiveOnline,
    glc_scaled(sc.condensed, phi_default(sc.condensed)).kappa);
  std::ostringstream os;
  write_trace_lines(os, tr);
  std::istringstream in(os.str());
  std::string line;
  int k = 0;
  while (std::getline(in, line)) {
    const json r = json::parse(line);
    EXPECT_EQ(r.at("k").get<int>(), k);
    EXPECT_EQ(r.at("mode").get<std::string>(), "adaptive");
    EXPECT_EQ(r.at("kept").get<long>(), tr.steps[static_cast<std::size_t>(k)].kept_count);
    ++k;
  }
  EXPECT_EQ(k, 7);
}

TEST(Bench, AdaptiveRowsReachZeroAndMatchFull)
{
  const auto sc = di();
  BenchConfig cfg;
  cfg.modes = {SimMode::Full, SimMode::WarmStart, SimMode::AdaptiveOnline};
  cfg.draws = 4;
  cfg.steps = 100;
  const auto res = run_bench(sc, cfg);
  EXPECT_EQ(res.equivalence_violations, 0);
  EXPECT_TRUE(res.failures.empty());
  ASSERT_EQ(res.rows.size(), 300u);
  const MetricsRow * last = nullptr;
  double first_window = 0.0, last_window = 0.0;
  for (const auto & r : res.rows) {
    if (r.mode == SimMode::Full) { EXPECT_DOUBLE_EQ(r.time_pct, 100.0); }
    if (r.mode != SimMode::AdaptiveOnline) { continue; }
    EXPECT_GE(r.kept_pct, 0.0);
    EXPECT_LE(r.kept_pct, 100.0);
    if (r.k < 10) { first_window += r.kept_pct; }
    if (r.k >= 90) { last_window += r.kept_pct; }
    last = &r;
  }
  ASSERT_NE(last, nullptr);
  EXPECT_EQ(last->kept_mean, 0.0);
  EXPECT_LT(last_window, first_window);
}

TEST(Bench, DeterministicApartFromTiming)
{
  const auto sc = di();
  BenchConfig cfg;
  cfg.modes           = {SimMode::AdaptiveOnline, SimMode::OfflineNearest};
  cfg.draws           = 3;
  cfg.steps           = 20;
  cfg.seed            = 9;
  cfg.offline_spacing = 0.5;
  const auto a = metrics_csv(run_bench(sc, cfg).rows);
  const auto b = metrics_csv(run_bench(sc, cfg).rows);
  EXPECT_EQ(a.substr(0, a.find('\n')), "k,mode,kept_mean,kept_pct,time_pct,iters_mean");
  EXPECT_EQ(without_timing(a), without_timing(b));
  cfg.seed = 10;
  EXPECT_NE(without_timing(a), without_timing(metrics_csv(run_bench(sc, cfg).rows)));
}

TEST(Bench, ConfigurationErrors)
{
  const auto sc = di();
  BenchConfig cfg;
  cfg.steps = 0;
  EXPECT_THROW(run_bench(sc, cfg), Error);
  cfg.steps = 5;
  cfg.modes = {SimMode::Hybrid};
  EXPECT_THROW(run_bench(sc, cfg), Error);
  cfg.modes        = {SimMode::AdaptiveOnline};
  cfg.kappa_source = KappaSource::User;
  cfg.kappa_user   = -1.0;
  EXPECT_THROW(run_bench(sc, cfg), Error);
  EXPECT_EQ(parse_kappa_source("scaled-formula"), KappaSource::ScaledFormula);
}

TEST(Bench, UnderestimatedKappaIsDetected)
{
  const auto sc = di();
  BenchConfig cfg;
  cfg.modes        = {SimMode::AdaptiveOnline};
  cfg.draws        = 5;
  cfg.steps        = 30;
  cfg.kappa_source = KappaSource::User;
  cfg.kappa_user   = 0.0;
  const auto res   = run_bench(sc, cfg);
  EXPECT_GT(res.equivalence_violations, 0);
}

TEST(Verify, ExampleAndCondensationPass)
{
  for (int id : {1, 8}) {
    const auto r = run_criteria({id}).front();
    EXPECT_TRUE(r.passed) << format_result(r);
    EXPECT_EQ(format_result(r).rfind("PASS  criterion " + std::to_string(id), 0), 0u);
  }
  EXPECT_THROW(run_criteria({9}), Error);
}

TEST(Verify, ZeroKappaBreaksSafety)
{
  VerifyOptions o;
  o.size        = 0.2;
  EXPECT_TRUE(criterion_zero_gap(o).passed);
  o.kappa_scale = 0.0;
  const auto r  = criterion_zero_gap(o);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.detail.find("gap"), std::string::npos);
}
