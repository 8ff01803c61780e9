#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mptrim/closeness.hpp"
#include "mptrim/generators.hpp"
#include "mptrim/lipschitz.hpp"
#include "mptrim/mpc.hpp"
#include "mptrim/oracles.hpp"
#include "mptrim/scenarios.hpp"
#include "mptrim/trim.hpp"

namespace mptrim {

struct VerifyOptions
{
  std::uint64_t seed = 1;
  /// Multiplies every κ handed to the trimming routines; values below 1 void the certificate.
  double kappa_scale = 1.0;
  /// Fraction of the instance counts to run; 1 is the full acceptance run.
  double size = 1.0;
};

struct CriterionResult
{
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds       = 0.0;
  double limit_seconds = 0.0;  ///< 0 = no runtime gate
};

namespace detail {

inline int scaled_count(int n, const VerifyOptions & o) { return std::max(1, static_cast<int>(std::lround(n * o.size))); }

// Collects sub-check outcomes into one verdict and a short summary.
class Verdict
{
public:
  void check(bool ok, const std::string & what)
  {
    if (!ok) {
      passed_ = false;
      if (failures_++ < 5) { notes_ << (notes_.tellp() > 0 ? "; " : "") << what; }
    }
  }
  void note(const std::string & s) { info_ << (info_.tellp() > 0 ? ", " : "") << s; }
  bool passed() const { return passed_; }
  std::string text() const
  {
    std::string s = info_.str();
    if (!passed_) { s += (s.empty() ? "" : " | ") + std::string("failed: ") + notes_.str() + (failures_ > 5 ? " ..." : ""); }
    return s;
  }

private:
  bool passed_  = true;
  int failures_ = 0;
  std::ostringstream notes_, info_;
};

inline CriterionResult timed(int id, std::string name, double limit, const std::function<void(Verdict &)> & body)
{
  CriterionResult r;
  r.id            = id;
  r.name          = std::move(name);
  r.limit_seconds = limit;
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception & e) {
    v.check(false, std::string("exception: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit > 0.0) { v.check(r.seconds < limit, "runtime " + std::to_string(r.seconds) + " s over limit"); }
  r.passed = v.passed();
  r.detail = v.text();
  return r;
}

inline std::string fmt(double v)
{
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

struct TrimCase
{
  MpQp p;
  std::vector<SolvedSample> samples;
  Vector x;
};

// Samples scattered around x at length scales 1e-4 .. 1 so that rows get removed.
inline std::optional<TrimCase> random_trim_case(std::mt19937_64 & rng, Index nz, Index nc, int q)
{
  TrimCase c;
  c.p = random_mpqp(rng, {nz, 2, nc});
  const QpSolver solver(c.p);
  const auto x = sample_feasible_x(solver, rng, 1.5);
  if (!x) { return std::nullopt; }
  c.x = *x;
  std::uniform_real_distribution<double> logscale(-4.0, 0.0);
  for (int k = 0; k < q; ++k) {
    const Vector xh = c.x + uniform_in_box(rng, 2, std::pow(10.0, logscale(rng)));
    auto s          = solve_sample(solver, xh);
    if (!s) { return std::nullopt; }
    c.samples.push_back(std::move(*s));
  }
  return c;
}

inline std::vector<Vector> rollout_states(const MpcScenario & sc, const Vector & x, const Vector & z)
{
  std::vector<Vector> xs{x};
  for (int t = 0; t < sc.N; ++t) { xs.push_back(sc.A * xs.back() + sc.B * z.segment(t * sc.m(), sc.m())); }
  return xs;
}

inline int first_zero_step(const ClosedLoopTrace & tr)
{
  for (const auto & s : tr.steps) {
    if (s.kept_count == 0) { return s.k; }
  }
  return -1;
}

inline bool stays_zero_after(const ClosedLoopTrace & tr, int k0)
{
  for (const auto & s : tr.steps) {
    if (s.k >= k0 && s.kept_count != 0) { return false; }
  }
  return true;
}

inline bool same_trajectory(const ClosedLoopTrace & a, const ClosedLoopTrace & b, double tol)
{
  if (a.status != TraceStatus::Completed || b.status != TraceStatus::Completed || a.steps.size() != b.steps.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    if ((a.steps[k].x - b.steps[k].x).norm() > tol || (a.steps[k].u - b.steps[k].u).norm() > tol) { return false; }
  }
  return true;
}

}  // namespace detail

/// Scalar two-row example: published minimizers, active sets and trimmed sets at x = −2.
inline CriterionResult criterion_example(const VerifyOptions & o = {})
{
  return detail::timed(1, "scalar example golden values", 1.0, [&](detail::Verdict & v) {
    const MpQp p = scalar_two_row_example();
    const QpSolver solver(p);
    auto at            = [](double x) { return Vector::Constant(1, x); };
    // κ = 1 is a valid constant here: the minimizer is piecewise affine with slopes −1/2, 1 and −1
    const double kappa = 1.0 * o.kappa_scale;
    const auto s1      = solve_sample(solver, at(-1));
    const auto s3      = solve_sample(solver, at(-3));
    v.check(s1 && std::abs(s1->z_star(0) + 3.0) <= 1e-9 && s1->active == IndexSet{1}, "z*(-1) = -3 with active {1}");
    v.check(s3 && std::abs(s3->z_star(0) + 3.0) <= 1e-9 && s3->active == IndexSet{0}, "z*(-3) = -3 with active {0}");
    if (!s1 || !s3) { return; }
    const auto o1 = trim_single(p, kappa, *s1, at(-2));
    const auto o3 = trim_single(p, kappa, *s3, at(-2));
    v.check(o1.kept == IndexSet{1}, "I1(-2) = {1}");
    v.check(o3.kept == IndexSet{0}, "I2(-2) = {0}");
    for (const auto * out : {&o1, &o3}) {
      const auto s = solver.solve(at(-2), out->kept);
      v.check(s.status == QpStatus::Optimal && std::abs(s.z_star(0) + 2.0) <= 1e-9, "trimmed z*(-2) = -2");
    }
    const auto naive = solver.solve(at(-2), o1.kept & o3.kept);
    v.check(naive.status == QpStatus::Optimal && std::abs(naive.z_star(0) - 1.0) <= 1e-9, "empty intersection gives z = 1");
    v.note("kappa " + detail::fmt(kappa));
  });
}

/// Zero optimality gap of single- and multi-sample trimming with κ from the closed-form bound.
inline CriterionResult criterion_zero_gap(const VerifyOptions & o = {})
{
  return detail::timed(2, "zero optimality gap", 60.0, [&](detail::Verdict & v) {
    std::mt19937_64 rng(o.seed * 1000003 + 2);
    const int target = detail::scaled_count(500, o);
    int done = 0, multi = 0, attempts = 0, removed = 0;
    while (done < target && attempts < 20 * target) {
      const int t  = attempts++;
      const int q  = t % 2 == 0 ? 1 : 2 + (t / 2) % 4;
      const auto c = detail::random_trim_case(rng, 1 + t % 8, 4 + (7 * t) % 37, q);
      if (!c) { continue; }
      const QpSolver solver(c->p);
      const auto full = solver.solve(c->x, IndexSet::range(c->p.n_c()));
      if (full.status != QpStatus::Optimal) { continue; }
      const double kappa = glc(c->p).kappa * o.kappa_scale;
      TrimOutcome out;
      if (q == 1) {
        out = trim_single(c->p, kappa, c->samples[0], c->x);
      } else {
        bool licq = licq_holds(c->p, full.active);
        for (const auto & s : c->samples) { licq = licq && licq_holds(c->p, s.active); }
        if (!licq) { continue; }
        TrimOptions to;
        to.assume_licq = true;
        out            = trim_multi(c->p, kappa, c->samples, c->x, to);
        ++multi;
      }
      ++done;
      removed += !out.removed.empty();
      const auto trimmed = solver.solve(c->x, out.kept);
      const bool ok      = trimmed.status == QpStatus::Optimal &&
                      (trimmed.z_star - full.z_star).norm() <= 1e-6 * (1.0 + full.z_star.norm());
      v.check(ok, "gap on instance " + std::to_string(t) + (q > 1 ? " (multi)" : " (single)"));
    }
    v.check(done == target, "only " + std::to_string(done) + " instances generated");
    v.note(std::to_string(done) + " instances, " + std::to_string(multi) + " multi-sample, " + std::to_string(removed) +
           " with removals");
  });
}

/// Sampled Lipschitz ratios stay below the closed-form and scaled constants.
inline CriterionResult criterion_glc_soundness(const VerifyOptions & o = {})
{
  return detail::timed(3, "GLC soundness", 120.0, [&](detail::Verdict & v) {
    std::mt19937_64 rng(o.seed * 1000003 + 3);
    const int n   = detail::scaled_count(50, o);
    double margin = kInf;
    for (int t = 0; t < n; ++t) {
      const MpQp p = random_mpqp(rng, {1 + t % 4, 1 + t % 3, 3 + t % 8});
      LipschitzSampling ls;
      ls.parameter_box  = Box::uniform(p.n_x(), -1.5, 1.5);
      const double emp  = empirical_lipschitz(p, 200, o.seed + static_cast<std::uint64_t>(t), ls);
      const double k1   = glc(p).kappa * o.kappa_scale;
      const double k2   = glc_scaled(p, phi_default(p)).kappa * o.kappa_scale;
      const double m    = std::min(k1, k2) - emp;
      margin            = std::min(margin, m);
      v.check(m >= -1e-6, "instance " + std::to_string(t) + ": empirical " + detail::fmt(emp) + " above " + detail::fmt(std::min(k1, k2)));
    }
    const MpQp ex = scalar_two_row_example();
    LipschitzSampling ls;
    ls.parameter_box   = Box::uniform(1, -6.0, 6.0);
    const double ratio = empirical_lipschitz(ex, 2000, o.seed, ls) / (glc(ex).kappa * o.kappa_scale);
    v.check(ratio <= 1.0 + 1e-6, "scalar example ratio " + detail::fmt(ratio));
    v.note(std::to_string(n) + " instances, min margin " + detail::fmt(margin) + ", example ratio " + detail::fmt(ratio));
  });
}

/// σ_i from the MILP against a dense grid, monotone tables, and the two containment properties.
inline CriterionResult criterion_sigma_exactness(const VerifyOptions & o = {})
{
  return detail::timed(4, "sigma exactness", 600.0, [&](detail::Verdict & v) {
    std::mt19937_64 rng(o.seed * 1000003 + 4);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int n_poly = detail::scaled_count(20, o);
    const int per    = std::max(1, detail::scaled_count(10000, o) / n_poly);
    double worst = 0.0;
    long counted = 0;
    for (int t = 0; t < n_poly; ++t) {
      const Index nx = 1 + (t % 4 == 3), nz = 1 + (t % 4 == 1);
      const Index nc = 4 + t % 7;
      const MpQp p   = random_lifted_mpqp(rng, nx, nz, nc);
      const auto L   = lift(p, Box::uniform(nx + nz, -1.5, 1.5));
      const auto g   = grid_sigma(L, L.dim() == 2 ? 1e-3 : 4e-3);
      const auto tab = sigma_table(L, nc - 1);
      double prev    = 0.0;
      for (const auto & [i, s] : tab.sigma) {
        const double gap = std::abs(s - g.sigma[static_cast<std::size_t>(i)]);
        worst            = std::max(worst, gap);
        v.check(gap <= 5e-3, "polyhedron " + std::to_string(t) + " i=" + std::to_string(i) + " differs by " + detail::fmt(gap));
        v.check(s >= prev - 1e-12, "polyhedron " + std::to_string(t) + " table not monotone at i=" + std::to_string(i));
        prev = s;
      }
      const auto pts = sample_lifted_points(L, per, o.seed + static_cast<std::uint64_t>(t));
      for (const auto & pt : pts) {
        const int i    = 1 + static_cast<int>(u01(rng) * static_cast<double>(nc - 1)) % static_cast<int>(nc - 1);
        const double r = tab.sigma.at(i) * u01(rng);
        v.check(containment_count(L, pt, r) >= nc - i, "count property at polyhedron " + std::to_string(t));
        ++counted;
      }
    }
    const int n_trim = detail::scaled_count(1000, o);
    int trims = 0, attempts = 0;
    while (trims < n_trim && attempts < 10 * n_trim) {
      const int t  = attempts++;
      const MpQp p = random_mpqp(rng, {1 + t % 4, 1 + t % 3, 4 + t % 12});
      const QpSolver solver(p);
      const auto x  = sample_feasible_x(solver, rng, 1.5);
      const auto xh = sample_feasible_x(solver, rng, 1.5);
      if (!x || !xh) { continue; }
      const Vector xn = *x + (*xh - *x) * std::pow(10.0, -3.0 * u01(rng));
      const auto s    = solve_sample(solver, xn);
      if (!s) { continue; }
      v.check(lifted_containment_violations(p, glc(p).kappa * o.kappa_scale, *s, *x).empty(),
        "ball containment without removal at trim " + std::to_string(t));
      ++trims;
    }
    v.check(trims == n_trim, "only " + std::to_string(trims) + " trim configurations");
    v.note(std::to_string(n_poly) + " polyhedra, max |milp - grid| " + detail::fmt(worst) + ", " + std::to_string(counted) +
           " count samples, " + std::to_string(trims) + " trim configurations");
  });
}

/// Kept count ≤ n_z + i whenever ‖x − x̂‖ ≤ σ_i/√(1+κ²) under LICQ.
inline CriterionResult criterion_cardinality(const VerifyOptions & o = {})
{
  return detail::timed(5, "cardinality bound", 0.0, [&](detail::Verdict & v) {
    std::mt19937_64 rng(o.seed * 1000003 + 5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int target = detail::scaled_count(100, o);
    int done = 0, attempts = 0, checks = 0;
    while (done < target && attempts < 50 * target) {
      ++attempts;
      const MpQp p = random_lifted_mpqp(rng, 1, 2, 6);
      Matrix Hl(p.n_c(), 3);
      Hl << -p.S, p.G;
      Box box;
      try {
        box = lifted_bounding_box(Hl, p.w);
      } catch (const Error &) {
        continue;
      }
      const QpSolver solver(p);
      const auto xh = sample_feasible_x(solver, rng, 1.0);
      if (!xh) { continue; }
      const auto s = solve_sample(solver, *xh);
      if (!s || !licq_holds(p, s->active)) { continue; }
      const auto tab     = sigma_table(lift(p, box), p.n_c() - 1);
      const double kappa = glc(p).kappa * o.kappa_scale;
      const double lip   = std::sqrt(1.0 + glc(p).kappa * glc(p).kappa);
      bool any           = false;
      for (const auto & [i, sig] : tab.sigma) {
        const double r = sig / lip * (u01(rng) < 0.5 ? 1.0 : u01(rng));
        if (!(r > 0.0)) { continue; }
        const Vector x = *xh + r * Vector::Constant(1, gauss(rng) < 0 ? -1.0 : 1.0);
        if (!solve_sample(solver, x)) { continue; }
        const auto out = trim_single(p, kappa, *s, x);
        v.check(static_cast<Index>(out.kept.size()) <= p.n_z() + i,
          "kept " + std::to_string(out.kept.size()) + " > " + std::to_string(p.n_z() + i));
        any = true;
        ++checks;
      }
      done += any;
    }
    v.check(done == target, "only " + std::to_string(done) + " instances generated");
    v.note(std::to_string(done) + " instances, " + std::to_string(checks) + " (instance, i) checks");
  });
}

/// Double-integrator closed loop for N = 5 and 10: equivalence, terminal emptiness, offline cardinality.
inline CriterionResult criterion_closed_loop(const VerifyOptions & o = {})
{
  return detail::timed(6, "double integrator closed loop", 300.0, [&](detail::Verdict & v) {
    const int draws = detail::scaled_count(20, o);
    for (const int N : {5, 10}) {
      DoubleIntegratorSpec spec;
      spec.N             = N;
      const auto sc      = make_scenario(double_integrator(spec));
      const MpQp & p     = sc.condensed;
      const double kappa = glc_scaled(p, phi_default(p)).kappa * o.kappa_scale;
      const std::string tag = "N=" + std::to_string(N) + ": ";

      // closeness level for the offline check and a lattice fine enough for it
      const Index i     = N == 5 ? 15 : 55;
      MilpOptions mo;
      mo.node_limit     = 20000;
      const auto sig    = sigma_milp_report(lift_scenario(sc), i, mo);
      const double sigma = sig.lower_bound;
      const double h     = 1.0 / std::ceil(std::sqrt(2.0) / (2.0 * sigma));
      const auto D       = build_offline_dataset(sc, h);
      v.note(tag + "n_c " + std::to_string(p.n_c()) + ", kappa " + detail::fmt(kappa) + ", sigma_" + std::to_string(i) +
             " >= " + detail::fmt(sigma) + ", grid " + detail::fmt(h) + " coverage " + detail::fmt(D.coverage) +
             (D.coverage_estimated ? " (sampled)" : ""));

      const auto x0s = sample_feasible_states(sc, draws, o.seed + static_cast<std::uint64_t>(N));
      v.check(static_cast<int>(x0s.size()) == draws, tag + "not enough initial states");
      int worst_first = 0;
      long worst_kept = 0, over = 0, offline_steps = 0;
      for (std::size_t d = 0; d < x0s.size(); ++d) {
        const std::string at = tag + "draw " + std::to_string(d) + ": ";
        const auto full      = simulate(sc, x0s[d], 100, SimMode::Full, kappa, &D);
        v.check(full.status == TraceStatus::Completed, at + "full mode " + full.message);
        ClosedLoopTrace adaptive, offline;
        for (auto m : {SimMode::WarmStart, SimMode::AdaptiveOnline, SimMode::OfflineNearest, SimMode::Hybrid}) {
          auto tr = simulate(sc, x0s[d], 100, m, kappa, &D);
          v.check(detail::same_trajectory(tr, full, 1e-8), "(a) " + at + std::string(to_string(m)) + " differs from full");
          if (m == SimMode::AdaptiveOnline) { adaptive = std::move(tr); }
          if (m == SimMode::OfflineNearest) { offline = std::move(tr); }
        }
        // (b)
        const int fz = detail::first_zero_step(adaptive);
        v.check(fz >= 0 && detail::stays_zero_after(adaptive, fz), "(b) " + at + "kept count does not settle at 0");
        if (fz >= 0 && x0s[d].norm() > 0.0) {
          const auto fit = estimate_decay(full);
          const auto hb  = horizon_bounds(fit.c, fit.beta, x0s[d].norm(), kappa, p, SigmaTable{});
          v.check(fz <= std::max(1L, hb.K_hat), "(b) " + at + "first zero " + std::to_string(fz) + " after bound " + std::to_string(hb.K_hat));
          worst_first = std::max(worst_first, fz);
        }
        // (c)
        for (const auto & s : offline.steps) {
          worst_kept = std::max<long>(worst_kept, static_cast<long>(s.kept_count));
          over += s.kept_count > p.n_z() + i;
          ++offline_steps;
        }
      }
      v.check(D.coverage <= sigma, "(c) " + tag + "grid coverage above sigma");
      v.check(over == 0, "(c) " + tag + "offline mode above n_z + i at " + std::to_string(over) + " of " + std::to_string(offline_steps) +
                           " steps (max kept " + std::to_string(worst_kept) + ", bound " + std::to_string(p.n_z() + i) + ")");
      v.note(tag + "latest first-zero step " + std::to_string(worst_first) + ", offline max kept " + std::to_string(worst_kept) +
             " vs bound " + std::to_string(p.n_z() + i));
    }
  });
}

/// Three-mass chain, N = 10: completion, shrinking constraint share ending at 0, equivalence.
inline CriterionResult criterion_oscillating_masses(const VerifyOptions & o = {})
{
  return detail::timed(7, "reduced oscillating masses", 600.0, [&](detail::Verdict & v) {
    OscillatingMassSpec spec;
    spec.n_masses      = 3;
    spec.n_actuators   = 2;
    spec.N             = 10;
    const auto sc      = make_scenario(oscillating_masses(spec));
    const MpQp & p     = sc.condensed;
    const double kappa = glc_scaled(p, phi_default(p)).kappa * o.kappa_scale;
    const int steps    = 50;
    const auto x0s     = sample_feasible_states(sc, detail::scaled_count(5, o), o.seed + 7);
    std::vector<double> pct(steps, 0.0);
    for (std::size_t d = 0; d < x0s.size(); ++d) {
      const std::string at = "draw " + std::to_string(d) + ": ";
      const auto full      = simulate(sc, x0s[d], steps, SimMode::Full, kappa);
      v.check(full.status == TraceStatus::Completed, at + "full mode " + full.message);
      for (auto m : {SimMode::WarmStart, SimMode::AdaptiveOnline}) {
        const auto tr = simulate(sc, x0s[d], steps, m, kappa);
        v.check(tr.status == TraceStatus::Completed, at + std::string(to_string(m)) + " " + tr.message);
        v.check(detail::same_trajectory(tr, full, 1e-8), at + std::string(to_string(m)) + " differs from full");
        if (m == SimMode::AdaptiveOnline && tr.status == TraceStatus::Completed) {
          for (const auto & s : tr.steps) {
            pct[static_cast<std::size_t>(s.k)] += 100.0 * static_cast<double>(s.kept_count) / static_cast<double>(p.n_c()) /
                                                   static_cast<double>(x0s.size());
          }
        }
      }
    }
    std::ostringstream windows;
    double prev = kInf;
    for (int w = 0; w < steps / 10; ++w) {
      double mean = 0.0;
      for (int k = 10 * w; k < 10 * w + 10; ++k) { mean += pct[static_cast<std::size_t>(k)] / 10.0; }
      v.check(mean <= prev + 1e-12, "window " + std::to_string(w) + " mean rises");
      windows << (w ? " " : "") << detail::fmt(mean);
      prev = mean;
    }
    v.check(pct.back() == 0.0, "final constraint share " + detail::fmt(pct.back()) + "% instead of 0");
    v.note("n_c " + std::to_string(p.n_c()) + ", terminal rows " + std::to_string(sc.XN.rows()) + ", kappa " + detail::fmt(kappa) +
           ", window means % [" + windows.str() + "]");
  });
}

/// Condensed cost and constraints against a forward roll-out of the dynamics.
inline CriterionResult criterion_condensation(const VerifyOptions & o = {})
{
  return detail::timed(8, "condensation oracle", 0.0, [&](detail::Verdict & v) {
    std::vector<MpcScenario> scs;
    for (int N : {5, 10}) {
      DoubleIntegratorSpec s;
      s.N = N;
      scs.push_back(make_scenario(double_integrator(s)));
    }
    OscillatingMassSpec ms;
    ms.n_masses    = 3;
    ms.n_actuators = 2;
    ms.N           = 10;
    scs.push_back(make_scenario(oscillating_masses(ms)));
    std::mt19937_64 rng(o.seed * 1000003 + 8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = detail::scaled_count(100, o);
    for (const auto & sc : scs) {
      const MpQp & p = sc.condensed;
      double worst   = 0.0;
      for (int t = 0; t < n; ++t) {
        Vector x(sc.n()), z(p.n_z());
        for (Index a = 0; a < x.size(); ++a) { x(a) = gauss(rng); }
        for (Index a = 0; a < z.size(); ++a) { z(a) = gauss(rng); }
        const auto xs = detail::rollout_states(sc, x, z);
        double J      = 0.0;
        for (int k = 0; k < sc.N; ++k) {
          const Vector u = z.segment(k * sc.m(), sc.m());
          J += xs[static_cast<std::size_t>(k)].dot(sc.Q * xs[static_cast<std::size_t>(k)]) + u.dot(sc.R * u);
        }
        J += xs.back().dot(sc.P * xs.back());
        const double V = p.objective(x, z) + x.dot(sc.cost_x * x);
        const double e = std::abs(V - J) / std::max(1.0, std::abs(J));
        worst          = std::max(worst, e);
        v.check(e <= 1e-9, sc.name + ": cost differs by " + detail::fmt(e));
        const Vector g = p.G * z - p.rhs(x);
        for (Index j = 0; j < p.n_c(); ++j) {
          const auto & org = sc.origin[static_cast<std::size_t>(j)];
          double r         = 0.0;
          switch (org.kind) {
            case RowKind::State: r = sc.X.C.row(org.row).dot(xs[static_cast<std::size_t>(org.stage)]) - sc.X.d(org.row); break;
            case RowKind::Input: r = sc.U.C.row(org.row).dot(z.segment(org.stage * sc.m(), sc.m())) - sc.U.d(org.row); break;
            case RowKind::Terminal: r = sc.XN.C.row(org.row).dot(xs.back()) - sc.XN.d(org.row); break;
          }
          const double e2 = std::abs(g(j) - r) / (1.0 + std::abs(r));
          worst           = std::max(worst, e2);
          v.check(e2 <= 1e-9, sc.name + ": row " + std::to_string(j) + " differs by " + detail::fmt(e2));
        }
        v.check(sc.stripped.contains(x, 0.0) == sc.X.contains(x, 0.0), sc.name + ": stripped rows differ from the state set");
      }
      v.note(sc.name + " worst relative error " + detail::fmt(worst));
    }
  });
}

inline std::vector<CriterionResult> run_criteria(const std::vector<int> & ids, const VerifyOptions & o = {})
{
  using Fn = CriterionResult (*)(const VerifyOptions &);
  const Fn table[] = {criterion_example, criterion_zero_gap, criterion_glc_soundness, criterion_sigma_exactness,
    criterion_cardinality, criterion_closed_loop, criterion_oscillating_masses, criterion_condensation};
  std::vector<CriterionResult> out;
  for (int id : ids) {
    if (id < 1 || id > 8) { throw Error(ErrorCode::InvalidArgument, "verify: unknown criterion " + std::to_string(id)); }
    out.push_back(table[id - 1](o));
  }
  return out;
}

inline std::string format_result(const CriterionResult & r)
{
  std::ostringstream s;
  s << (r.passed ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.name << "  (" << detail::fmt(r.seconds) << " s)";
  if (!r.detail.empty()) { s << "  " << r.detail; }
  return s.str();
}

}  // namespace mptrim
