#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mptrim/lipschitz.hpp"
#include "mptrim/mpc.hpp"

namespace mptrim {

enum class KappaSource { Formula, ScaledFormula, User };

inline std::string_view to_string(KappaSource s)
{
  switch (s) {
    case KappaSource::Formula: return "formula";
    case KappaSource::ScaledFormula: return "scaled-formula";
    case KappaSource::User: return "user";
  }
  return "?";
}

inline KappaSource parse_kappa_source(std::string_view s)
{
  for (auto k : {KappaSource::Formula, KappaSource::ScaledFormula, KappaSource::User}) {
    if (to_string(k) == s) { return k; }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown kappa source: " + std::string(s));
}

struct BenchConfig
{
  std::vector<SimMode> modes{SimMode::Full, SimMode::WarmStart, SimMode::AdaptiveOnline};
  int draws          = 20;
  int steps          = 100;
  std::uint64_t seed = 1;
  KappaSource kappa_source = KappaSource::ScaledFormula;
  double kappa_user        = 0.0;
  /// Lattice spacing of the offline dataset; needed by the offline and hybrid modes.
  std::optional<double> offline_spacing;
  SimOptions sim;
  double equivalence_tol = 1e-8;
};

struct MetricsRow
{
  int k = 0;
  SimMode mode = SimMode::Full;
  double kept_mean  = 0.0;
  double kept_pct   = 0.0;
  double time_pct   = 0.0;
  double iters_mean = 0.0;
  int runs          = 0;  ///< completed runs that reached step k
};

struct BenchResult
{
  double kappa = 0.0;
  Index n_c    = 0;
  std::vector<Vector> x0;
  std::map<SimMode, std::vector<ClosedLoopTrace>> traces;  ///< one per draw, in draw order
  std::vector<MetricsRow> rows;                            ///< configured modes in order, then k
  std::vector<std::string> failures;                       ///< per-run problems; the run continues
  int equivalence_violations = 0;
};

inline double bench_kappa(const MpcScenario & sc, const BenchConfig & cfg)
{
  switch (cfg.kappa_source) {
    case KappaSource::Formula: return glc(sc.condensed).kappa;
    case KappaSource::ScaledFormula: return glc_scaled(sc.condensed, phi_default(sc.condensed)).kappa;
    case KappaSource::User: detail::check_kappa(cfg.kappa_user); return cfg.kappa_user;
  }
  return 0.0;
}

/**
 * @brief Closed-loop runs of every mode from `draws` feasible initial states.
 *
 * Full mode always runs and is the wall-time baseline. Trimmed trajectories
 * are compared with Full step by step.
 */
inline BenchResult run_bench(const MpcScenario & sc, const BenchConfig & cfg)
{
  if (cfg.steps < 1) { throw Error(ErrorCode::InvalidArgument, "bench: steps must be at least 1"); }
  if (cfg.draws < 1) { throw Error(ErrorCode::InvalidArgument, "bench: draws must be at least 1"); }
  if (cfg.modes.empty()) { throw Error(ErrorCode::InvalidArgument, "bench: no mode selected"); }
  BenchResult res;
  res.kappa = bench_kappa(sc, cfg);
  res.n_c   = sc.condensed.n_c();
  res.x0    = sample_feasible_states(sc, cfg.draws, cfg.seed);
  if (res.x0.empty()) { throw Error(ErrorCode::NoFeasibleSamples, "bench: no feasible initial states"); }

  std::vector<SimMode> modes{SimMode::Full};
  for (auto m : cfg.modes) {
    if (std::find(modes.begin(), modes.end(), m) == modes.end()) { modes.push_back(m); }
  }
  std::optional<OfflineDataset> offline;
  for (auto m : modes) {
    if ((m == SimMode::OfflineNearest || m == SimMode::Hybrid) && !offline) {
      if (!cfg.offline_spacing) { throw Error(ErrorCode::InvalidArgument, "bench: offline modes need a grid spacing"); }
      offline = build_offline_dataset(sc, *cfg.offline_spacing);
    }
  }

  for (auto m : modes) {
    auto & runs = res.traces[m];
    for (std::size_t d = 0; d < res.x0.size(); ++d) {
      runs.push_back(simulate(sc, res.x0[d], cfg.steps, m, res.kappa, offline ? &*offline : nullptr, cfg.sim));
      if (runs.back().status != TraceStatus::Completed) {
        res.failures.push_back(std::string(to_string(m)) + " draw " + std::to_string(d) + ": " + runs.back().message);
      }
    }
  }

  const auto & full = res.traces[SimMode::Full];
  for (auto m : modes) {
    if (m == SimMode::Full) { continue; }
    const auto & runs = res.traces[m];
    for (std::size_t d = 0; d < runs.size(); ++d) {
      if (full[d].status != TraceStatus::Completed) { continue; }
      bool same = runs[d].steps.size() == full[d].steps.size();
      for (std::size_t k = 0; same && k < runs[d].steps.size(); ++k) {
        same = (runs[d].steps[k].x - full[d].steps[k].x).norm() <= cfg.equivalence_tol &&
               (runs[d].steps[k].u - full[d].steps[k].u).norm() <= cfg.equivalence_tol;
      }
      if (!same) {
        ++res.equivalence_violations;
        res.failures.push_back(std::string(to_string(m)) + " draw " + std::to_string(d) + ": trajectory differs from full mode");
      }
    }
  }

  // per-step mean wall time of Full over completed runs
  std::vector<double> base(static_cast<std::size_t>(cfg.steps), 0.0);
  std::vector<int> base_n(static_cast<std::size_t>(cfg.steps), 0);
  for (const auto & tr : full) {
    if (tr.status != TraceStatus::Completed) { continue; }
    for (const auto & s : tr.steps) {
      base[static_cast<std::size_t>(s.k)] += s.wall_time;
      ++base_n[static_cast<std::size_t>(s.k)];
    }
  }
  for (auto m : cfg.modes) {
    for (int k = 0; k < cfg.steps; ++k) {
      MetricsRow row;
      row.k    = k;
      row.mode = m;
      double t = 0.0;
      for (const auto & tr : res.traces[m]) {
        if (tr.status != TraceStatus::Completed) { continue; }
        const auto & s = tr.steps[static_cast<std::size_t>(k)];
        row.kept_mean += static_cast<double>(s.kept_count);
        row.iters_mean += s.iterations;
        t += s.wall_time;
        ++row.runs;
      }
      if (row.runs > 0) {
        row.kept_mean /= row.runs;
        row.iters_mean /= row.runs;
        t /= row.runs;
        row.kept_pct = res.n_c > 0 ? 100.0 * row.kept_mean / static_cast<double>(res.n_c) : 0.0;
        const auto kk = static_cast<std::size_t>(k);
        const double b = base_n[kk] > 0 ? base[kk] / base_n[kk] : 0.0;
        row.time_pct   = b > 0.0 ? 100.0 * t / b : 0.0;
      }
      res.rows.push_back(row);
    }
  }
  return res;
}

/// Columns k,mode,kept_mean,kept_pct,time_pct,iters_mean; modes in configuration order.
inline std::string metrics_csv(const std::vector<MetricsRow> & rows)
{
  std::string out = "k,mode,kept_mean,kept_pct,time_pct,iters_mean\n";
  char buf[256];
  for (const auto & r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.10g,%.10g,%.6g,%.10g\n", r.k, std::string(to_string(r.mode)).c_str(),
      r.kept_mean, r.kept_pct, r.time_pct, r.iters_mean);
    out += buf;
  }
  return out;
}

}  // namespace mptrim
