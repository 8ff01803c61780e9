#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mptrim/mptrim.hpp"

using namespace mptrim;
namespace fs = std::filesystem;

namespace {

struct Globals
{
  std::uint64_t seed = 1;
  std::string out;
  std::string tol_profile = "default";

  Tolerances tol() const { return tol_profile == "strict" ? Tolerances::strict() : Tolerances::standard(); }
};

void emit(const Globals & g, const std::string & text)
{
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

void emit(const Globals & g, const json & j) { emit(g, j.dump(2) + "\n"); }

Vector to_vector(const std::vector<double> & v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

Vector parameter_or_zero(const std::vector<double> & v, Index n)
{
  if (v.empty()) { return Vector::Zero(n); }
  if (static_cast<Index>(v.size()) != n) { throw Error(ErrorCode::DimensionMismatch, "x has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n)); }
  return to_vector(v);
}

double kappa_for(const MpQp & p, const std::string & source, double user)
{
  if (source == "formula") { return glc(p).kappa; }
  if (source == "scaled-formula") { return glc_scaled(p, phi_default(p)).kappa; }
  if (source == "enumerated") { return glc_enumerated(p); }
  if (source == "user") {
    detail::check_kappa(user);
    return user;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown kappa source " + source);
}

// "0:1,2:1" → actuators (0 against 1) and (2 against 1); "3" alone pushes mass 3 only.
std::vector<Actuator> parse_topology(const std::string & s)
{
  std::vector<Actuator> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    Actuator a;
    a.first = std::stoi(item.substr(0, colon));
    if (colon != std::string::npos) { a.second = std::stoi(item.substr(colon + 1)); }
    out.push_back(a);
  }
  return out;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Constraint trimming for parametric QPs and linear MPC"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out", g.out, "output file (directory for bench); stdout when absent");
  app.add_option("--tol-profile", g.tol_profile, "tolerance profile")->check(CLI::IsMember({"default", "strict"}))->capture_default_str();

  // solve
  std::string problem_path, samples_path, scenario_path, box_path, cache_dir;
  std::vector<double> xv;
  std::vector<int> indices;
  bool all_rows = true;
  auto * solve = app.add_subcommand("solve", "solve the QP at one parameter");
  solve->add_option("problem", problem_path, "problem JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--x", xv, "parameter vector")->delimiter(',');
  solve->add_option("--rows", indices, "restrict to these rows (0-based)")->delimiter(',');

  // trim
  std::string kappa_source = "formula";
  double kappa_user        = 0.0;
  bool assume_licq         = false;
  auto * trim = app.add_subcommand("trim", "trim the constraint set at x from solved samples");
  trim->add_option("problem", problem_path, "problem JSON")->required()->check(CLI::ExistingFile);
  trim->add_option("samples", samples_path, "JSON array of solved samples {x_hat, z_star, active}")->required()->check(CLI::ExistingFile);
  trim->add_option("--x", xv, "parameter vector")->delimiter(',')->required();
  trim->add_option("--kappa-source", kappa_source, "formula, scaled-formula, enumerated or user")->capture_default_str();
  trim->add_option("--kappa", kappa_user, "kappa for --kappa-source user");
  trim->add_flag("--assume-licq", assume_licq, "fold all samples (otherwise the nearest one is used)");

  // glc
  bool scaled = false, enumerated = false;
  auto * glc_cmd = app.add_subcommand("glc", "global Lipschitz constant of the minimizer");
  glc_cmd->add_option("problem", problem_path, "problem JSON")->required()->check(CLI::ExistingFile);
  glc_cmd->add_flag("--scaled", scaled, "use the default row scaling");
  glc_cmd->add_flag("--enumerated", enumerated, "also report the exact constant over active sets");

  // sigma
  int i_max = 1;
  std::string method = "milp";
  long node_limit    = 1000000;
  int n_samples      = 10000;
  auto * sigma = app.add_subcommand("sigma", "closeness table sigma_1..sigma_imax");
  sigma->add_option("problem", problem_path, "problem JSON")->required()->check(CLI::ExistingFile);
  sigma->add_option("--box", box_path, "box JSON {lower, upper} on (x, z); bounding box of the lift when absent")->check(CLI::ExistingFile);
  sigma->add_option("--i-max", i_max, "largest i")->required();
  sigma->add_option("--method", method, "milp or sampled")->check(CLI::IsMember({"milp", "sampled"}))->capture_default_str();
  sigma->add_option("--node-limit", node_limit, "branch-and-bound node limit per entry")->capture_default_str();
  sigma->add_option("--samples", n_samples, "sample count for --method sampled")->capture_default_str();
  sigma->add_option("--cache-dir", cache_dir, "reuse tables stored under this directory");

  // invariant-set
  auto * inv = app.add_subcommand("invariant-set", "LQR terminal set of a scenario");
  inv->add_option("scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);

  // mpc-sim
  std::string mode = "adaptive";
  int steps        = 100;
  double spacing   = 0.0;
  kappa_source     = "scaled-formula";
  auto * sim = app.add_subcommand("mpc-sim", "closed-loop simulation; one JSON line per step");
  sim->add_option("scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--mode", mode, "full, warm, adaptive, offline or hybrid")->capture_default_str();
  sim->add_option("--x0", xv, "initial state; a random point of the terminal set when absent")->delimiter(',');
  sim->add_option("--steps", steps, "number of steps")->capture_default_str();
  sim->add_option("--kappa-source", kappa_source, "formula, scaled-formula, enumerated or user");
  sim->add_option("--kappa", kappa_user, "kappa for --kappa-source user");
  sim->add_option("--spacing", spacing, "offline lattice spacing (offline and hybrid modes)");

  // bench
  std::vector<std::string> modes{"full", "warm", "adaptive"};
  int draws       = 20;
  bool no_timing  = false;
  auto * bench = app.add_subcommand("bench", "closed-loop benchmark; writes metrics.csv and traces.jsonl");
  bench->add_option("scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--modes", modes, "modes to run")->delimiter(',');
  bench->add_option("--draws", draws, "initial states")->capture_default_str();
  bench->add_option("--steps", steps, "steps per run");
  bench->add_option("--kappa-source", kappa_source, "formula, scaled-formula or user");
  bench->add_option("--kappa", kappa_user, "kappa for --kappa-source user");
  bench->add_option("--spacing", spacing, "offline lattice spacing (offline and hybrid modes)");
  bench->add_flag("--no-timing", no_timing, "write time_pct as 0 so that repeated runs give identical files");

  // verify
  std::vector<int> criteria;
  double size = 1.0, kappa_scale = 1.0;
  auto * verify = app.add_subcommand("verify", "run the acceptance criteria");
  verify->add_option("--criterion", criteria, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 8));
  verify->add_option("--size", size, "fraction of the instance counts")->capture_default_str();
  verify->add_option("--kappa-scale", kappa_scale, "multiply every kappa by this factor")->capture_default_str();

  // gen
  auto * gen = app.add_subcommand("gen", "write a scenario or problem JSON");
  gen->require_subcommand(1);
  OscillatingMassSpec ms;
  std::string topology;
  auto * gen_osc = gen->add_subcommand("oscillating-masses", "spring chain with actuators");
  gen_osc->add_option("--masses", ms.n_masses)->capture_default_str();
  gen_osc->add_option("--actuators", ms.n_actuators)->capture_default_str();
  gen_osc->add_option("--sample-time", ms.h, "sampling period")->capture_default_str();
  gen_osc->add_option("--N", ms.N)->capture_default_str();
  gen_osc->add_option("--x-max", ms.x_max)->capture_default_str();
  gen_osc->add_option("--u-max", ms.u_max)->capture_default_str();
  gen_osc->add_option("--topology", topology, "actuators as first:second pairs, e.g. 0:1,2:3");
  DoubleIntegratorSpec ds;
  auto * gen_di = gen->add_subcommand("double-integrator", "sampled double integrator");
  gen_di->add_option("--sample-time", ds.h, "sampling period")->capture_default_str();
  gen_di->add_option("--N", ds.N)->capture_default_str();
  RandomMpQpSpec rs;
  auto * gen_rand = gen->add_subcommand("random-mpqp", "random problem with the origin strictly feasible");
  gen_rand->add_option("--nz", rs.n_z)->capture_default_str();
  gen_rand->add_option("--nx", rs.n_x)->capture_default_str();
  gen_rand->add_option("--nc", rs.n_c)->capture_default_str();
  auto * gen_ex = gen->add_subcommand("scalar-example", "one-dimensional two-row problem");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      const MpQp p = mpqp_from_json(read_json_file(problem_path));
      all_rows     = indices.empty();
      const IndexSet idx = all_rows ? IndexSet::range(p.n_c()) : IndexSet(indices);
      if (!idx.in_range(p.n_c())) { throw Error(ErrorCode::InvalidArgument, "row index out of range"); }
      emit(g, to_json(qp_solve(p, parameter_or_zero(xv, p.n_x()), idx, g.tol())));
    } else if (trim->parsed()) {
      const MpQp p = mpqp_from_json(read_json_file(problem_path));
      std::vector<SolvedSample> samples;
      for (const auto & s : read_json_file(samples_path)) { samples.push_back(sample_from_json(s)); }
      TrimOptions to;
      to.assume_licq = assume_licq;
      to.tol         = g.tol();
      emit(g, to_json(trim_multi(p, kappa_for(p, kappa_source, kappa_user), samples, parameter_or_zero(xv, p.n_x()), to)));
    } else if (glc_cmd->parsed()) {
      const MpQp p = mpqp_from_json(read_json_file(problem_path));
      json j       = to_json(scaled ? glc_scaled(p, phi_default(p)) : glc(p));
      if (enumerated) { j["kappa_enumerated"] = glc_enumerated(p); }
      emit(g, j);
    } else if (sigma->parsed()) {
      const MpQp p = mpqp_from_json(read_json_file(problem_path));
      Box box;
      if (!box_path.empty()) {
        box = box_from_json(read_json_file(box_path));
      } else {
        Matrix Hl(p.n_c(), p.n_x() + p.n_z());
        Hl << -p.S, p.G;
        box = lifted_bounding_box(Hl, p.w);
      }
      const auto L = lift(p, box);
      fs::path cached;
      if (!cache_dir.empty()) {
        cached = fs::path(cache_dir) / (lifted_hash(L) + "-" + method + "-" + std::to_string(i_max) + ".json");
        if (fs::exists(cached)) {
          emit(g, read_json_file(cached.string()));
          return 0;
        }
      }
      SigmaTableOptions so;
      so.method          = method == "milp" ? SigmaMethod::Milp : SigmaMethod::Sampled;
      so.n_samples       = n_samples;
      so.seed            = g.seed;
      so.milp.node_limit = node_limit;
      so.allow_partial   = true;
      const json j       = to_json(sigma_table(L, i_max, so));
      if (!cached.empty()) {
        fs::create_directories(cached.parent_path());
        write_text_file(cached.string(), j.dump(2) + "\n");
      }
      emit(g, j);
    } else if (inv->parsed()) {
      const MpcDesign d = design_from_json(read_json_file(scenario_path));
      const Matrix P    = dare(d.A, d.B, d.Q, d.R);
      const auto res    = lqr_invariant_set(d, P);
      emit(g, json{{"P", to_json(P)}, {"K", to_json(lqr_gain(d.A, d.B, d.R, P))}, {"set", to_json(res.set)},
                {"steps", res.steps}, {"converged", res.converged}});
      return res.converged ? 0 : 3;
    } else if (sim->parsed()) {
      const auto sc = make_scenario(design_from_json(read_json_file(scenario_path)));
      const SimMode m = parse_sim_mode(mode);
      Vector x0;
      if (xv.empty()) {
        const auto pts = sample_polyhedron(sc.XN, 1, g.seed);
        if (pts.empty()) { throw Error(ErrorCode::NoFeasibleSamples, "terminal set has no interior samples"); }
        x0 = pts.front();
      } else {
        x0 = parameter_or_zero(xv, sc.n());
      }
      std::optional<OfflineDataset> D;
      if (m == SimMode::OfflineNearest || m == SimMode::Hybrid) {
        if (!(spacing > 0.0)) { throw Error(ErrorCode::InvalidArgument, "--spacing is required for this mode"); }
        D = build_offline_dataset(sc, spacing);
      }
      SimOptions so;
      so.tol        = g.tol();
      const auto tr = simulate(sc, x0, steps, m, kappa_for(sc.condensed, kappa_source, kappa_user), D ? &*D : nullptr, so);
      std::ostringstream os;
      write_trace_lines(os, tr);
      emit(g, os.str());
      if (tr.status != TraceStatus::Completed) {
        std::cerr << tr.message << "\n";
        return 2;
      }
    } else if (bench->parsed()) {
      const auto sc = make_scenario(design_from_json(read_json_file(scenario_path)));
      BenchConfig cfg;
      cfg.modes.clear();
      for (const auto & m : modes) { cfg.modes.push_back(parse_sim_mode(m)); }
      cfg.draws        = draws;
      cfg.steps        = steps;
      cfg.seed         = g.seed;
      cfg.kappa_source = parse_kappa_source(kappa_source);
      cfg.kappa_user   = kappa_user;
      cfg.sim.tol      = g.tol();
      if (spacing > 0.0) { cfg.offline_spacing = spacing; }
      auto res = run_bench(sc, cfg);
      if (no_timing) {
        for (auto & r : res.rows) { r.time_pct = 0.0; }
      }
      const std::string csv = metrics_csv(res.rows);
      if (g.out.empty()) {
        std::cout << csv;
      } else {
        fs::create_directories(g.out);
        write_text_file((fs::path(g.out) / "metrics.csv").string(), csv);
        std::ostringstream os;
        for (const auto & [m, runs] : res.traces) {
          for (std::size_t d = 0; d < runs.size(); ++d) {
            for (const auto & s : runs[d].steps) {
              json r    = to_json(s, m);
              r["draw"] = d;
              if (no_timing) { r.erase("wall_time"); }
              os << r.dump() << '\n';
            }
          }
        }
        write_text_file((fs::path(g.out) / "traces.jsonl").string(), os.str());
      }
      for (const auto & f : res.failures) { std::cerr << f << "\n"; }
      std::cerr << "kappa " << res.kappa << ", " << res.n_c << " rows, " << res.equivalence_violations
                << " equivalence violations\n";
      return res.equivalence_violations > 0 ? 1 : 0;
    } else if (verify->parsed()) {
      if (criteria.empty()) { criteria = {1, 2, 3, 4, 5, 6, 7, 8}; }
      VerifyOptions vo;
      vo.seed        = g.seed;
      vo.size        = size;
      vo.kappa_scale = kappa_scale;
      json report    = json::array();
      int failed     = 0;
      for (int id : criteria) {
        const auto r = run_criteria({id}, vo).front();
        std::cout << format_result(r) << std::endl;
        report.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
        failed += !r.passed;
      }
      if (!g.out.empty()) { write_text_file(g.out, report.dump(2) + "\n"); }
      return failed;
    } else if (gen_osc->parsed()) {
      if (!topology.empty()) { ms.topology = parse_topology(topology); }
      emit(g, to_json(oscillating_masses(ms)));
    } else if (gen_di->parsed()) {
      emit(g, to_json(double_integrator(ds)));
    } else if (gen_rand->parsed()) {
      std::mt19937_64 rng(g.seed);
      emit(g, to_json(random_mpqp(rng, rs)));
    } else if (gen_ex->parsed()) {
      emit(g, to_json(scalar_two_row_example()));
    }
  } catch (const Error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
