#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mptrim/closeness.hpp"
#include "mptrim/mpqp.hpp"
#include "mptrim/trim.hpp"

namespace mptrim {

// ---------------------------------------------------------------------------
// Polyhedra
// ---------------------------------------------------------------------------

/// {x : Cx ≤ d}.
struct Polyhedron
{
  Matrix C;
  Vector d;

  Index dim() const { return C.cols(); }
  Index rows() const { return C.rows(); }

  static Polyhedron box(const Vector & lo, const Vector & hi)
  {
    const Index n = lo.size();
    Polyhedron P{Matrix(2 * n, n), Vector(2 * n)};
    P.C << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    P.d << hi, -lo;
    return P;
  }
  static Polyhedron box(Index n, double r) { return box(Vector::Constant(n, -r), Vector::Constant(n, r)); }

  bool contains(const Vector & x, double tol = 1e-9) const
  {
    return ((C * x - d).array() <= tol * (1.0 + d.array().abs())).all();
  }
};

inline void check_polyhedron(const Polyhedron & P)
{
  if (P.C.rows() != P.d.size()) { throw Error(ErrorCode::DimensionMismatch, "polyhedron: C and d disagree"); }
}

inline bool is_empty(const Polyhedron & P)
{
  check_polyhedron(P);
  return lp_solve(Vector::Zero(P.dim()), P.C, P.d).status == LpStatus::Infeasible;
}

/// Smallest axis-aligned box containing P; throws UnboundedLift if P is empty or unbounded.
inline Box bounding_box(const Polyhedron & P) { return lifted_bounding_box(P.C, P.d); }

/// True if every point of P lies in the interior of each half-space (equivalently d > 0).
inline bool origin_interior(const Polyhedron & P) { return P.rows() == 0 || P.d.minCoeff() > 0.0; }

/// Points of a bounded polyhedron (hit-and-run mixed with vertices), deterministic in `seed`.
inline std::vector<Vector> sample_polyhedron(const Polyhedron & P, int count, std::uint64_t seed)
{
  return sample_lifted_points(make_lifted(P.C, P.d, bounding_box(P)), count, seed);
}

namespace detail {

// max c·x over {Cx ≤ d}; kInf if unbounded, −kInf if empty.
inline double lp_max(const Vector & c, const Matrix & C, const Vector & d)
{
  const auto r = lp_solve(-c, C, d);
  if (r.status == LpStatus::Unbounded) { return kInf; }
  if (r.status == LpStatus::Infeasible) { return -kInf; }
  return -r.objective;
}

inline double redundancy_tol(double dj) { return 1e-9 * (1.0 + std::abs(dj)); }

}  // namespace detail

/// Drop every row implied by the others (one LP per row, in order).
inline Polyhedron remove_redundant(const Polyhedron & P)
{
  check_polyhedron(P);
  std::vector<Index> keep;
  for (Index j = 0; j < P.rows(); ++j) { keep.push_back(j); }
  for (std::size_t k = 0; k < keep.size();) {
    const Index j = keep[k];
    if (P.C.row(j).norm() == 0.0) {
      if (P.d(j) < 0.0) { throw Error(ErrorCode::EmptyConstraintSet, "polyhedron has an infeasible zero row"); }
      keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(k));
      continue;
    }
    // the row itself is relaxed by one unit so the LP stays bounded
    Matrix C(static_cast<Index>(keep.size()), P.dim());
    Vector d(static_cast<Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
      C.row(static_cast<Index>(r)) = P.C.row(keep[r]);
      d(static_cast<Index>(r))     = P.d(keep[r]) + (r == k ? 1.0 : 0.0);
    }
    const double m = detail::lp_max(P.C.row(j).transpose(), C, d);
    if (m == -kInf) { throw Error(ErrorCode::EmptyConstraintSet, "polyhedron is empty"); }
    if (m <= P.d(j) + detail::redundancy_tol(P.d(j))) {
      keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      ++k;
    }
  }
  Polyhedron out{Matrix(static_cast<Index>(keep.size()), P.dim()), Vector(static_cast<Index>(keep.size()))};
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.C.row(static_cast<Index>(r)) = P.C.row(keep[r]);
    out.d(static_cast<Index>(r))     = P.d(keep[r]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LQR ingredients
// ---------------------------------------------------------------------------

struct DareOptions
{
  double tol   = 1e-10;  ///< stop when max |P_{k+1} − P_k| ≤ tol
  int max_iter = 200000;
};

/// Right-hand side minus P of P = AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q.
inline Matrix dare_residual(const Matrix & A, const Matrix & B, const Matrix & Q, const Matrix & R, const Matrix & P)
{
  const Matrix BtPA = B.transpose() * P * A;
  const Matrix S    = R + B.transpose() * P * B;
  return A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + Q - P;
}

/// Riccati fixed-point iteration from P₀ = Q.
inline Matrix dare(const Matrix & A, const Matrix & B, const Matrix & Q, const Matrix & R, const DareOptions & opts = {})
{
  const Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() || R.cols() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "dare: inconsistent dimensions");
  }
  cholesky(Q);
  cholesky(R);
  Matrix P = Q;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Matrix BtPA = B.transpose() * P * A;
    const Matrix S    = R + B.transpose() * P * B;
    Matrix next       = A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + Q;
    next              = 0.5 * (next + next.transpose());
    if (!next.allFinite()) { break; }
    const double change = (next - P).cwiseAbs().maxCoeff();
    P                   = std::move(next);
    if (change <= opts.tol) { return P; }
  }
  throw Error(ErrorCode::NoConvergence, "dare: fixed-point iteration did not converge (is (A, B) stabilizable?)");
}

/// K* = −(R + BᵀPB)⁻¹BᵀPA.
inline Matrix lqr_gain(const Matrix & A, const Matrix & B, const Matrix & R, const Matrix & P)
{
  if (P.rows() != A.rows() || B.rows() != A.rows() || R.rows() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "lqr_gain: inconsistent dimensions");
  }
  return -(R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
}

struct InvariantSetOptions
{
  int t_max = 500;
};

struct InvariantSet
{
  Polyhedron set;
  int steps      = 0;  ///< number of propagation steps performed
  bool converged = false;
};

/**
 * @brief Maximal positively invariant subset of `constraints` under x⁺ = Acl·x.
 *
 * Rows C·Acl^t·x ≤ d are appended for t = 1, 2, … unless implied by the
 * current set; the iteration stops at the first t that adds nothing. On hitting
 * t_max the partial set is returned with `converged = false`.
 */
inline InvariantSet max_invariant_set(const Matrix & Acl, const Polyhedron & constraints, const InvariantSetOptions & opts = {})
{
  check_polyhedron(constraints);
  if (Acl.rows() != Acl.cols() || Acl.rows() != constraints.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "max_invariant_set: inconsistent dimensions");
  }
  InvariantSet out;
  Polyhedron O = remove_redundant(constraints);
  Matrix Ct    = constraints.C;
  for (int t = 1; t <= opts.t_max; ++t) {
    Ct          = Ct * Acl;
    bool added  = false;
    out.steps   = t;
    for (Index j = 0; j < Ct.rows(); ++j) {
      const Vector c = Ct.row(j).transpose();
      const double dj = constraints.d(j);
      if (c.norm() <= 1e-14 * (1.0 + constraints.C.row(j).norm())) {
        if (dj < 0.0) { throw Error(ErrorCode::EmptyConstraintSet, "max_invariant_set: set is empty"); }
        continue;
      }
      const double m = detail::lp_max(c, O.C, O.d);
      if (m == -kInf) { throw Error(ErrorCode::EmptyConstraintSet, "max_invariant_set: set is empty"); }
      if (m <= dj + detail::redundancy_tol(dj)) { continue; }
      O.C.conservativeResize(O.rows() + 1, Eigen::NoChange);
      O.d.conservativeResize(O.d.size() + 1);
      O.C.row(O.rows() - 1) = c.transpose();
      O.d(O.d.size() - 1)   = dj;
      added                 = true;
    }
    if (!added) {
      out.converged = true;
      break;
    }
  }
  out.set = remove_redundant(O);
  return out;
}

// ---------------------------------------------------------------------------
// Condensation
// ---------------------------------------------------------------------------

enum class RowKind { State, Input, Terminal };

inline std::string_view to_string(RowKind k)
{
  switch (k) {
    case RowKind::State: return "state";
    case RowKind::Input: return "input";
    case RowKind::Terminal: return "terminal";
  }
  return "?";
}

/// Where a condensed row came from: row `row` of 𝒳, 𝒰 or 𝒳_N at stage `stage`.
struct RowOrigin
{
  RowKind kind;
  int stage;
  int row;
};

/// Uncondensed MPC data; `terminal` absent means "compute the maximal invariant set".
struct MpcDesign
{
  Matrix A, B, Q, R;
  int N = 1;
  Polyhedron X, U;
  std::optional<Polyhedron> terminal;
  /// Drop condensed rows that no feasible (x, z) can make active.
  bool prune_redundant = false;
  std::string name;
};

struct MpcScenario
{
  Matrix A, B, Q, R, P;
  int N = 1;
  Polyhedron X, U, XN;
  MpQp condensed;
  Matrix cost_x;                    ///< J = ½zᵀHz + xᵀFz + xᵀ·cost_x·x
  std::vector<RowOrigin> origin;    ///< one entry per condensed row
  Polyhedron stripped;              ///< rows without decision variables, as constraints on x
  std::vector<RowOrigin> stripped_origin;
  std::vector<RowOrigin> pruned_origin;  ///< rows dropped as redundant for every parameter
  std::string name;

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
  /// #𝒳_N + N(#𝒳 + #𝒰), the row count before stripping.
  Index rows_before_stripping() const { return XN.rows() + N * (X.rows() + U.rows()); }
};

/**
 * @brief Eliminate the predicted states: x_t = Aᵗx + Σ_{s<t} A^{t−1−s}Bu_s.
 *
 * Rows are ordered per stage (state rows, then input rows) followed by the
 * terminal rows. Rows whose decision part vanishes are moved to `stripped`.
 * With `prune_redundant`, rows implied by the others over the whole lifted set
 * {(x, z) : Gz ≤ Sx + w, x satisfies the stripped rows} are dropped as well.
 */
inline MpcScenario condense(const Matrix & A, const Matrix & B, const Matrix & Q, const Matrix & R, const Matrix & P,
  int N, const Polyhedron & X, const Polyhedron & U, const Polyhedron & XN, bool prune_redundant = false)
{
  const Index n = A.rows(), m = B.cols();
  if (N < 1) { throw Error(ErrorCode::InvalidArgument, "condense: horizon must be >= 1"); }
  if (A.cols() != n || B.rows() != n || Q.rows() != n || P.rows() != n || R.rows() != m || X.dim() != n ||
      XN.dim() != n || U.dim() != m) {
    throw Error(ErrorCode::DimensionMismatch, "condense: inconsistent dimensions");
  }
  for (const auto * S : {&X, &U, &XN}) {
    check_polyhedron(*S);
    if (is_empty(*S)) { throw Error(ErrorCode::EmptyConstraintSet, "condense: empty constraint set"); }
  }

  const Index nz = N * m;
  std::vector<Matrix> Phi(static_cast<std::size_t>(N + 1)), Gam(static_cast<std::size_t>(N + 1));
  Phi[0] = Matrix::Identity(n, n);
  Gam[0] = Matrix::Zero(n, nz);
  for (int t = 1; t <= N; ++t) {
    Phi[static_cast<std::size_t>(t)] = A * Phi[static_cast<std::size_t>(t - 1)];
    Matrix g                         = A * Gam[static_cast<std::size_t>(t - 1)];
    g.middleCols((t - 1) * m, m) += B;
    Gam[static_cast<std::size_t>(t)] = std::move(g);
  }

  Matrix H = Matrix::Zero(nz, nz), F = Matrix::Zero(n, nz), Y = Matrix::Zero(n, n);
  for (int t = 0; t <= N; ++t) {
    const Matrix & W  = t < N ? Q : P;
    const Matrix & Gt = Gam[static_cast<std::size_t>(t)];
    const Matrix & Pt = Phi[static_cast<std::size_t>(t)];
    H += 2.0 * Gt.transpose() * W * Gt;
    F += 2.0 * Pt.transpose() * W * Gt;
    Y += Pt.transpose() * W * Pt;
  }
  for (int t = 0; t < N; ++t) { H.block(t * m, t * m, m, m) += 2.0 * R; }
  H = 0.5 * (H + H.transpose());

  // G z ≤ S x + w per block
  std::vector<Vector> g_rows, s_rows;
  std::vector<double> w_vals;
  std::vector<RowOrigin> org;
  auto push_state = [&](const Polyhedron & Set, int t, RowKind kind) {
    const Matrix Gb = Set.C * Gam[static_cast<std::size_t>(t)];
    const Matrix Sb = -Set.C * Phi[static_cast<std::size_t>(t)];
    for (Index r = 0; r < Set.rows(); ++r) {
      g_rows.push_back(Gb.row(r).transpose());
      s_rows.push_back(Sb.row(r).transpose());
      w_vals.push_back(Set.d(r));
      org.push_back({kind, t, static_cast<int>(r)});
    }
  };
  for (int t = 0; t < N; ++t) {
    push_state(X, t, RowKind::State);
    for (Index r = 0; r < U.rows(); ++r) {
      Vector g = Vector::Zero(nz);
      g.segment(t * m, m) = U.C.row(r).transpose();
      g_rows.push_back(g);
      s_rows.push_back(Vector::Zero(n));
      w_vals.push_back(U.d(r));
      org.push_back({RowKind::Input, t, static_cast<int>(r)});
    }
  }
  push_state(XN, N, RowKind::Terminal);

  double gmax = 0.0;
  for (const auto & g : g_rows) { gmax = std::max(gmax, g.norm()); }
  std::vector<std::size_t> keep, strip;
  for (std::size_t k = 0; k < g_rows.size(); ++k) {
    (g_rows[k].norm() <= 1e-12 * (1.0 + gmax) ? strip : keep).push_back(k);
  }
  std::vector<std::size_t> pruned;
  if (prune_redundant) {
    // lifted rows [−S_j, G_j] ≤ w_j plus the stripped rows, each tested with itself relaxed by one unit
    const Index nk = static_cast<Index>(keep.size()), ns = static_cast<Index>(strip.size());
    Matrix C = Matrix::Zero(nk + ns, n + nz);
    Vector d(nk + ns);
    for (Index r = 0; r < nk; ++r) {
      C.row(r) << -s_rows[keep[static_cast<std::size_t>(r)]].transpose(), g_rows[keep[static_cast<std::size_t>(r)]].transpose();
      d(r) = w_vals[keep[static_cast<std::size_t>(r)]];
    }
    for (Index r = 0; r < ns; ++r) {
      C.row(nk + r).head(n) = -s_rows[strip[static_cast<std::size_t>(r)]].transpose();
      d(nk + r)             = w_vals[strip[static_cast<std::size_t>(r)]];
    }
    std::vector<std::size_t> still;
    for (Index r = 0; r < nk; ++r) {
      d(r) += 1.0;
      const double m = detail::lp_max(C.row(r).transpose(), C, d);
      d(r) -= 1.0;
      if (m == -kInf) { throw Error(ErrorCode::EmptyConstraintSet, "condense: no feasible (x, z)"); }
      if (m <= d(r) + detail::redundancy_tol(d(r))) {
        // later tests must not rely on this row
        C.row(r).setZero();
        d(r) = 0.0;
        pruned.push_back(keep[static_cast<std::size_t>(r)]);
      } else {
        still.push_back(keep[static_cast<std::size_t>(r)]);
      }
    }
    keep = std::move(still);
  }

  MpcScenario sc;
  sc.A = A, sc.B = B, sc.Q = Q, sc.R = R, sc.P = P, sc.N = N;
  sc.X = X, sc.U = U, sc.XN = XN;
  sc.cost_x = Y;
  MpQp & p  = sc.condensed;
  p.H       = H;
  p.F       = F;
  p.G.resize(static_cast<Index>(keep.size()), nz);
  p.S.resize(static_cast<Index>(keep.size()), n);
  p.w.resize(static_cast<Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    p.G.row(static_cast<Index>(r)) = g_rows[keep[r]].transpose();
    p.S.row(static_cast<Index>(r)) = s_rows[keep[r]].transpose();
    p.w(static_cast<Index>(r))     = w_vals[keep[r]];
    sc.origin.push_back(org[keep[r]]);
  }
  sc.stripped.C.resize(static_cast<Index>(strip.size()), n);
  sc.stripped.d.resize(static_cast<Index>(strip.size()));
  for (std::size_t r = 0; r < strip.size(); ++r) {
    sc.stripped.C.row(static_cast<Index>(r)) = -s_rows[strip[r]].transpose();
    sc.stripped.d(static_cast<Index>(r))     = w_vals[strip[r]];
    sc.stripped_origin.push_back(org[strip[r]]);
  }
  for (auto k : pruned) { sc.pruned_origin.push_back(org[k]); }
  try {
    cholesky(p.H);
  } catch (const Error &) {
    throw Error(ErrorCode::NotPositiveDefinite, "condense: Hessian is not positive definite");
  }
  return sc;
}

/// Maximal invariant set of x⁺ = (A + BK)x inside {x ∈ 𝒳, Kx ∈ 𝒰} for the LQR gain of P.
inline InvariantSet lqr_invariant_set(const MpcDesign & d, const Matrix & P, const InvariantSetOptions & inv = {})
{
  const Matrix K = lqr_gain(d.A, d.B, d.R, P);
  Polyhedron cons{Matrix(d.X.rows() + d.U.rows(), d.A.rows()), Vector(d.X.rows() + d.U.rows())};
  cons.C << d.X.C, d.U.C * K;
  cons.d << d.X.d, d.U.d;
  return max_invariant_set(d.A + d.B * K, cons, inv);
}

/// Terminal ingredients from the DARE when `terminal` is absent, then condense.
inline MpcScenario make_scenario(const MpcDesign & d, const InvariantSetOptions & inv = {}, const DareOptions & dopt = {})
{
  const Matrix P = dare(d.A, d.B, d.Q, d.R, dopt);
  Polyhedron XN;
  if (d.terminal) {
    XN = *d.terminal;
  } else {
    auto res = lqr_invariant_set(d, P, inv);
    if (!res.converged) {
      throw Error(ErrorCode::NoTermination,
        "terminal set: invariant-set iteration did not terminate in " + std::to_string(res.steps) + " steps");
    }
    XN = std::move(res.set);
  }
  MpcScenario sc = condense(d.A, d.B, d.Q, d.R, P, d.N, d.X, d.U, XN, d.prune_redundant);
  sc.name        = d.name;
  sc.condensed.name = d.name;
  return sc;
}

namespace detail {

// rows [−S, G] ≤ w of the condensed problem followed by the stripped rows [C_s, 0] ≤ d_s
inline std::pair<Matrix, Vector> scenario_rows(const MpcScenario & sc)
{
  const MpQp & p = sc.condensed;
  const Index ns = sc.stripped.rows();
  Matrix C(p.n_c() + ns, p.n_x() + p.n_z());
  Vector d(p.n_c() + ns);
  C.topRows(p.n_c()) << -p.S, p.G;
  d.head(p.n_c()) = p.w;
  if (ns > 0) {
    C.bottomRows(ns) << sc.stripped.C, Matrix::Zero(ns, p.n_z());
    d.tail(ns) = sc.stripped.d;
  }
  return {std::move(C), std::move(d)};
}

}  // namespace detail

/// Lifted polyhedron of the condensed problem, boxed by the bounding box of itself and the stripped rows.
inline LiftedPolyhedron lift_scenario(const MpcScenario & sc)
{
  const auto [C, d] = detail::scenario_rows(sc);
  return lift(sc.condensed, lifted_bounding_box(C, d));
}

/**
 * @brief States for which the MPC problem is feasible, sampled from the projection of the
 * lifted polyhedron and pulled toward the origin by `shrink` so boundary draws stay feasible.
 */
inline std::vector<Vector> sample_feasible_states(const MpcScenario & sc, int count, std::uint64_t seed, double shrink = 0.99)
{
  if (!(shrink > 0.0 && shrink <= 1.0)) { throw Error(ErrorCode::InvalidArgument, "shrink must lie in (0, 1]"); }
  const auto [C, d] = detail::scenario_rows(sc);
  const auto pts    = sample_lifted_points(make_lifted(C, d, lifted_bounding_box(C, d)), count, seed);
  std::vector<Vector> out;
  out.reserve(pts.size());
  for (const auto & v : pts) { out.push_back(shrink * v.head(sc.condensed.n_x())); }
  return out;
}

// ---------------------------------------------------------------------------
// Offline datasets
// ---------------------------------------------------------------------------

struct OfflineDataset
{
  std::vector<SolvedSample> samples;
  std::optional<double> spacing;                       ///< lattice spacing (grid mode)
  std::map<std::vector<long>, std::size_t> lattice;   ///< lattice index → sample (grid mode)
  double coverage = 0.0;                               ///< d(𝒳, 𝒟)
  bool coverage_estimated = false;
  std::size_t skipped     = 0;                         ///< points whose QP was infeasible

  std::size_t nearest_scan(const Vector & x) const
  {
    if (samples.empty()) { throw Error(ErrorCode::NoFeasibleSamples, "offline dataset is empty"); }
    return detail::nearest_sample(samples, x);
  }

  /// Rounds x to the lattice; nothing if that lattice point carries no sample.
  std::optional<std::size_t> nearest_grid(const Vector & x) const
  {
    if (!spacing) { return std::nullopt; }
    std::vector<long> key(static_cast<std::size_t>(x.size()));
    for (Index a = 0; a < x.size(); ++a) { key[static_cast<std::size_t>(a)] = std::lround(x(a) / *spacing); }
    const auto it = lattice.find(key);
    if (it == lattice.end()) { return std::nullopt; }
    return it->second;
  }

  std::size_t nearest(const Vector & x) const
  {
    if (auto k = nearest_grid(x)) { return *k; }
    return nearest_scan(x);
  }
};

struct OfflineOptions
{
  long max_points     = 2000000;  ///< cap on candidate lattice points
  int coverage_samples = 10000;
  std::uint64_t seed  = 1;
};

namespace detail {

inline std::optional<SolvedSample> solve_offline_point(const MpcScenario & sc, const QpSolver & solver, const Vector & x)
{
  if (!sc.stripped.contains(x)) { return std::nullopt; }
  const auto s = solver.solve(x, IndexSet::range(sc.condensed.n_c()));
  if (s.status != QpStatus::Optimal) { return std::nullopt; }
  return SolvedSample{x, s.z_star, active_set(sc.condensed, x, s.z_star, solver.tolerances().act)};
}

inline double estimate_coverage(const OfflineDataset & D, const Polyhedron & XN, int count, std::uint64_t seed)
{
  const auto pts = sample_polyhedron(XN, count, seed);
  double worst   = 0.0;
  for (const auto & v : pts) { worst = std::max(worst, (D.samples[D.nearest_scan(v)].x_hat - v).norm()); }
  return worst;
}

}  // namespace detail

/**
 * @brief Solve the MPC on every point of the lattice spacing·ℤⁿ whose rounding
 * cell meets 𝒳_N.
 *
 * Every x ∈ 𝒳_N rounds to such a point, so when all of them are feasible the
 * coverage is the cell half-diagonal spacing·√n/2. Otherwise the infeasible
 * points are skipped and the coverage is estimated by sampling 𝒳_N.
 */
inline OfflineDataset build_offline_dataset(const MpcScenario & sc, double spacing, const OfflineOptions & opts = {})
{
  if (!(spacing > 0.0)) { throw Error(ErrorCode::InvalidArgument, "offline dataset: spacing must be positive"); }
  const Index n  = sc.n();
  const Box bb   = bounding_box(sc.XN);
  std::vector<long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  double total = 1.0;
  for (Index a = 0; a < n; ++a) {
    lo[static_cast<std::size_t>(a)] = std::lround(bb.lower(a) / spacing);
    hi[static_cast<std::size_t>(a)] = std::lround(bb.upper(a) / spacing);
    total *= static_cast<double>(hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)] + 1);
  }
  if (total > static_cast<double>(opts.max_points)) {
    throw Error(ErrorCode::InvalidArgument, "offline dataset: lattice too large for this spacing");
  }

  const QpSolver solver(sc.condensed);
  OfflineDataset D;
  D.spacing = spacing;
  std::vector<long> key = lo;
  const Box half{Vector::Constant(n, -0.5 * spacing), Vector::Constant(n, 0.5 * spacing)};
  while (true) {
    Vector x(n);
    for (Index a = 0; a < n; ++a) { x(a) = static_cast<double>(key[static_cast<std::size_t>(a)]) * spacing; }
    const Box cell{x + half.lower, x + half.upper};
    if (lp_solve(Vector::Zero(n), sc.XN.C, sc.XN.d, cell).status == LpStatus::Optimal) {
      if (auto s = detail::solve_offline_point(sc, solver, x)) {
        D.lattice[key] = D.samples.size();
        D.samples.push_back(std::move(*s));
      } else {
        ++D.skipped;
      }
    }
    Index a = 0;
    for (; a < n; ++a) {
      auto & k = key[static_cast<std::size_t>(a)];
      if (k < hi[static_cast<std::size_t>(a)]) {
        ++k;
        break;
      }
      k = lo[static_cast<std::size_t>(a)];
    }
    if (a == n) { break; }
  }
  if (D.samples.empty()) { throw Error(ErrorCode::NoFeasibleSamples, "offline dataset: no feasible lattice point"); }
  if (D.skipped == 0) {
    D.coverage = 0.5 * spacing * std::sqrt(static_cast<double>(n));
  } else {
    D.coverage           = detail::estimate_coverage(D, sc.XN, opts.coverage_samples, opts.seed);
    D.coverage_estimated = true;
  }
  return D;
}

/// Dataset from explicit centers; the coverage is a sampled estimate over 𝒳_N.
inline OfflineDataset build_offline_dataset(const MpcScenario & sc, const std::vector<Vector> & centers,
  const OfflineOptions & opts = {})
{
  const QpSolver solver(sc.condensed);
  OfflineDataset D;
  for (const auto & c : centers) {
    if (c.size() != sc.n()) { throw Error(ErrorCode::DimensionMismatch, "offline dataset: center has wrong size"); }
    if (auto s = detail::solve_offline_point(sc, solver, c)) {
      D.samples.push_back(std::move(*s));
    } else {
      ++D.skipped;
    }
  }
  if (D.samples.empty()) { throw Error(ErrorCode::NoFeasibleSamples, "offline dataset: no feasible center"); }
  D.coverage           = detail::estimate_coverage(D, sc.XN, opts.coverage_samples, opts.seed);
  D.coverage_estimated = true;
  return D;
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

enum class SimMode { Full, WarmStart, AdaptiveOnline, OfflineNearest, Hybrid };

inline std::string_view to_string(SimMode m)
{
  switch (m) {
    case SimMode::Full: return "full";
    case SimMode::WarmStart: return "warm";
    case SimMode::AdaptiveOnline: return "adaptive";
    case SimMode::OfflineNearest: return "offline";
    case SimMode::Hybrid: return "hybrid";
  }
  return "?";
}

inline SimMode parse_sim_mode(std::string_view s)
{
  for (auto m : {SimMode::Full, SimMode::WarmStart, SimMode::AdaptiveOnline, SimMode::OfflineNearest, SimMode::Hybrid}) {
    if (to_string(m) == s) { return m; }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mode: " + std::string(s));
}

struct StepRecord
{
  int k = 0;
  Vector x, u;
  Index kept_count = 0;
  int iterations   = 0;
  double wall_time = 0.0;  ///< seconds spent trimming and solving
};

/// Unsafe: a trimmed solve returned a point that violates a dropped row.
enum class TraceStatus { Completed, Infeasible, Unsafe };

struct ClosedLoopTrace
{
  SimMode mode = SimMode::Full;
  std::vector<StepRecord> steps;
  Vector x_final;
  Index n_c          = 0;
  TraceStatus status = TraceStatus::Completed;
  std::string message;
};

struct SimOptions
{
  Tolerances tol;
  /// Hybrid mode folds both samples only under this assumption; otherwise it uses the nearer one.
  bool assume_licq = true;
};

/**
 * @brief Run the MPC loop x_{k+1} = Ax_k + Bu_k from x0.
 *
 * Step 0 of AdaptiveOnline solves the full problem; the offline modes trim from
 * the nearest dataset sample at every step. An infeasible step ends the trace
 * with status Infeasible.
 */
inline ClosedLoopTrace simulate(const MpcScenario & sc, const Vector & x0, int steps, SimMode mode, double kappa,
  const OfflineDataset * offline = nullptr, const SimOptions & opts = {})
{
  if (x0.size() != sc.n()) { throw Error(ErrorCode::DimensionMismatch, "simulate: x0 has wrong size"); }
  if (steps < 0) { throw Error(ErrorCode::InvalidArgument, "simulate: negative step count"); }
  const bool needs_offline = mode == SimMode::OfflineNearest || mode == SimMode::Hybrid;
  if (needs_offline && (offline == nullptr || offline->samples.empty())) {
    throw Error(ErrorCode::InvalidArgument, "simulate: this mode needs an offline dataset");
  }
  const MpQp & p = sc.condensed;
  const QpSolver solver(p, opts.tol);
  const IndexSet all = IndexSet::range(p.n_c());
  auto nearest_offline = [&](const Vector & x) -> const SolvedSample & {
    if (offline == nullptr) { throw Error(ErrorCode::InvalidArgument, "simulate: no offline dataset"); }
    return offline->samples[offline->nearest(x)];
  };

  ClosedLoopTrace tr;
  tr.mode = mode;
  tr.n_c  = p.n_c();
  Vector x = x0;
  std::optional<SolvedSample> prev;
  for (int k = 0; k < steps; ++k) {
    if (!sc.stripped.contains(x, opts.tol.feas)) {
      tr.status  = TraceStatus::Infeasible;
      tr.message = "step " + std::to_string(k) + ": state violates the stage-0 state constraints";
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    IndexSet idx  = all;
    std::optional<IndexSet> hint;
    switch (mode) {
      case SimMode::Full: break;
      case SimMode::WarmStart:
        if (prev) { hint = prev->active; }
        break;
      case SimMode::AdaptiveOnline:
        if (prev) { idx = trim_single(p, kappa, *prev, x, opts.tol).kept; }
        break;
      case SimMode::OfflineNearest:
        idx = trim_single(p, kappa, nearest_offline(x), x, opts.tol).kept;
        break;
      case SimMode::Hybrid: {
        const SolvedSample & off = nearest_offline(x);
        if (!prev) {
          idx = trim_single(p, kappa, off, x, opts.tol).kept;
        } else if (opts.assume_licq && licq_holds(p, prev->active) && licq_holds(p, off.active)) {
          TrimOptions to;
          to.assume_licq = true;
          to.tol         = opts.tol;
          idx            = trim_multi(p, kappa, {*prev, off}, x, to).kept;
        } else {
          const bool use_prev = (prev->x_hat - x).norm() <= (off.x_hat - x).norm();
          idx                 = trim_single(p, kappa, use_prev ? *prev : off, x, opts.tol).kept;
        }
        break;
      }
    }
    const auto sol = solver.solve(x, idx, hint);
    const auto t1  = std::chrono::steady_clock::now();
    if (sol.status != QpStatus::Optimal) {
      tr.status  = TraceStatus::Infeasible;
      tr.message = "step " + std::to_string(k) + ": MPC problem infeasible";
      break;
    }
    if (static_cast<Index>(idx.size()) < p.n_c()) {
      const Vector slack = p.rhs(x) - p.G * sol.z_star;
      Index worst;
      if (slack.minCoeff(&worst) < -opts.tol.feas * (1.0 + std::abs(p.w(worst)))) {
        tr.status  = TraceStatus::Unsafe;
        tr.message = "step " + std::to_string(k) + ": trimmed solution violates row " + std::to_string(worst);
        break;
      }
    }
    StepRecord rec;
    rec.k          = k;
    rec.x          = x;
    rec.u          = sol.z_star.head(sc.m());
    rec.kept_count = static_cast<Index>(idx.size());
    rec.iterations = sol.iterations;
    rec.wall_time  = std::chrono::duration<double>(t1 - t0).count();
    prev           = SolvedSample{x, sol.z_star, active_set(p, x, sol.z_star, opts.tol.act)};
    x              = sc.A * x + sc.B * rec.u;
    tr.steps.push_back(std::move(rec));
  }
  tr.x_final = x;
  return tr;
}

// ---------------------------------------------------------------------------
// Decay fit and horizon bounds
// ---------------------------------------------------------------------------

struct DecayFit
{
  double c    = 1.0;
  double beta = 0.0;
};

/**
 * @brief Fit ‖x_k‖ ≤ c‖x₀‖βᵏ: β from least squares on log‖x_k‖, then c as the
 * smallest constant for which the bound holds at every sample.
 *
 * A sequence that reaches exactly zero is truncated before the zero; fewer than
 * five usable points raises DegenerateTrace.
 */
inline DecayFit estimate_decay(const std::vector<double> & norms)
{
  if (norms.size() < 5) { throw Error(ErrorCode::DegenerateTrace, "estimate_decay: need at least 5 states"); }
  if (!(norms[0] > 0.0)) { throw Error(ErrorCode::DegenerateTrace, "estimate_decay: x0 is zero"); }
  std::size_t n = 0;
  while (n < norms.size() && norms[n] > 0.0) { ++n; }
  if (n < 5) { throw Error(ErrorCode::DegenerateTrace, "estimate_decay: state reaches zero before step 5"); }
  double sk = 0, sy = 0, skk = 0, sky = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double y = std::log(norms[k] / norms[0]);
    const double kk = static_cast<double>(k);
    sk += kk, sy += y, skk += kk * kk, sky += kk * y;
  }
  const double cnt   = static_cast<double>(n);
  const double slope = (cnt * sky - sk * sy) / (cnt * skk - sk * sk);
  DecayFit f;
  f.beta = std::exp(slope);
  if (!(f.beta < 1.0 - 1e-9)) {
    throw Error(ErrorCode::NotExponentiallyStable, "estimate_decay: fitted rate is not below 1");
  }
  double c = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    c = std::max(c, norms[k] / (norms[0] * std::pow(f.beta, static_cast<double>(k))));
  }
  f.c = c;
  return f;
}

/// Norms of the recorded states followed by the final state.
inline std::vector<double> state_norms(const ClosedLoopTrace & tr)
{
  std::vector<double> out;
  for (const auto & s : tr.steps) { out.push_back(s.x.norm()); }
  if (tr.x_final.size() > 0) { out.push_back(tr.x_final.norm()); }
  return out;
}

inline DecayFit estimate_decay(const ClosedLoopTrace & tr) { return estimate_decay(state_norms(tr)); }

struct HorizonBounds
{
  std::map<int, long> K;  ///< i → K_i
  long K1_hat = 0;
  long K2_hat = 0;
  long K_hat  = 0;        ///< max(K̂₁, K̂₂)
};

namespace detail {

// ⌈log_β v⌉ clamped at 0.
inline long ceil_log(double beta, double v)
{
  if (v <= 0.0) { return std::numeric_limits<long>::max(); }
  if (std::isinf(v)) { return 0; }
  const double e = std::log(v) / std::log(beta);
  return std::max(0L, static_cast<long>(std::ceil(e - 1e-12 * (1.0 + std::abs(e)))));
}

}  // namespace detail

/**
 * @brief Steps after which the adaptive closed loop keeps at most n_z + i rows
 * (K_i) and no rows at all (K̂), given ‖x_k‖ ≤ c‖x₀‖βᵏ. Values are clamped at 0.
 */
inline HorizonBounds horizon_bounds(double c, double beta, double x0_norm, double kappa, const MpQp & p,
  const SigmaTable & table)
{
  if (!(beta > 0.0 && beta < 1.0) || !(c > 0.0) || !(x0_norm >= 0.0) || !(kappa >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon_bounds: need 0 < beta < 1, c > 0, kappa >= 0");
  }
  require_valid(p);
  for (Index j = 0; j < p.n_c(); ++j) {
    if (!(p.w(j) > 0.0)) {
      throw Error(ErrorCode::OriginNotInterior, "horizon_bounds: w_" + std::to_string(j) + " is not positive");
    }
  }
  HorizonBounds hb;
  const double a   = c * x0_norm;
  const double bi  = 1.0 / beta;
  const double lip = std::sqrt(1.0 + kappa * kappa);
  for (const auto & [i, s] : table.sigma) { hb.K[i] = detail::ceil_log(beta, s / (a * (1.0 + bi) * lip)); }
  const Matrix GHF = p.G * spd_inverse(p.H) * p.F.transpose();
  for (Index j = 0; j < p.n_c(); ++j) {
    const double g   = p.G.row(j).norm();
    const double s   = p.S.row(j).norm();
    const double rho = a * (kappa * g * (1.0 + bi) + s + GHF.row(j).norm() * bi);
    hb.K1_hat        = std::max(hb.K1_hat, detail::ceil_log(beta, p.w(j) / (a * bi * (kappa * g + s))));
    hb.K2_hat        = std::max(hb.K2_hat, detail::ceil_log(beta, p.w(j) / rho));
  }
  hb.K_hat = std::max(hb.K1_hat, hb.K2_hat);
  return hb;
}

}  // namespace mptrim
