#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "mptrim/mpqp.hpp"
#include "mptrim/trim.hpp"

namespace mptrim {

/**
 * @brief Joint parameter/decision polyhedron {v = (x, z) : [−S, G] v ≤ w} clipped to a box.
 */
struct LiftedPolyhedron
{
  Matrix H;          ///< n_c × (n_x + n_z), rows [−S_j, G_j]
  Vector w;          ///< n_c
  Vector row_norms;  ///< ‖H_j‖ > 0
  Box box;           ///< bounding box on v
  Index n_x = 0;

  Index n_c() const { return H.rows(); }
  Index dim() const { return H.cols(); }

  /// Slack distances d_j(v) = (w_j − H_j v)/‖H_j‖.
  Vector distances(const Vector & v) const { return (w - H * v).cwiseQuotient(row_norms); }

  bool contains(const Vector & v, double tol = 1e-8) const
  {
    return ((H * v - w).array() <= tol * (1.0 + w.array().abs())).all() && box.contains(v, tol);
  }
};

/// Build a lifted polyhedron from raw rows; throws DegenerateRow on a zero row.
inline LiftedPolyhedron make_lifted(Matrix H, Vector w, Box box, Index n_x = 0)
{
  if (H.rows() != w.size() || box.dim() != H.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "lifted polyhedron: inconsistent dimensions");
  }
  LiftedPolyhedron L;
  L.row_norms = H.rowwise().norm();
  if (H.rows() > 0 && !(L.row_norms.minCoeff() > 0.0)) {
    throw Error(ErrorCode::DegenerateRow, "lifted polyhedron: zero row");
  }
  L.H   = std::move(H);
  L.w   = std::move(w);
  L.box = std::move(box);
  L.n_x = n_x;
  return L;
}

/// 𝒱 = {(x, z) : Gz − Sx ≤ w} within the given box on (x, z).
inline LiftedPolyhedron lift(const MpQp & p, const Box & box)
{
  require_valid(p);
  Matrix H(p.n_c(), p.n_x() + p.n_z());
  H << -p.S, p.G;
  return make_lifted(std::move(H), p.w, box, p.n_x());
}

/// (x̂, z*(x̂)) as a point of the lifted space.
inline Vector lifted_point(const SolvedSample & s)
{
  Vector v(s.x_hat.size() + s.z_star.size());
  v << s.x_hat, s.z_star;
  return v;
}

/// Smallest box containing {v : Hv ≤ w}; throws UnboundedLift if empty or unbounded.
inline Box lifted_bounding_box(const Matrix & H, const Vector & w, double margin = 0.0)
{
  const Index n = H.cols();
  Box b{Vector(n), Vector(n)};
  for (Index k = 0; k < n; ++k) {
    Vector c = Vector::Zero(n);
    for (int s : {+1, -1}) {
      c(k)         = s;
      const auto r = lp_solve(c, H, w);
      if (r.status != LpStatus::Optimal) {
        throw Error(ErrorCode::UnboundedLift, "lifted polyhedron is empty or unbounded");
      }
      if (s > 0) {
        b.lower(k) = r.point(k) - margin;
      } else {
        b.upper(k) = r.point(k) + margin;
      }
    }
  }
  return b;
}

/// |{j : r ≤ d_j(v)}|, the number of half-spaces containing the closed ball ℬ(v, r), up to roundoff.
inline Index containment_count(const LiftedPolyhedron & L, const Vector & v, double r)
{
  if (!((L.H * v - L.w).array() <= 1e-8 * (1.0 + L.w.array().abs())).all()) {
    throw Error(ErrorCode::NotInPolyhedron, "containment_count: point outside the lifted polyhedron");
  }
  // roundoff allowance matching the membership tolerance above
  const Vector d   = L.distances(v);
  const Vector tol = 1e-9 * (1.0 + L.w.array().abs()) / L.row_norms.array();
  return static_cast<Index>((d.array() >= r - tol.array()).count());
}

/// (i+1)-th smallest entry of d, i.e. order statistic d_(i+1).
inline double order_statistic(Vector d, Index i)
{
  std::nth_element(d.data(), d.data() + i, d.data() + d.size());
  return d(i);
}

namespace detail {

inline void require_bounded(const LiftedPolyhedron & L)
{
  if (!L.box.bounded()) { throw Error(ErrorCode::UnboundedLift, "lifted polyhedron needs a bounded box"); }
}

// Rows of 𝒱 with the box appended as explicit inequalities.
inline std::pair<Matrix, Vector> rows_with_box(const LiftedPolyhedron & L)
{
  const Index n = L.dim(), m = L.n_c();
  Matrix C(m + 2 * n, n);
  Vector d(m + 2 * n);
  C.topRows(m)          = L.H;
  d.head(m)             = L.w;
  C.middleRows(m, n)    = Matrix::Identity(n, n);
  d.segment(m, n)       = L.box.upper;
  C.bottomRows(n)       = -Matrix::Identity(n, n);
  d.tail(n)             = -L.box.lower;
  return {C, d};
}

}  // namespace detail

/// max_{v ∈ 𝒱 ∩ box} d_j(v) for every row j.
inline Vector row_max_distances(const LiftedPolyhedron & L)
{
  detail::require_bounded(L);
  Vector out(L.n_c());
  for (Index j = 0; j < L.n_c(); ++j) {
    const auto r = lp_solve(Vector(L.H.row(j).transpose()), L.H, L.w, L.box);
    if (r.status != LpStatus::Optimal) { throw Error(ErrorCode::UnboundedLift, "lifted polyhedron is empty"); }
    out(j) = (L.w(j) - r.objective) / L.row_norms(j);
  }
  return out;
}

/// max_j max_{v ∈ 𝒱 ∩ box} d_j(v); cap used for i ≥ n_c.
inline double max_slack_distance(const LiftedPolyhedron & L)
{
  const Vector r = row_max_distances(L);
  return r.size() ? std::max(0.0, r.maxCoeff()) : 0.0;
}

/**
 * @brief Points of 𝒱 ∩ box: hit-and-run from the Chebyshev center mixed with
 * vertices of random linear objectives.
 */
inline std::vector<Vector> sample_lifted_points(const LiftedPolyhedron & L, int count, std::uint64_t seed)
{
  detail::require_bounded(L);
  const Index n = L.dim();
  auto [C, d]   = detail::rows_with_box(L);
  const Vector cn = C.rowwise().norm();

  // Chebyshev center: max t s.t. C v + ‖C_j‖ t ≤ d
  Matrix Ct(C.rows(), n + 1);
  Ct << C, cn;
  Vector cost = Vector::Zero(n + 1);
  cost(n)     = -1.0;
  Box cbox{Vector::Constant(n + 1, -kInf), Vector::Constant(n + 1, kInf)};
  cbox.lower(n)  = 0.0;
  const auto cheb = lp_solve(cost, Ct, d, cbox);
  if (cheb.status != LpStatus::Optimal) { throw Error(ErrorCode::NoFeasibleSamples, "lifted polyhedron is empty"); }
  const Vector center = cheb.point.head(n);
  const double radius = cheb.point(n);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto random_dir = [&] {
    Vector g(n);
    for (Index k = 0; k < n; ++k) { g(k) = gauss(rng); }
    return Vector(g / std::max(g.norm(), 1e-300));
  };
  auto vertex = [&] {
    const auto r = lp_solve(random_dir(), L.H, L.w, L.box);
    return r.status == LpStatus::Optimal ? r.point : center;
  };

  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  Vector cur = center;
  for (int k = 0; k < count; ++k) {
    const double pick = u01(rng);
    if (pick < 0.2) {
      out.push_back(vertex());
      continue;
    }
    if (radius <= 1e-12 || pick < 0.3) {
      const Vector a = vertex(), b = vertex();
      const double t = u01(rng);
      out.push_back(t * a + (1.0 - t) * b);
      continue;
    }
    const Vector dir = random_dir();
    const Vector cd  = C * dir;
    const Vector sl  = d - C * cur;
    double lo = -kInf, hi = kInf;
    for (Index j = 0; j < C.rows(); ++j) {
      if (cd(j) > 1e-14) {
        hi = std::min(hi, std::max(0.0, sl(j)) / cd(j));
      } else if (cd(j) < -1e-14) {
        lo = std::max(lo, -std::max(0.0, sl(j)) / -cd(j));
      }
    }
    if (!(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
      out.push_back(cur);
      continue;
    }
    cur = cur + (lo + u01(rng) * (hi - lo)) * dir;
    out.push_back(cur);
  }
  return out;
}

/// Upper bound on σ_i: minimum of d_(i+1)(v) over sampled v ∈ 𝒱 ∩ box.
inline double sigma_sample(const LiftedPolyhedron & L, Index i, int n_samples, std::uint64_t seed)
{
  if (i < 1) { throw Error(ErrorCode::InvalidArgument, "sigma index must be >= 1"); }
  detail::require_bounded(L);
  if (i >= L.n_c()) { return max_slack_distance(L); }
  const auto pts = sample_lifted_points(L, n_samples, seed);
  if (pts.empty()) { throw Error(ErrorCode::NoFeasibleSamples, "sigma_sample: no samples"); }
  double best = kInf;
  for (const auto & v : pts) { best = std::min(best, std::max(0.0, order_statistic(L.distances(v), i))); }
  return best;
}

struct MilpOptions
{
  std::optional<double> big_M;      ///< one constant for every row; per-row maxima from LPs when absent
  long node_limit        = 1000000;
  double time_limit_sec  = 0.0;     ///< 0 = unlimited
  double lower_hint      = 0.0;     ///< known valid lower bound (e.g. σ_{i−1})
  int improve_every      = 10;      ///< local LP improvement of the incumbent every k nodes
};

/// Result of the branch-and-bound; `optimal` is false only when a limit was hit.
struct MilpSigma
{
  double value       = 0.0;  ///< best attained d_(i+1)(v), an upper bound on σ_i
  double lower_bound = 0.0;  ///< proven lower bound on σ_i
  long nodes         = 0;
  double big_M       = 0.0;  ///< largest big-M constant used
  bool optimal       = false;
  Vector argmin;
};

namespace detail {

class SigmaBranchAndBound
{
public:
  SigmaBranchAndBound(const LiftedPolyhedron & L, Index i, Vector M) : L_(L), i_(i), Mrow_(std::move(M))
  {
    const Index nv = L.dim(), m = L.n_c();
    M_             = Mrow_.size() ? Mrow_.maxCoeff() : 0.0;
    nvar_          = nv + 1 + m;
    C_.setZero(2 * m + 1, nvar_);
    d_.resize(2 * m + 1);
    for (Index j = 0; j < m; ++j) {
      const double hn = L.row_norms(j);
      C_.block(j, 0, 1, nv) = L.H.row(j);
      d_(j)                 = L.w(j);
      // d_j(v) − M_jδ_j ≤ r
      C_.block(m + j, 0, 1, nv) = -L.H.row(j) / hn;
      C_(m + j, nv)             = -1.0;
      C_(m + j, nv + 1 + j)     = -Mrow_(j);
      d_(m + j)                 = -L.w(j) / hn;
    }
    C_.block(2 * m, nv + 1, 1, m).setOnes();
    d_(2 * m) = static_cast<double>(m - i - 1);
    cost_     = Vector::Zero(nvar_);
    cost_(nv) = 1.0;
  }

  MilpSigma run(const MilpOptions & opts)
  {
    using clock      = std::chrono::steady_clock;
    const auto start = clock::now();
    const Index nv = L_.dim(), m = L_.n_c();
    MilpSigma res;
    res.big_M = M_;
    seed_incumbent(res);

    struct Node
    {
      double bound;
      long order;
      std::vector<signed char> fix;
    };
    auto cmp = [](const Node & a, const Node & b) {
      return a.bound > b.bound || (a.bound == b.bound && a.order > b.order);
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);
    long order = 0;
    open.push(Node{opts.lower_hint, order++, std::vector<signed char>(static_cast<std::size_t>(m), -1)});

    auto gap_closed = [&](double bound) { return bound >= res.value - 1e-9 * (1.0 + std::abs(res.value)); };

    double global_lb = opts.lower_hint;
    while (!open.empty()) {
      Node node = open.top();
      open.pop();
      global_lb = std::max(global_lb, node.bound);
      if (gap_closed(node.bound)) {
        global_lb = res.value;
        open      = decltype(open)(cmp);
        break;
      }
      if (++res.nodes > opts.node_limit) {
        res.lower_bound = std::min(global_lb, res.value);
        return res;
      }
      if (opts.time_limit_sec > 0.0 &&
          std::chrono::duration<double>(clock::now() - start).count() > opts.time_limit_sec) {
        res.lower_bound = std::min(global_lb, res.value);
        return res;
      }

      Box b{Vector(nvar_), Vector(nvar_)};
      b.lower.head(nv) = L_.box.lower;
      b.upper.head(nv) = L_.box.upper;
      b.lower(nv)      = 0.0;
      b.upper(nv)      = M_;
      for (Index j = 0; j < m; ++j) {
        const signed char f = node.fix[static_cast<std::size_t>(j)];
        b.lower(nv + 1 + j) = f == 1 ? 1.0 : 0.0;
        b.upper(nv + 1 + j) = f == 0 ? 0.0 : 1.0;
      }
      const auto lp = lp_solve(cost_, C_, d_, b);
      if (lp.status != LpStatus::Optimal) { continue; }
      const double bound = std::max(node.bound, lp.objective);
      const Vector v     = lp.point.head(nv);
      consider(res, v);
      if (opts.improve_every > 0 && res.nodes % opts.improve_every == 0) { improve(res, v); }
      if (gap_closed(bound)) { continue; }

      Index branch = -1;
      double frac  = 1e-6;
      for (Index j = 0; j < m; ++j) {
        const double dj = lp.point(nv + 1 + j);
        const double f  = std::min(dj, 1.0 - dj);
        if (f > frac) {
          frac   = f;
          branch = j;
        }
      }
      if (branch < 0) {
        // integral: r is attained by v up to the LP tolerance
        consider(res, v);
        continue;
      }
      for (signed char val : {static_cast<signed char>(0), static_cast<signed char>(1)}) {
        Node child{bound, order++, node.fix};
        child.fix[static_cast<std::size_t>(branch)] = val;
        open.push(std::move(child));
      }
    }
    res.lower_bound = std::min(std::max(global_lb, opts.lower_hint), res.value);
    if (open.empty()) { res.lower_bound = res.value; }
    res.optimal = true;
    return res;
  }

private:
  void consider(MilpSigma & res, const Vector & v)
  {
    if (!L_.box.contains(v, 1e-9)) { return; }
    const double val = std::max(0.0, order_statistic(L_.distances(v), i_));
    if (res.argmin.size() == 0 || val < res.value) {
      res.value  = val;
      res.argmin = v;
    }
  }

  // Minimize the largest distance among the i+1 currently smallest ones.
  void improve(MilpSigma & res, Vector v)
  {
    const Index nv = L_.dim(), m = L_.n_c();
    for (int round = 0; round < 20; ++round) {
      const Vector d = L_.distances(v);
      std::vector<Index> idx(static_cast<std::size_t>(m));
      for (Index j = 0; j < m; ++j) { idx[static_cast<std::size_t>(j)] = j; }
      std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return d(a) < d(b); });
      Matrix C(m + i_ + 1, nv + 1);
      Vector rhs(m + i_ + 1);
      C.setZero();
      C.topLeftCorner(m, nv) = L_.H;
      rhs.head(m)            = L_.w;
      for (Index k = 0; k <= i_; ++k) {
        const Index j             = idx[static_cast<std::size_t>(k)];
        C.block(m + k, 0, 1, nv)  = -L_.H.row(j) / L_.row_norms(j);
        C(m + k, nv)              = -1.0;
        rhs(m + k)                = -L_.w(j) / L_.row_norms(j);
      }
      Box b{Vector(nv + 1), Vector(nv + 1)};
      b.lower.head(nv) = L_.box.lower;
      b.upper.head(nv) = L_.box.upper;
      b.lower(nv)      = 0.0;
      b.upper(nv)      = M_;
      Vector c         = Vector::Zero(nv + 1);
      c(nv)            = 1.0;
      const auto lp    = lp_solve(c, C, rhs, b);
      if (lp.status != LpStatus::Optimal) { return; }
      const double before = res.value;
      consider(res, lp.point.head(nv));
      if (!(res.value < before - 1e-12 * (1.0 + before))) { return; }
      v = lp.point.head(nv);
    }
  }

  void seed_incumbent(MilpSigma & res)
  {
    const Index nv = L_.dim();
    res.value      = kInf;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < 2 * static_cast<int>(nv) + 2; ++k) {
      Vector c(nv);
      for (Index a = 0; a < nv; ++a) { c(a) = gauss(rng); }
      const auto lp = lp_solve(c, L_.H, L_.w, L_.box);
      if (lp.status != LpStatus::Optimal) { throw Error(ErrorCode::UnboundedLift, "lifted polyhedron is empty"); }
      consider(res, lp.point);
      improve(res, lp.point);
      if (res.value == 0.0) { return; }
    }
  }

  const LiftedPolyhedron & L_;
  Index i_;
  Vector Mrow_;
  double M_ = 0.0;
  Index nvar_;
  Matrix C_;
  Vector d_, cost_;
};

}  // namespace detail

/**
 * @brief σ_i by branch-and-bound on the big-M formulation, without throwing on limits.
 *
 * Variables (v, r, δ): r ≥ d_j(v) − M_jδ_j, Σδ ≤ n_c − i − 1, v ∈ 𝒱 ∩ box;
 * minimize r. Rows with δ_j = 0 are the i + 1 rows within distance r; M_j is
 * the largest distance row j attains, so δ_j = 1 leaves r unconstrained.
 */
inline MilpSigma sigma_milp_report(const LiftedPolyhedron & L, Index i, const MilpOptions & opts = {})
{
  if (i < 1) { throw Error(ErrorCode::InvalidArgument, "sigma index must be >= 1"); }
  detail::require_bounded(L);
  if (i >= L.n_c()) {
    MilpSigma r;
    r.value = r.lower_bound = max_slack_distance(L);
    r.optimal               = true;
    return r;
  }
  Vector M;
  if (opts.big_M) {
    M = Vector::Constant(L.n_c(), *opts.big_M);
  } else {
    M = row_max_distances(L).cwiseMax(0.0);
    M = M.array() + 1e-7 * (1.0 + M.array());
  }
  detail::SigmaBranchAndBound bb(L, i, std::move(M));
  return bb.run(opts);
}

/// Exact σ_i; throws Timeout if the node or time limit is reached first.
inline double sigma_milp(const LiftedPolyhedron & L, Index i, const MilpOptions & opts = {})
{
  const auto r = sigma_milp_report(L, i, opts);
  if (!r.optimal) {
    throw Error(ErrorCode::Timeout, "sigma_milp: limit reached after " + std::to_string(r.nodes) + " nodes");
  }
  return r.value;
}

enum class SigmaMethod { Milp, Sampled };

inline std::string_view to_string(SigmaMethod m) { return m == SigmaMethod::Milp ? "milp" : "sampled"; }

struct SigmaTable
{
  std::map<int, double> sigma;  ///< i → σ_i for i = 1..i_max
  SigmaMethod method = SigmaMethod::Milp;
  double r_max       = 0.0;
  /// Proven lower bounds (MILP only; equal to sigma when every entry was solved to optimality).
  std::map<int, double> lower;
};

struct SigmaTableOptions
{
  SigmaMethod method   = SigmaMethod::Milp;
  int n_samples        = 10000;
  std::uint64_t seed   = 1;
  MilpOptions milp     = {};
  bool allow_partial   = false;  ///< keep best bounds instead of throwing Timeout
};

/// σ_1 … σ_{i_max}, computed in increasing i so each value seeds the next lower bound.
inline SigmaTable sigma_table(const LiftedPolyhedron & L, Index i_max, const SigmaTableOptions & opts = {})
{
  detail::require_bounded(L);
  if (i_max < 1 || i_max > std::max<Index>(1, L.n_c() - 1)) {
    throw Error(ErrorCode::InvalidArgument, "sigma_table: i_max must lie in [1, n_c - 1]");
  }
  SigmaTable t;
  t.method = opts.method;
  t.r_max  = max_slack_distance(L);
  if (opts.method == SigmaMethod::Sampled) {
    const auto pts = sample_lifted_points(L, opts.n_samples, opts.seed);
    if (pts.empty()) { throw Error(ErrorCode::NoFeasibleSamples, "sigma_table: no samples"); }
    for (Index i = 1; i <= i_max; ++i) {
      double best = kInf;
      if (i >= L.n_c()) {
        best = t.r_max;
      } else {
        for (const auto & v : pts) { best = std::min(best, std::max(0.0, order_statistic(L.distances(v), i))); }
      }
      t.sigma[static_cast<int>(i)] = best;
    }
    return t;
  }
  MilpOptions mo = opts.milp;
  double prev_lb = 0.0;
  for (Index i = 1; i <= i_max; ++i) {
    mo.lower_hint = prev_lb;
    const auto r  = sigma_milp_report(L, i, mo);
    if (!r.optimal && !opts.allow_partial) {
      throw Error(ErrorCode::Timeout, "sigma_table: limit reached at i = " + std::to_string(i));
    }
    t.sigma[static_cast<int>(i)] = r.value;
    t.lower[static_cast<int>(i)] = r.lower_bound;
    prev_lb                      = r.lower_bound;
  }
  return t;
}

/**
 * @brief Predicted cap n_z + i* on the kept count, where i* is the smallest i
 * with dist ≤ σ_i / √(1 + κ²); nothing if no entry qualifies.
 */
inline std::optional<Index> kept_count_bound(double kappa, const SigmaTable & t, double dist, Index n_z)
{
  const double s = std::sqrt(1.0 + kappa * kappa);
  for (const auto & [i, sigma] : t.sigma) {
    if (dist <= sigma / s) { return n_z + i; }
  }
  return std::nullopt;
}

/// FNV-1a over the bytes of (H, w, box); used as a cache key for σ tables.
inline std::string lifted_hash(const LiftedPolyhedron & L)
{
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](const void * data, std::size_t n) {
    const auto * b = static_cast<const unsigned char *>(data);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= b[k];
      h *= 1099511628211ull;
    }
  };
  const std::int64_t dims[2] = {static_cast<std::int64_t>(L.H.rows()), static_cast<std::int64_t>(L.H.cols())};
  feed(dims, sizeof dims);
  for (Index r = 0; r < L.H.rows(); ++r) {
    for (Index c = 0; c < L.H.cols(); ++c) {
      const double x = L.H(r, c);
      feed(&x, sizeof x);
    }
  }
  feed(L.w.data(), sizeof(double) * static_cast<std::size_t>(L.w.size()));
  feed(L.box.lower.data(), sizeof(double) * static_cast<std::size_t>(L.box.lower.size()));
  feed(L.box.upper.data(), sizeof(double) * static_cast<std::size_t>(L.box.upper.size()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/**
 * @brief Containment check linking the lifted and the trimming views: every row
 * whose half-space contains ℬ(v(x̂), √(1+κ²)‖x − x̂‖) is removable at radius κ‖x − x̂‖.
 * Returns the rows where this fails (expected empty).
 */
inline IndexSet lifted_containment_violations(const MpQp & p, double kappa, const SolvedSample & s, const Vector & x)
{
  const Vector v  = lifted_point(s);
  Matrix H(p.n_c(), p.n_x() + p.n_z());
  H << -p.S, p.G;
  const Vector d  = (p.w - H * v).cwiseQuotient(H.rowwise().norm());
  const double rr = std::sqrt(1.0 + kappa * kappa) * (x - s.x_hat).norm();
  std::vector<int> bad;
  for (int j = 0; j < static_cast<int>(p.n_c()); ++j) {
    if (s.active.contains(j) || !(rr <= d(j))) { continue; }
    if (!removal_test(p, kappa, s, x, j)) { bad.push_back(j); }
  }
  return IndexSet(std::move(bad));
}

}  // namespace mptrim
