#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mptrim/error.hpp"
#include "mptrim/numkit.hpp"

namespace mptrim {

/**
 * @brief Sorted, duplicate-free set of 0-based constraint indices.
 */
class IndexSet
{
public:
  IndexSet() = default;
  IndexSet(std::initializer_list<int> items) : items_(items) { normalize(); }
  explicit IndexSet(std::vector<int> items) : items_(std::move(items)) { normalize(); }

  /// {0, 1, ..., n-1}
  static IndexSet range(Index n)
  {
    IndexSet s;
    s.items_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) { s.items_[static_cast<std::size_t>(i)] = static_cast<int>(i); }
    return s;
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  int operator[](std::size_t k) const { return items_[k]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::vector<int> & items() const { return items_; }

  bool contains(int j) const { return std::binary_search(items_.begin(), items_.end(), j); }

  bool subset_of(const IndexSet & o) const
  {
    return std::includes(o.items_.begin(), o.items_.end(), items_.begin(), items_.end());
  }

  /// True if every member lies in [0, n).
  bool in_range(Index n) const { return items_.empty() || (items_.front() >= 0 && items_.back() < n); }

  friend IndexSet operator|(const IndexSet & a, const IndexSet & b)
  {
    IndexSet r;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.items_));
    return r;
  }
  friend IndexSet operator&(const IndexSet & a, const IndexSet & b)
  {
    IndexSet r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.items_));
    return r;
  }
  friend IndexSet operator-(const IndexSet & a, const IndexSet & b)
  {
    IndexSet r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r.items_));
    return r;
  }
  friend bool operator==(const IndexSet & a, const IndexSet & b) { return a.items_ == b.items_; }

  std::string str() const
  {
    std::ostringstream os;
    os << '{';
    for (std::size_t k = 0; k < items_.size(); ++k) { os << (k ? "," : "") << items_[k]; }
    os << '}';
    return os.str();
  }

private:
  void normalize()
  {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
  }

  std::vector<int> items_;
};

/**
 * @brief Parametric QP  min_z ½zᵀHz + xᵀFz  s.t.  Gz ≤ Sx + w.
 */
struct MpQp
{
  Matrix H;  ///< n_z × n_z, symmetric positive definite
  Matrix F;  ///< n_x × n_z
  Matrix G;  ///< n_c × n_z, no zero rows
  Matrix S;  ///< n_c × n_x
  Vector w;  ///< n_c
  std::string name;

  Index n_z() const { return H.rows(); }
  Index n_x() const { return F.rows(); }
  Index n_c() const { return G.rows(); }

  /// Right-hand side Sx + w.
  Vector rhs(const Vector & x) const { return S * x + w; }

  double objective(const Vector & x, const Vector & z) const
  {
    return 0.5 * z.dot(H * z) + x.dot(F * z);
  }
};

/// Feasibility, activity and KKT tolerances. Each is scaled by (1 + a relevant magnitude).
struct Tolerances
{
  double feas = 1e-8;
  double act  = 1e-7;
  double kkt  = 1e-7;

  static Tolerances standard() { return {}; }
  static Tolerances strict() { return {1e-10, 1e-9, 1e-9}; }
};

enum class QpStatus { Optimal, Infeasible };

inline std::string_view to_string(QpStatus s) { return s == QpStatus::Optimal ? "Optimal" : "Infeasible"; }

struct QpSolution
{
  Vector z_star;
  Vector lambda;  ///< multipliers in the order of the solved index set
  IndexSet active;
  QpStatus status = QpStatus::Infeasible;
  int iterations  = 0;
};

/// A solved instance (x̂, z*(x̂), 𝔸(x̂)).
struct SolvedSample
{
  Vector x_hat;
  Vector z_star;
  IndexSet active;
};

/// Empty result means the problem is valid.
inline std::vector<std::string> validate(const MpQp & p)
{
  std::vector<std::string> out;
  const Index nz = p.H.rows();
  if (p.H.cols() != nz) { out.push_back("H is not square"); }
  if (p.F.cols() != nz) { out.push_back("F must have n_z columns"); }
  if (p.G.cols() != nz) { out.push_back("G must have n_z columns"); }
  if (p.S.rows() != p.G.rows()) { out.push_back("S must have n_c rows"); }
  if (p.S.cols() != p.F.rows()) { out.push_back("S must have n_x columns"); }
  if (p.w.size() != p.G.rows()) { out.push_back("w must have n_c entries"); }
  if (!out.empty()) { return out; }
  if (!p.H.allFinite() || !p.F.allFinite() || !p.G.allFinite() || !p.S.allFinite() || !p.w.allFinite()) {
    out.push_back("non-finite entries");
    return out;
  }
  if (nz == 0) {
    out.push_back("H-not-PD: empty decision vector");
  } else {
    try {
      cholesky(p.H);
    } catch (const Error & e) {
      out.push_back(e.code() == ErrorCode::NotSymmetric ? "H-not-symmetric" : "H-not-PD");
    }
  }
  const double zt = rank_tolerance(p.G);
  std::vector<Index> zero;
  for (Index j = 0; j < p.G.rows(); ++j) {
    if (p.G.row(j).norm() <= zt) { zero.push_back(j); }
  }
  if (!zero.empty()) {
    std::ostringstream os;
    os << "zero rows of G:";
    for (Index j : zero) { os << ' ' << j; }
    out.push_back(os.str());
  }
  return out;
}

inline void require_valid(const MpQp & p)
{
  const auto diag = validate(p);
  if (!diag.empty()) { throw Error(ErrorCode::InvalidProblem, "invalid mp-QP: " + diag.front()); }
}

/// {j : |G_j z − w_j − S_j x| ≤ tol·(1+|w_j|)}
inline IndexSet active_set(const MpQp & p, const Vector & x, const Vector & z, double tol)
{
  const Vector slack = p.rhs(x) - p.G * z;
  std::vector<int> out;
  for (Index j = 0; j < slack.size(); ++j) {
    if (std::abs(slack(j)) <= tol * (1.0 + std::abs(p.w(j)))) { out.push_back(static_cast<int>(j)); }
  }
  return IndexSet(std::move(out));
}

/// Row scaling (H, F, ΦG, ΦS, Φw) with Φ = diag(phi).
inline MpQp scale(const MpQp & p, const Vector & phi)
{
  if (phi.size() != p.n_c()) { throw Error(ErrorCode::DimensionMismatch, "scale: phi must have n_c entries"); }
  if (!(phi.array() > 0.0).all() || !phi.allFinite()) {
    throw Error(ErrorCode::NonPositiveScale, "scale: entries must be positive");
  }
  MpQp q = p;
  q.G    = phi.asDiagonal() * p.G;
  q.S    = phi.asDiagonal() * p.S;
  q.w    = phi.cwiseProduct(p.w);
  return q;
}

/// Rows of G indexed by `idx`.
inline Matrix rows_of(const Matrix & A, const IndexSet & idx)
{
  Matrix out(static_cast<Index>(idx.size()), A.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) { out.row(static_cast<Index>(k)) = A.row(idx[k]); }
  return out;
}

inline Vector entries_of(const Vector & v, const IndexSet & idx)
{
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) { out(static_cast<Index>(k)) = v(idx[k]); }
  return out;
}

/// True iff the rows of G selected by `active` are linearly independent.
inline bool licq_holds(const MpQp & p, const IndexSet & active)
{
  if (active.empty()) { return true; }
  if (static_cast<Index>(active.size()) > p.n_z()) { return false; }
  const Matrix GA = rows_of(p.G, active);
  return numerical_rank(GA, rank_tolerance(p.G)) == GA.rows();
}

/**
 * @brief Dense primal active-set solver with a cached factorization of H.
 *
 * Each iteration solves the equality-constrained subproblem on the working set
 * in range-space form  (G_W H⁻¹ G_Wᵀ) λ = G_W z_u − b_W,  z = z_u − H⁻¹G_Wᵀλ,
 * where z_u = −H⁻¹Fᵀx is the unconstrained minimizer.
 */
class QpSolver
{
public:
  explicit QpSolver(MpQp problem, Tolerances tol = {}) : p_(std::move(problem)), tol_(tol)
  {
    require_valid(p_);
    Hinv_   = spd_inverse(p_.H);
    HinvGt_ = Hinv_ * p_.G.transpose();
    HinvFt_ = Hinv_ * p_.F.transpose();
  }

  const MpQp & problem() const { return p_; }
  const Tolerances & tolerances() const { return tol_; }
  const Matrix & Hinv() const { return Hinv_; }
  const Matrix & HinvGt() const { return HinvGt_; }
  const Matrix & HinvFt() const { return HinvFt_; }

  /// Unconstrained minimizer −H⁻¹Fᵀx.
  Vector unconstrained(const Vector & x) const { return -HinvFt_ * x; }

  /**
   * @brief Solve the QP restricted to the rows in `idx`.
   * @param hint optional initial working set (warm start); ignored if it does
   *        not yield a feasible starting point.
   */
  QpSolution solve(const Vector & x, const IndexSet & idx, const std::optional<IndexSet> & hint = std::nullopt) const
  {
    if (x.size() != p_.n_x()) { throw Error(ErrorCode::DimensionMismatch, "qp_solve: x has wrong size"); }
    if (!idx.in_range(p_.n_c())) { throw Error(ErrorCode::InvalidArgument, "qp_solve: index out of range"); }

    const Vector b  = p_.rhs(x);
    const Vector zu = unconstrained(x);
    const std::vector<int> & rows = idx.items();
    const double bscale = 1.0 + (rows.empty() ? 0.0 : entries_of(b, idx).cwiseAbs().maxCoeff());
    const double ftol   = tol_.feas * bscale;

    QpSolution sol;
    std::vector<int> W;
    Vector z;
    bool started = false;

    if (hint) {
      std::vector<int> cand;
      for (int j : *hint) {
        if (idx.contains(j)) { cand.push_back(j); }
      }
      W = independent_subset(cand);
      if (!W.empty()) {
        Vector lam;
        z = eqp(zu, b, W, lam);
        if (max_violation(z, b, rows) <= ftol) { started = true; }
      }
      if (!started) { W.clear(); }
    }
    if (!started) {
      z = zu;
      if (max_violation(z, b, rows) > ftol) {
        auto start = phase_one(b, idx);
        if (!start) {
          sol.status = QpStatus::Infeasible;
          return sol;
        }
        z = *start;
      }
    }

    const Index n      = p_.n_z();
    const int max_iter = static_cast<int>(10 * (n + p_.n_c()) + 100);
    int iter           = 0;
    int stall          = 0;
    Vector lam;
    while (true) {
      if (++iter > max_iter) {
        throw Error(ErrorCode::NoConvergence, "qp_solve: active-set iteration limit reached");
      }
      const bool bland = stall > 2 * static_cast<int>(n + 1);
      const Vector zeq = eqp(zu, b, W, lam);
      const Vector step = zeq - z;
      if (step.norm() <= 1e-12 * (1.0 + z.norm() + zeq.norm())) {
        z = zeq;
        int drop        = -1;
        double most_neg = -1e-12 * (1.0 + (lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0));
        for (Index k = 0; k < lam.size(); ++k) {
          if (lam(k) < most_neg) {
            if (bland) {
              if (drop < 0 || W[static_cast<std::size_t>(k)] < W[static_cast<std::size_t>(drop)]) { drop = static_cast<int>(k); }
            } else {
              most_neg = lam(k);
              drop     = static_cast<int>(k);
            }
          }
        }
        if (drop < 0) { break; }
        W.erase(W.begin() + drop);
        continue;
      }

      double alpha = 1.0;
      int block    = -1;
      for (int j : rows) {
        if (std::find(W.begin(), W.end(), j) != W.end()) { continue; }
        const double gp = p_.G.row(j).dot(step);
        if (gp <= 1e-11 * p_.G.row(j).norm() * step.norm()) { continue; }
        const double a = std::max(0.0, b(j) - p_.G.row(j).dot(z)) / gp;
        if (a < alpha) {
          alpha = a;
          block = j;
        }
      }
      z += alpha * step;
      if (block >= 0) {
        W.push_back(block);
        stall = alpha == 0.0 ? stall + 1 : 0;
      } else {
        z     = zeq;
        stall = 0;
      }
    }

    sol.status     = QpStatus::Optimal;
    sol.iterations = iter;
    sol.z_star     = z;
    sol.lambda     = Vector::Zero(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < W.size(); ++k) {
      const auto pos = std::lower_bound(rows.begin(), rows.end(), W[k]) - rows.begin();
      sol.lambda(pos) = std::max(0.0, lam(static_cast<Index>(k)));
    }
    std::vector<int> act;
    for (int j : rows) {
      if (std::abs(b(j) - p_.G.row(j).dot(z)) <= tol_.act * (1.0 + std::abs(p_.w(j)))) { act.push_back(j); }
    }
    sol.active = IndexSet(std::move(act));
    return sol;
  }

  /// Largest KKT residual of a solution (stationarity, dual sign, complementarity, primal).
  double kkt_residual(const Vector & x, const IndexSet & idx, const QpSolution & s) const
  {
    const Vector b = p_.rhs(x);
    Vector grad    = p_.H * s.z_star + p_.F.transpose() * x;
    double r       = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int j      = idx[k];
      const double l   = s.lambda(static_cast<Index>(k));
      const double slk = b(j) - p_.G.row(j).dot(s.z_star);
      grad += l * p_.G.row(j).transpose();
      r = std::max({r, -l, -slk, std::abs(l * slk)});
    }
    return std::max(r, grad.norm());
  }

private:
  // Equality-constrained minimizer on the working set; fills the multipliers.
  Vector eqp(const Vector & zu, const Vector & b, const std::vector<int> & W, Vector & lam) const
  {
    const Index k = static_cast<Index>(W.size());
    lam.resize(k);
    if (k == 0) { return zu; }
    Matrix GW(k, p_.n_z()), HGt(p_.n_z(), k);
    Vector rhs(k);
    for (Index i = 0; i < k; ++i) {
      const int j = W[static_cast<std::size_t>(i)];
      GW.row(i)   = p_.G.row(j);
      HGt.col(i)  = HinvGt_.col(j);
      rhs(i)      = p_.G.row(j).dot(zu) - b(j);
    }
    const Matrix M = GW * HGt;
    lam            = M.ldlt().solve(rhs);
    return zu - HGt * lam;
  }

  // Greedy linearly independent subset, keeping the given order.
  std::vector<int> independent_subset(const std::vector<int> & cand) const
  {
    std::vector<int> out;
    const double tol = rank_tolerance(p_.G);
    for (int j : cand) {
      if (static_cast<Index>(out.size()) >= p_.n_z()) { break; }
      std::vector<int> trial = out;
      trial.push_back(j);
      Matrix A(static_cast<Index>(trial.size()), p_.n_z());
      for (std::size_t i = 0; i < trial.size(); ++i) { A.row(static_cast<Index>(i)) = p_.G.row(trial[i]); }
      if (numerical_rank(A, tol) == A.rows()) { out = std::move(trial); }
    }
    return out;
  }

  double max_violation(const Vector & z, const Vector & b, const std::vector<int> & rows) const
  {
    double v = 0.0;
    for (int j : rows) { v = std::max(v, p_.G.row(j).dot(z) - b(j)); }
    return v;
  }

  // Feasible point of {G_idx z ≤ b_idx}, or nothing if the set is empty.
  std::optional<Vector> phase_one(const Vector & b, const IndexSet & idx) const
  {
    const Matrix C = rows_of(p_.G, idx);
    const Vector d = entries_of(b, idx);
    const auto r   = lp_solve(Vector::Zero(p_.n_z()), C, d);
    if (r.status != LpStatus::Optimal) { return std::nullopt; }
    return r.point;
  }

  MpQp p_;
  Tolerances tol_;
  Matrix Hinv_, HinvGt_, HinvFt_;
};

inline QpSolution qp_solve(const MpQp & p, const Vector & x, const IndexSet & idx, const Tolerances & tol = {})
{
  return QpSolver(p, tol).solve(x, idx);
}

inline QpSolution qp_solve_warm(const MpQp & p, const Vector & x, const IndexSet & idx, const IndexSet & hint,
  const Tolerances & tol = {})
{
  return QpSolver(p, tol).solve(x, idx, hint);
}

/// Solve the full problem at x and package the result, or nothing if infeasible.
inline std::optional<SolvedSample> solve_sample(const QpSolver & solver, const Vector & x)
{
  const auto s = solver.solve(x, IndexSet::range(solver.problem().n_c()));
  if (s.status != QpStatus::Optimal) { return std::nullopt; }
  return SolvedSample{x, s.z_star, s.active};
}

}  // namespace mptrim
