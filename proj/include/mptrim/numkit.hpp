#pragma once

/**
 * @file
 * @brief Dense numerical kernels shared by every other module.
 *
 * Factorizations, norms, a bounded-variable primal simplex and zero-order-hold
 * discretization. All matrices are dense Eigen types.
 */

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace mptrim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index  = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Maximum absolute row sum.
inline double inf_norm(const Matrix & A)
{
  if (A.size() == 0) { return 0.0; }
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Pivot/rank tolerance used for PD checks, rank tests and simplex degeneracy.
inline double rank_tolerance(const Matrix & A) { return 1e-10 * (inf_norm(A) + 1.0); }

inline bool all_finite(const Matrix & A) { return A.allFinite(); }

/// Lower-triangular L with L * L^T = A.
inline Matrix cholesky(const Matrix & A)
{
  if (A.rows() != A.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "cholesky: matrix is not square");
  }
  const double tol = rank_tolerance(A);
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw Error(ErrorCode::NotSymmetric, "cholesky: matrix is not symmetric");
  }
  const Index n = A.rows();
  Matrix L   = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = A(j, j) - L.row(j).head(j).squaredNorm();
    if (!(pivot > tol)) {
      throw Error(ErrorCode::NotPositiveDefinite,
        "cholesky: pivot " + std::to_string(j) + " is " + std::to_string(pivot));
    }
    L(j, j) = std::sqrt(pivot);
    for (Index i = j + 1; i < n; ++i) {
      L(i, j) = (A(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
  }
  return L;
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
inline Matrix spd_inverse(const Matrix & A)
{
  const Matrix L    = cholesky(A);
  const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(A.rows(), A.cols()));
  Matrix inv        = Linv.transpose() * Linv;
  return 0.5 * (inv + inv.transpose());
}

/// Largest singular value, from the eigenvalues of the smaller Gram matrix.
inline double spectral_norm(const Matrix & A)
{
  if (A.size() == 0) { return 0.0; }
  const Matrix gram = A.rows() <= A.cols() ? Matrix(A * A.transpose()) : Matrix(A.transpose() * A);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

/// Number of singular values above `tol` (defaults to rank_tolerance(A)).
inline Index numerical_rank(const Matrix & A, std::optional<double> tol = std::nullopt)
{
  if (A.size() == 0) { return 0; }
  Eigen::JacobiSVD<Matrix> svd(A);
  const double t = tol.value_or(rank_tolerance(A));
  return (svd.singularValues().array() > t).count();
}

inline double spectral_radius(const Matrix & A)
{
  if (A.size() == 0) { return 0.0; }
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Zero-order-hold discretization (A, B) of x' = Ac x + Bc u with step h.
inline std::pair<Matrix, Matrix> zoh_discretize(const Matrix & Ac, const Matrix & Bc, double h)
{
  if (!(h > 0.0)) { throw Error(ErrorCode::InvalidArgument, "zoh_discretize: step must be positive"); }
  if (Ac.rows() != Ac.cols() || Bc.rows() != Ac.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "zoh_discretize: inconsistent dimensions");
  }
  const Index n = Ac.rows(), m = Bc.cols();
  Matrix M      = Matrix::Zero(n + m, n + m);
  M.topLeftCorner(n, n)  = Ac * h;
  M.topRightCorner(n, m) = Bc * h;
  const Matrix E = M.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

// ---------------------------------------------------------------------------
// Linear programming
// ---------------------------------------------------------------------------

/// Componentwise bounds lower <= x <= upper; entries may be infinite.
struct Box
{
  Vector lower;
  Vector upper;

  static Box uniform(Index n, double lo, double hi)
  {
    return Box{Vector::Constant(n, lo), Vector::Constant(n, hi)};
  }
  Index dim() const { return lower.size(); }
  bool bounded() const { return lower.allFinite() && upper.allFinite(); }
  bool contains(const Vector & v, double tol = 0.0) const
  {
    return ((v - lower).array() >= -tol).all() && ((upper - v).array() >= -tol).all();
  }
  double diameter() const { return (upper - lower).norm(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline std::string_view to_string(LpStatus s)
{
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct LpResult
{
  LpStatus status{LpStatus::Infeasible};
  /// Present iff status is Optimal.
  Vector point;
  double objective{0.0};
  int iterations{0};
};

struct LpOptions
{
  double feasibility_tol = 1e-9;
  double optimality_tol  = 1e-9;
  /// 0 selects 50 * (n + m) + 1000.
  int max_iterations = 0;
};

namespace detail {

/**
 * Dense-tableau primal simplex over  [C I -E] y = d  with bounds on every
 * column. Structural columns carry the caller's box, slacks are >= 0 and
 * artificials (one per row violated at the starting point) are driven to zero
 * in phase 1 and fixed at zero afterwards.
 */
class BoundedSimplex
{
public:
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BoundedSimplex(const Matrix & C, const Vector & d, const Vector & lo, const Vector & up, const LpOptions & opts)
      : C_(C), d_(d), opts_(opts), m_(C.rows()), n_(C.cols())
  {
    const double tol = opts.feasibility_tol * (1.0 + (d.size() ? d.cwiseAbs().maxCoeff() : 0.0));

    Vector x0(n_);
    for (Index j = 0; j < n_; ++j) {
      if (std::isfinite(lo(j))) {
        x0(j) = lo(j);
      } else if (std::isfinite(up(j))) {
        x0(j) = up(j);
      } else {
        x0(j) = 0.0;
      }
    }
    const Vector s0 = d - C * x0;

    std::vector<Index> art_rows;
    for (Index i = 0; i < m_; ++i) {
      if (s0(i) < -tol) { art_rows.push_back(i); }
    }
    art_rows_ = art_rows;
    n_art_    = static_cast<Index>(art_rows.size());
    ntot_  = n_ + m_ + n_art_;

    T_.setZero(m_, ntot_);
    T_.leftCols(n_)        = C;
    T_.middleCols(n_, m_).setIdentity();
    lo_.resize(ntot_);
    up_.resize(ntot_);
    x_.resize(ntot_);
    lo_.head(n_) = lo;
    up_.head(n_) = up;
    lo_.segment(n_, m_).setZero();
    up_.segment(n_, m_).setConstant(kInf);
    lo_.tail(n_art_).setZero();
    up_.tail(n_art_).setConstant(kInf);
    x_.head(n_) = x0;

    basis_.assign(static_cast<std::size_t>(m_), -1);
    pos_.assign(static_cast<std::size_t>(ntot_), -1);
    for (Index i = 0; i < m_; ++i) {
      basis_[i]        = n_ + i;
      pos_[n_ + i]     = i;
      x_(n_ + i)       = s0(i);
    }
    for (Index k = 0; k < n_art_; ++k) {
      const Index i   = art_rows[k];
      const Index col = n_ + m_ + k;
      T_(i, col)      = -1.0;
      // artificial replaces the slack in the basis; row i is negated so the basic column is +e_i
      T_.row(i) *= -1.0;
      pos_[n_ + i]   = -1;
      x_(n_ + i)     = 0.0;
      basis_[i]      = col;
      pos_[col]      = i;
      x_(col)        = -s0(i);
    }
    piv_tol_ = 1e-10 * (inf_norm(C) + 1.0);
    max_iter_ = opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(50 * (n_ + m_) + 1000);
  }

  LpResult solve(const Vector & cost)
  {
    LpResult res;
    if (n_art_ > 0) {
      Vector c1 = Vector::Zero(ntot_);
      c1.tail(n_art_).setOnes();
      const auto st = iterate(c1);
      (void)st;  // phase 1 is bounded below by zero
      const double infeas = x_.tail(n_art_).sum();
      const double tol    = opts_.feasibility_tol * (1.0 + (d_.size() ? d_.cwiseAbs().maxCoeff() : 0.0));
      if (infeas > tol) {
        res.status     = LpStatus::Infeasible;
        res.iterations = iterations_;
        return res;
      }
      for (Index k = n_ + m_; k < ntot_; ++k) {
        up_(k) = 0.0;
        if (pos_[k] < 0) { x_(k) = 0.0; }
      }
    }
    Vector c2 = Vector::Zero(ntot_);
    c2.head(n_) = cost;
    const auto st = iterate(c2);
    res.iterations = iterations_;
    if (st == LpStatus::Unbounded) {
      res.status = LpStatus::Unbounded;
      return res;
    }
    polish();
    res.status    = LpStatus::Optimal;
    res.point     = x_.head(n_);
    res.objective = cost.dot(res.point);
    return res;
  }

private:
  LpStatus iterate(const Vector & cost)
  {
    bool bland    = false;
    int stall     = 0;
    double best   = cost.dot(x_);
    const int stall_limit = static_cast<int>(5 * (n_ + m_));

    while (true) {
      if (iterations_ >= max_iter_) {
        throw Error(ErrorCode::IterationLimit, "lp_solve: simplex iteration limit reached");
      }
      Vector cB(m_);
      for (Index i = 0; i < m_; ++i) { cB(i) = cost(basis_[i]); }
      const Vector rc = cost - T_.transpose() * cB;

      Index enter = -1;
      int dir     = 0;
      double bestscore = 0.0;
      for (Index j = 0; j < ntot_; ++j) {
        if (pos_[j] >= 0) { continue; }
        if (lo_(j) == up_(j)) { continue; }
        int dj = 0;
        const bool at_lo = std::isfinite(lo_(j)) && x_(j) <= lo_(j);
        const bool at_up = std::isfinite(up_(j)) && x_(j) >= up_(j);
        if (rc(j) < -opts_.optimality_tol && !at_up) {
          dj = +1;
        } else if (rc(j) > opts_.optimality_tol && !at_lo) {
          dj = -1;
        }
        if (dj == 0) { continue; }
        if (bland) {
          enter = j;
          dir   = dj;
          break;
        }
        if (std::abs(rc(j)) > bestscore) {
          bestscore = std::abs(rc(j));
          enter     = j;
          dir       = dj;
        }
      }
      if (enter < 0) { return LpStatus::Optimal; }

      // ratio test
      double tmin   = kInf;
      Index leave   = -1;  // row index, -1 for a bound flip
      double lalpha = 0.0;
      if (std::isfinite(lo_(enter)) && std::isfinite(up_(enter))) { tmin = up_(enter) - lo_(enter); }
      for (Index r = 0; r < m_; ++r) {
        const double alpha = dir * T_(r, enter);
        const Index b      = basis_[r];
        double lim         = kInf;
        if (alpha > piv_tol_) {
          if (std::isfinite(lo_(b))) { lim = std::max(0.0, (x_(b) - lo_(b)) / alpha); }
        } else if (alpha < -piv_tol_) {
          if (std::isfinite(up_(b))) { lim = std::max(0.0, (up_(b) - x_(b)) / -alpha); }
        } else {
          continue;
        }
        if (!std::isfinite(lim)) { continue; }
        const double slack = std::isfinite(tmin) ? 1e-12 * (1.0 + tmin) : 0.0;
        if (lim < tmin - slack) {
          tmin = lim;
          leave = r;
          lalpha = alpha;
        } else if (lim <= tmin + slack && leave >= 0) {
          const bool better = bland ? basis_[r] < basis_[leave] : std::abs(alpha) > std::abs(lalpha);
          if (better) {
            tmin   = std::min(tmin, lim);
            leave  = r;
            lalpha = alpha;
          }
        }
      }
      if (!std::isfinite(tmin)) { return LpStatus::Unbounded; }

      ++iterations_;
      const Vector col = T_.col(enter);
      x_(enter) += dir * tmin;
      for (Index r = 0; r < m_; ++r) { x_(basis_[r]) -= dir * col(r) * tmin; }

      if (leave < 0) {
        x_(enter) = dir > 0 ? up_(enter) : lo_(enter);
      } else {
        const Index b = basis_[leave];
        x_(b)         = lalpha > 0 ? lo_(b) : up_(b);
        pos_[b]       = -1;
        basis_[leave] = enter;
        pos_[enter]   = leave;
        pivot(leave, enter);
      }

      const double obj = cost.dot(x_);
      if (obj < best - 1e-12 * (1.0 + std::abs(best))) {
        best  = obj;
        stall = 0;
      } else if (++stall > stall_limit) {
        bland = true;
      }
      if (iterations_ % 200 == 0) { refactor(); }
    }
  }

  void pivot(Index r, Index j)
  {
    const double p = T_(r, j);
    T_.row(r) /= p;
    Vector colj = T_.col(j);
    colj(r)     = 0.0;
    const Eigen::RowVectorXd rowr = T_.row(r);
    T_.noalias() -= colj * rowr;
  }

  // Recompute tableau and basic values from the original data.
  void refactor()
  {
    if (m_ == 0) { return; }
    RowMajor A(m_, ntot_);
    A.setZero();
    A.leftCols(n_)        = C_;
    A.middleCols(n_, m_).setIdentity();
    for (Index k = 0; k < n_art_; ++k) {
      A(art_rows_[static_cast<std::size_t>(k)], n_ + m_ + k) = -1.0;
    }
    Matrix B(m_, m_);
    for (Index i = 0; i < m_; ++i) { B.col(i) = A.col(basis_[i]); }
    Eigen::PartialPivLU<Matrix> lu(B);
    Vector rhs = d_;
    for (Index j = 0; j < ntot_; ++j) {
      if (pos_[j] < 0 && x_(j) != 0.0) { rhs -= A.col(j) * x_(j); }
    }
    const Vector xb = lu.solve(rhs);
    if (!xb.allFinite()) { return; }
    T_ = lu.solve(Matrix(A));
    for (Index i = 0; i < m_; ++i) { x_(basis_[i]) = xb(i); }
  }

  // Clean up accumulated drift in the structural values.
  void polish()
  {
    const double tol = 1e-8 * (1.0 + (d_.size() ? d_.cwiseAbs().maxCoeff() : 0.0));
    const Vector x   = x_.head(n_);
    const double viol = m_ ? (C_ * x - d_).maxCoeff() : 0.0;
    if (viol > tol) { refactor(); }
  }

  Matrix C_;
  Vector d_;
  LpOptions opts_;
  Index m_, n_, n_art_{0}, ntot_{0};
  RowMajor T_;
  Vector lo_, up_, x_;
  std::vector<Index> basis_, pos_;
  std::vector<Index> art_rows_;
  double piv_tol_{1e-10};
  int max_iter_{0};
  int iterations_{0};
};

}  // namespace detail

/**
 * @brief Minimize cost^T x subject to C x <= d and an optional box.
 *
 * Infeasible and unbounded problems are reported through the status, never by
 * exception. Variables without a box are free.
 */
inline LpResult lp_solve(const Vector & cost, const Matrix & C, const Vector & d,
  const std::optional<Box> & box = std::nullopt, const LpOptions & opts = {})
{
  const Index n = cost.size();
  if (C.cols() != n || C.rows() != d.size()) {
    throw Error(ErrorCode::DimensionMismatch, "lp_solve: inconsistent dimensions");
  }
  Vector lo = Vector::Constant(n, -kInf), up = Vector::Constant(n, kInf);
  if (box) {
    if (box->lower.size() != n || box->upper.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "lp_solve: box dimension");
    }
    lo = box->lower;
    up = box->upper;
    if (((up - lo).array() < 0.0).any()) { return LpResult{LpStatus::Infeasible, {}, 0.0, 0}; }
  }
  detail::BoundedSimplex simplex(C, d, lo, up, opts);
  return simplex.solve(cost);
}

}  // namespace mptrim
