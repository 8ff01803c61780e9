#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "mptrim/mpqp.hpp"

namespace mptrim {

struct GlcTerms
{
  double term_unconstrained = 0.0;  ///< ‖H⁻¹Fᵀ‖
  double denom_min_quad     = 0.0;  ///< min_j G_jH⁻¹G_jᵀ
  double norm_HinvGt        = 0.0;  ///< ‖H⁻¹Gᵀ‖
  double norm_S_plus        = 0.0;  ///< ‖S + GH⁻¹Fᵀ‖
};

/// Global Lipschitz constant of the minimizer map over every constraint subset.
struct GlcReport
{
  double kappa = 0.0;
  GlcTerms terms;
  std::optional<Vector> scaling_used;
};

namespace detail {

inline GlcReport glc_of(const MpQp & p)
{
  require_valid(p);
  const Matrix Hinv   = spd_inverse(p.H);
  const Matrix HinvFt = Hinv * p.F.transpose();
  const Matrix HinvGt = Hinv * p.G.transpose();
  GlcReport r;
  r.terms.term_unconstrained = spectral_norm(HinvFt);
  r.terms.norm_HinvGt        = spectral_norm(HinvGt);
  r.terms.norm_S_plus        = spectral_norm(p.S + p.G * HinvFt);
  const Vector quad          = (p.G.cwiseProduct(HinvGt.transpose())).rowwise().sum();
  r.terms.denom_min_quad     = quad.minCoeff();
  if (!(r.terms.denom_min_quad > 1e-14 * (1.0 + quad.maxCoeff()))) {
    throw Error(ErrorCode::DegenerateRow, "glc: min_j G_j H^-1 G_j^T is not positive");
  }
  r.kappa = r.terms.term_unconstrained + r.terms.norm_HinvGt * r.terms.norm_S_plus / r.terms.denom_min_quad;
  return r;
}

}  // namespace detail

/// κ = ‖H⁻¹Fᵀ‖ + ‖H⁻¹Gᵀ‖·‖S + GH⁻¹Fᵀ‖ / min_j G_jH⁻¹G_jᵀ (spectral norms).
inline GlcReport glc(const MpQp & p) { return detail::glc_of(p); }

/// κ evaluated on the row-scaled problem (ΦG, ΦS, Φw).
inline GlcReport glc_scaled(const MpQp & p, const Vector & phi)
{
  GlcReport r    = detail::glc_of(scale(p, phi));
  r.scaling_used = phi;
  return r;
}

/// φ_j = (G_jH⁻¹G_jᵀ)^{-1/2}; after scaling every row has G_jH⁻¹G_jᵀ = 1.
inline Vector phi_default(const MpQp & p)
{
  require_valid(p);
  const Matrix HinvGt = spd_inverse(p.H) * p.G.transpose();
  const Vector q      = (p.G.cwiseProduct(HinvGt.transpose())).rowwise().sum();
  if (!(q.minCoeff() > 0.0)) { throw Error(ErrorCode::DegenerateRow, "phi_default: degenerate row"); }
  return q.cwiseSqrt().cwiseInverse();
}

/**
 * @brief Exact Lipschitz constant of the minimizer maps by enumerating active sets.
 *
 * On a critical region with linearly independent active rows A the minimizer is
 * affine with gradient −H⁻¹Fᵀ + H⁻¹G_Aᵀ(G_AH⁻¹G_Aᵀ)⁻¹(S_A + G_AH⁻¹Fᵀ); the
 * largest of these norms bounds every trimmed minimizer map. Exponential in
 * n_c, so the number of visited subsets is capped by `max_subsets`.
 */
inline double glc_enumerated(const MpQp & p, std::size_t max_subsets = 200000)
{
  require_valid(p);
  const Matrix Hinv   = spd_inverse(p.H);
  const Matrix HinvFt = Hinv * p.F.transpose();
  const Matrix HinvGt = Hinv * p.G.transpose();
  const Matrix Splus  = p.S + p.G * HinvFt;
  const double tol    = rank_tolerance(p.G);
  const Index kmax    = std::min(p.n_z(), p.n_c());
  double best         = spectral_norm(HinvFt);
  std::size_t visited = 0;
  std::vector<int> pick;
  auto visit = [&](auto && self, int start) -> void {
    for (int j = start; j < static_cast<int>(p.n_c()); ++j) {
      pick.push_back(j);
      if (++visited > max_subsets) {
        throw Error(ErrorCode::InvalidArgument, "glc_enumerated: too many active-set candidates");
      }
      const IndexSet A(pick);
      const Matrix GA = rows_of(p.G, A);
      if (numerical_rank(GA, tol) == GA.rows()) {
        const Matrix HGt = rows_of(HinvGt.transpose(), A).transpose();
        const Matrix M   = GA * HGt;
        const Matrix D   = -HinvFt + HGt * M.ldlt().solve(rows_of(Splus, A));
        best             = std::max(best, spectral_norm(D));
        if (static_cast<Index>(pick.size()) < kmax) { self(self, j + 1); }
      }
      pick.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

/// Sampling setup for the empirical Lipschitz validator.
struct LipschitzSampling
{
  Box parameter_box;             ///< x₁ is uniform in this box
  double local_fraction = 0.5;   ///< probability that x₂ is a small perturbation of x₁
  double local_radius   = 0.05;  ///< perturbation radius relative to the box diameter
  double keep_probability = 0.5; ///< each index is kept independently with this probability
};

struct EmpiricalLipschitz
{
  double max_ratio = 0.0;
  int valid_trials = 0;
  Vector x1, x2;  ///< pair attaining the maximum
  IndexSet subset;
};

/// Independent random stream for trial `trial` of a run seeded with `seed`.
inline std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

/**
 * @brief Largest observed ‖z*(x₁,𝕀) − z*(x₂,𝕀)‖ / ‖x₁ − x₂‖ over random pairs and subsets.
 *
 * Pairs where either trimmed problem is infeasible or ‖x₁ − x₂‖ < 1e-9 are skipped.
 */
inline EmpiricalLipschitz empirical_lipschitz_report(const MpQp & p, int trials, std::uint64_t seed,
  const LipschitzSampling & sampling)
{
  if (sampling.parameter_box.dim() != p.n_x() || !sampling.parameter_box.bounded()) {
    throw Error(ErrorCode::InvalidArgument, "empirical_lipschitz: bounded parameter box of size n_x required");
  }
  const QpSolver solver(p);
  const Box & box = sampling.parameter_box;
  EmpiricalLipschitz out;
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_stream(seed, static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector x1(p.n_x()), x2(p.n_x());
    for (Index i = 0; i < p.n_x(); ++i) {
      x1(i) = box.lower(i) + u01(rng) * (box.upper(i) - box.lower(i));
    }
    if (u01(rng) < sampling.local_fraction) {
      Vector d(p.n_x());
      for (Index i = 0; i < p.n_x(); ++i) { d(i) = gauss(rng); }
      const double r = sampling.local_radius * box.diameter() * u01(rng);
      x2             = x1 + r * d / std::max(d.norm(), 1e-300);
    } else {
      for (Index i = 0; i < p.n_x(); ++i) {
        x2(i) = box.lower(i) + u01(rng) * (box.upper(i) - box.lower(i));
      }
    }
    std::vector<int> keep;
    for (Index j = 0; j < p.n_c(); ++j) {
      if (u01(rng) < sampling.keep_probability) { keep.push_back(static_cast<int>(j)); }
    }
    const double dx = (x1 - x2).norm();
    if (dx < 1e-9) { continue; }
    const IndexSet idx(keep);
    const auto s1 = solver.solve(x1, idx);
    if (s1.status != QpStatus::Optimal) { continue; }
    const auto s2 = solver.solve(x2, idx);
    if (s2.status != QpStatus::Optimal) { continue; }
    ++out.valid_trials;
    const double ratio = (s1.z_star - s2.z_star).norm() / dx;
    if (ratio > out.max_ratio || out.valid_trials == 1) {
      out.max_ratio = ratio;
      out.x1        = x1;
      out.x2        = x2;
      out.subset    = idx;
    }
  }
  if (out.valid_trials == 0) { throw Error(ErrorCode::NoValidTrials, "empirical_lipschitz: every trial was skipped"); }
  return out;
}

inline double empirical_lipschitz(const MpQp & p, int trials, std::uint64_t seed, const LipschitzSampling & sampling)
{
  return empirical_lipschitz_report(p, trials, seed, sampling).max_ratio;
}

}  // namespace mptrim
