#pragma once

#include <cmath>
#include <vector>

#include "mptrim/mpqp.hpp"

namespace mptrim {

struct TrimOutcome
{
  IndexSet kept;
  IndexSet removed;
  double radius    = 0.0;  ///< κ‖x − x̂‖ of the last sample applied
  int samples_used = 0;
};

struct TrimOptions
{
  /// Caller asserts linear independence of active rows for every parameter of the family.
  bool assume_licq = false;
  Tolerances tol   = {};
};

/// Throws InvalidArgument unless the sample is a feasible point with consistent active rows.
inline void validate_sample(const MpQp & p, const SolvedSample & s, const Tolerances & tol = {})
{
  if (s.x_hat.size() != p.n_x() || s.z_star.size() != p.n_z()) {
    throw Error(ErrorCode::DimensionMismatch, "solved sample has wrong dimensions");
  }
  if (!s.active.in_range(p.n_c())) { throw Error(ErrorCode::InvalidArgument, "sample active index out of range"); }
  const Vector slack = p.rhs(s.x_hat) - p.G * s.z_star;
  for (Index j = 0; j < p.n_c(); ++j) {
    const double scale = 1.0 + std::abs(p.w(j));
    if (slack(j) < -tol.feas * scale * 10.0) {
      throw Error(ErrorCode::InvalidArgument, "solved sample violates constraint " + std::to_string(j));
    }
    if (s.active.contains(static_cast<int>(j)) && std::abs(slack(j)) > tol.act * scale * 10.0) {
      throw Error(ErrorCode::InvalidArgument, "solved sample lists inactive constraint " + std::to_string(j) + " as active");
    }
  }
}

/// (w_j + S_jx − G_jz*(x̂)) / ‖G_j‖: distance from z*(x̂) to the boundary of row j at parameter x.
inline double slack_distance(const MpQp & p, const SolvedSample & s, const Vector & x, int j)
{
  return (p.w(j) + p.S.row(j).dot(x) - p.G.row(j).dot(s.z_star)) / p.G.row(j).norm();
}

/**
 * @brief True if row j is certifiably redundant at x: κ‖x − x̂‖ ≤ slack distance.
 *
 * Equality counts as contained (closed ball in a closed half-space).
 */
inline bool removal_test(const MpQp & p, double kappa, const SolvedSample & s, const Vector & x, int j)
{
  if (s.active.contains(j)) {
    throw Error(ErrorCode::NotInactive, "removal_test: constraint " + std::to_string(j) + " is active at the sample");
  }
  return kappa * (x - s.x_hat).norm() <= slack_distance(p, s, x, j);
}

namespace detail {

// 𝔸(x̂) ∪ ℝ(x, x̂): active rows plus inactive rows that fail the removal test.
inline IndexSet kept_for_sample(const MpQp & p, double kappa, const SolvedSample & s, const Vector & x)
{
  std::vector<int> kept(s.active.begin(), s.active.end());
  for (int j = 0; j < static_cast<int>(p.n_c()); ++j) {
    if (s.active.contains(j)) { continue; }
    if (!removal_test(p, kappa, s, x, j)) { kept.push_back(j); }
  }
  return IndexSet(std::move(kept));
}

inline TrimOutcome make_outcome(const MpQp & p, IndexSet kept, double radius, int used)
{
  TrimOutcome out;
  out.removed      = IndexSet::range(p.n_c()) - kept;
  out.kept         = std::move(kept);
  out.radius       = radius;
  out.samples_used = used;
  return out;
}

inline void check_kappa(double kappa)
{
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) { throw Error(ErrorCode::InvalidArgument, "kappa must be finite and >= 0"); }
}

inline std::size_t nearest_sample(const std::vector<SolvedSample> & samples, const Vector & x)
{
  std::size_t best = 0;
  double bd        = kInf;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double d = (samples[k].x_hat - x).norm();
    if (d < bd) {
      bd   = d;
      best = k;
    }
  }
  return best;
}

inline void check_samples_licq(const MpQp & p, const std::vector<SolvedSample> & samples)
{
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!licq_holds(p, samples[k].active)) {
      throw Error(ErrorCode::LicqViolation,
        "sample " + std::to_string(k) + " has linearly dependent active rows " + samples[k].active.str());
    }
  }
}

}  // namespace detail

/// Keep the sample's active rows and every inactive row whose removal cannot be certified.
inline TrimOutcome trim_single(const MpQp & p, double kappa, const SolvedSample & s, const Vector & x,
  const Tolerances & tol = {})
{
  detail::check_kappa(kappa);
  validate_sample(p, s, tol);
  if (x.size() != p.n_x()) { throw Error(ErrorCode::DimensionMismatch, "trim: x has wrong size"); }
  return detail::make_outcome(p, detail::kept_for_sample(p, kappa, s, x), kappa * (x - s.x_hat).norm(), 1);
}

/**
 * @brief Fold several samples sequentially: I ← (𝔸ᵏ ∩ I) ∪ 𝕋ᵏ with 𝕋ᵏ = ℝᵏ ∩ I.
 *
 * A single sample reduces to trim_single. With two or more, every sample must
 * have linearly independent active rows (LicqViolation otherwise), and unless
 * `opts.assume_licq` is set the fold falls back to the sample nearest to x.
 */
inline TrimOutcome trim_multi(const MpQp & p, double kappa, const std::vector<SolvedSample> & samples, const Vector & x,
  const TrimOptions & opts = {})
{
  detail::check_kappa(kappa);
  if (samples.empty()) { return detail::make_outcome(p, IndexSet::range(p.n_c()), 0.0, 0); }
  if (samples.size() == 1) { return trim_single(p, kappa, samples.front(), x, opts.tol); }
  for (const auto & s : samples) { validate_sample(p, s, opts.tol); }
  detail::check_samples_licq(p, samples);
  if (!opts.assume_licq) {
    return trim_single(p, kappa, samples[detail::nearest_sample(samples, x)], x, opts.tol);
  }
  IndexSet I = IndexSet::range(p.n_c());
  double radius = 0.0;
  for (const auto & s : samples) {
    std::vector<int> tk;
    for (int j : I) {
      if (!s.active.contains(j) && !removal_test(p, kappa, s, x, j)) { tk.push_back(j); }
    }
    I      = (s.active & I) | IndexSet(std::move(tk));
    radius = kappa * (x - s.x_hat).norm();
  }
  return detail::make_outcome(p, std::move(I), radius, static_cast<int>(samples.size()));
}

/// Per-sample kept sets intersected; identical to trim_multi.
inline TrimOutcome trim_parallel(const MpQp & p, double kappa, const std::vector<SolvedSample> & samples,
  const Vector & x, const TrimOptions & opts = {})
{
  detail::check_kappa(kappa);
  if (samples.empty()) { return detail::make_outcome(p, IndexSet::range(p.n_c()), 0.0, 0); }
  if (samples.size() == 1) { return trim_single(p, kappa, samples.front(), x, opts.tol); }
  for (const auto & s : samples) { validate_sample(p, s, opts.tol); }
  detail::check_samples_licq(p, samples);
  if (!opts.assume_licq) {
    return trim_single(p, kappa, samples[detail::nearest_sample(samples, x)], x, opts.tol);
  }
  std::vector<IndexSet> per(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) { per[k] = detail::kept_for_sample(p, kappa, samples[k], x); }
  IndexSet I = IndexSet::range(p.n_c());
  for (const auto & s : per) { I = I & s; }
  return detail::make_outcome(p, std::move(I), kappa * (x - samples.back().x_hat).norm(),
    static_cast<int>(samples.size()));
}

/**
 * @brief Re-verify a single-sample outcome from scratch.
 *
 * Checks that kept and removed partition the rows, no active row was removed,
 * and for each removed row the sample's minimizer satisfies it at x with slack
 * at least κ‖x − x̂‖·‖G_j‖.
 */
inline bool certify(const MpQp & p, double kappa, const SolvedSample & s, const Vector & x, const TrimOutcome & out)
{
  if (!(out.kept & out.removed).empty()) { return false; }
  if (!((out.kept | out.removed) == IndexSet::range(p.n_c()))) { return false; }
  if (!(out.removed & s.active).empty()) { return false; }
  const double radius = kappa * (x - s.x_hat).norm();
  for (int j : out.removed) {
    const double gz    = p.G.row(j).dot(s.z_star);
    const double bound = p.w(j) + p.S.row(j).dot(x);
    const double slack = bound - gz;
    if (slack < 0.0) { return false; }
    const double need = radius * p.G.row(j).norm();
    if (slack < need * (1.0 - 1e-12)) { return false; }
  }
  return true;
}

}  // namespace mptrim
