#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mptrim/closeness.hpp"

namespace mptrim {

struct GridSigma
{
  std::vector<double> sigma;  ///< sigma[i] for i = 1..n_c−1 (entry 0 unused)
  double step = 0.0;          ///< grid spacing actually used (max over axes)
  long evaluated = 0;         ///< grid points evaluated exactly
};

/**
 * @brief Brute-force σ_i: minimum of d_(i+1) over every point of a uniform grid
 * in 𝒱 ∩ box with spacing at most `max_step`.
 *
 * The grid points are the centers of a 2^L-per-axis subdivision of the box.
 * Cells are skipped only when no grid point inside can be feasible or improve
 * any σ_i (each d_j is 1-Lipschitz), so the result equals a full scan.
 */
inline GridSigma grid_sigma(const LiftedPolyhedron & L, double max_step)
{
  if (!L.box.bounded()) { throw Error(ErrorCode::UnboundedLift, "grid_sigma: bounded box required"); }
  const Index n = L.dim(), m = L.n_c();
  int depth     = 0;
  while (((L.box.upper - L.box.lower) / std::ldexp(1.0, depth)).maxCoeff() > max_step) { ++depth; }

  GridSigma out;
  out.sigma.assign(static_cast<std::size_t>(std::max<Index>(m, 1)), kInf);
  out.step = ((L.box.upper - L.box.lower) / std::ldexp(1.0, depth)).maxCoeff();

  struct Cell
  {
    Vector lo, hi;
    int level;
  };
  std::vector<Cell> stack{{L.box.lower, L.box.upper, 0}};
  Vector d(m);
  while (!stack.empty()) {
    Cell c = std::move(stack.back());
    stack.pop_back();
    const Vector center = 0.5 * (c.lo + c.hi);
    d                   = L.distances(center);
    if (c.level == depth) {
      if (m > 0 && d.minCoeff() < 0.0) { continue; }
      ++out.evaluated;
      std::sort(d.data(), d.data() + m);
      for (Index i = 1; i < m; ++i) { out.sigma[static_cast<std::size_t>(i)] = std::min(out.sigma[static_cast<std::size_t>(i)], d(i)); }
      continue;
    }
    // grid points inside this cell are within h of its center
    const double h = 0.5 * (c.hi - c.lo).norm();
    if (m > 0 && d.minCoeff() < -h) { continue; }
    std::sort(d.data(), d.data() + m);
    bool useful = false;
    for (Index i = 1; i < m && !useful; ++i) { useful = d(i) - h < out.sigma[static_cast<std::size_t>(i)]; }
    if (!useful) { continue; }
    const Index nchild = Index(1) << n;
    for (Index k = nchild - 1; k >= 0; --k) {
      Cell ch{c.lo, c.hi, c.level + 1};
      for (Index a = 0; a < n; ++a) {
        const double mid = 0.5 * (c.lo(a) + c.hi(a));
        if ((k >> a) & 1) {
          ch.lo(a) = mid;
        } else {
          ch.hi(a) = mid;
        }
      }
      stack.push_back(std::move(ch));
    }
  }
  return out;
}

}  // namespace mptrim
