#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mptrim/mpc.hpp"

namespace mptrim {

struct DoubleIntegratorSpec
{
  double h     = 0.1;
  double x_max = 5.0;  ///< |position| bound
  double v_max = 2.0;  ///< |velocity| bound
  double u_max = 1.0;
  int N        = 5;
};

/// ẍ = u sampled with zero-order hold; Q = R = I; terminal set from the LQR.
inline MpcDesign double_integrator(const DoubleIntegratorSpec & s = {})
{
  if (!(s.h > 0.0)) { throw Error(ErrorCode::InvalidArgument, "double integrator: step must be positive"); }
  Matrix Ac(2, 2), Bc(2, 1);
  Ac << 0, 1, 0, 0;
  Bc << 0, 1;
  auto [A, B] = zoh_discretize(Ac, Bc, s.h);
  MpcDesign d;
  d.A = A;
  d.B = B;
  d.Q = Matrix::Identity(2, 2);
  d.R = Matrix::Identity(1, 1);
  d.N = s.N;
  d.X = Polyhedron::box(Vector((Vector(2) << -s.x_max, -s.v_max).finished()), Vector((Vector(2) << s.x_max, s.v_max).finished()));
  d.U = Polyhedron::box(1, s.u_max);
  d.name = "double-integrator-N" + std::to_string(s.N);
  return d;
}

/// Actuator a pushes mass `first` by +u and, if `second` ≥ 0, mass `second` by −u.
struct Actuator
{
  int first  = 0;
  int second = -1;
};

struct OscillatingMassSpec
{
  int n_masses = 6;
  int n_actuators = 3;
  double h     = 0.1;
  double x_max = 4.0;
  double u_max = 0.5;
  int N        = 30;
  /// Empty selects default_topology: tensions (0,1), (2,3), … in 0-based numbering.
  std::vector<Actuator> topology;
};

/// Continuous-time spring chain with walls at both ends, unit masses and springs; state (positions, velocities).
inline std::pair<Matrix, Matrix> spring_chain(int n_masses, const std::vector<Actuator> & topology)
{
  if (n_masses < 2) { throw Error(ErrorCode::InvalidArgument, "spring chain: need at least 2 masses"); }
  const Index n = n_masses;
  Matrix K      = 2.0 * Matrix::Identity(n, n);
  for (Index i = 0; i + 1 < n; ++i) { K(i, i + 1) = K(i + 1, i) = -1.0; }
  Matrix Ac = Matrix::Zero(2 * n, 2 * n);
  Ac.topRightCorner(n, n)   = Matrix::Identity(n, n);
  Ac.bottomLeftCorner(n, n) = -K;
  Matrix Bc = Matrix::Zero(2 * n, static_cast<Index>(topology.size()));
  for (std::size_t a = 0; a < topology.size(); ++a) {
    const auto & act = topology[a];
    if (act.first < 0 || act.first >= n_masses || act.second >= n_masses || act.second == act.first) {
      throw Error(ErrorCode::TopologyMismatch, "spring chain: actuator " + std::to_string(a) + " refers to a missing mass");
    }
    Bc(n + act.first, static_cast<Index>(a)) = 1.0;
    if (act.second >= 0) { Bc(n + act.second, static_cast<Index>(a)) = -1.0; }
  }
  return {Ac, Bc};
}

/// Actuator a sits on mass 2a and pulls against its right neighbour, or the left one at the end of the chain.
inline std::vector<Actuator> default_topology(int n_masses, int n_actuators)
{
  std::vector<Actuator> out;
  for (int a = 0; a < n_actuators; ++a) {
    const int first = 2 * a;
    if (first >= n_masses) {
      throw Error(ErrorCode::TopologyMismatch, "default topology: " + std::to_string(n_actuators) +
        " actuators need at least " + std::to_string(2 * n_actuators - 1) + " masses");
    }
    out.push_back({first, first + 1 < n_masses ? first + 1 : first - 1});
  }
  return out;
}

/// ‖x‖∞ ≤ x_max, ‖u‖∞ ≤ u_max, Q = R = I, terminal set from the LQR.
inline MpcDesign oscillating_masses(const OscillatingMassSpec & s = {})
{
  if (!(s.h > 0.0)) { throw Error(ErrorCode::InvalidArgument, "oscillating masses: step must be positive"); }
  const auto topo = s.topology.empty() ? default_topology(s.n_masses, s.n_actuators) : s.topology;
  if (!s.topology.empty() && static_cast<int>(s.topology.size()) != s.n_actuators) {
    throw Error(ErrorCode::TopologyMismatch, "oscillating masses: topology size differs from actuator count");
  }
  auto [Ac, Bc] = spring_chain(s.n_masses, topo);
  auto [A, B]   = zoh_discretize(Ac, Bc, s.h);
  MpcDesign d;
  d.A    = A;
  d.B    = B;
  d.Q    = Matrix::Identity(A.rows(), A.rows());
  d.R    = Matrix::Identity(B.cols(), B.cols());
  d.N    = s.N;
  d.X    = Polyhedron::box(A.rows(), s.x_max);
  d.U    = Polyhedron::box(B.cols(), s.u_max);
  d.name = "oscillating-masses-" + std::to_string(s.n_masses) + "-N" + std::to_string(s.N);
  return d;
}

}  // namespace mptrim
