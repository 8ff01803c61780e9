#pragma once

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

#include <json.hpp>

#include "mptrim/closeness.hpp"
#include "mptrim/lipschitz.hpp"
#include "mptrim/mpc.hpp"
#include "mptrim/trim.hpp"

namespace mptrim {

using json = nlohmann::json;

namespace detail {

// JSON has no infinities; they are written as the strings "inf" and "-inf".
inline json number_to_json(double v)
{
  if (std::isfinite(v)) { return v; }
  if (std::isnan(v)) { return "nan"; }
  return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const json & j)
{
  if (j.is_number()) { return j.get<double>(); }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") { return kInf; }
    if (s == "-inf") { return -kInf; }
    if (s == "nan") { return std::nan(""); }
  }
  throw Error(ErrorCode::InvalidArgument, "json: expected a number, got " + j.dump());
}

inline const json & field(const json & j, const char * key)
{
  if (!j.is_object() || !j.contains(key)) { throw Error(ErrorCode::InvalidArgument, std::string("json: missing key \"") + key + "\""); }
  return j.at(key);
}

}  // namespace detail

inline json to_json(const Vector & v)
{
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) { a.push_back(detail::number_to_json(v(i))); }
  return a;
}

/// Row-major nested arrays.
inline json to_json(const Matrix & M)
{
  json a = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) { row.push_back(detail::number_to_json(M(r, c))); }
    a.push_back(std::move(row));
  }
  return a;
}

inline Vector vector_from_json(const json & j)
{
  if (!j.is_array()) { throw Error(ErrorCode::InvalidArgument, "json: expected an array"); }
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) { v(static_cast<Index>(i)) = detail::number_from_json(j[i]); }
  return v;
}

/// `cols` fixes the width of an empty matrix, which JSON cannot express.
inline Matrix matrix_from_json(const json & j, Index cols = -1)
{
  if (!j.is_array()) { throw Error(ErrorCode::InvalidArgument, "json: expected a nested array"); }
  if (j.empty()) { return Matrix(0, std::max<Index>(cols, 0)); }
  const Index c = static_cast<Index>(j[0].size());
  Matrix M(static_cast<Index>(j.size()), c);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || static_cast<Index>(j[r].size()) != c) {
      throw Error(ErrorCode::DimensionMismatch, "json: ragged matrix");
    }
    for (Index k = 0; k < c; ++k) { M(static_cast<Index>(r), k) = detail::number_from_json(j[r][static_cast<std::size_t>(k)]); }
  }
  return M;
}

inline json to_json(const IndexSet & s) { return s.items(); }

inline IndexSet index_set_from_json(const json & j) { return IndexSet(j.get<std::vector<int>>()); }

inline json to_json(const MpQp & p)
{
  json j{{"H", to_json(p.H)}, {"F", to_json(p.F)}, {"G", to_json(p.G)}, {"S", to_json(p.S)}, {"w", to_json(p.w)}};
  if (!p.name.empty()) { j["name"] = p.name; }
  return j;
}

/// Throws InvalidProblem if the data fail `validate`.
inline MpQp mpqp_from_json(const json & j)
{
  MpQp p;
  p.H = matrix_from_json(detail::field(j, "H"));
  p.F = matrix_from_json(detail::field(j, "F"), p.n_z());
  p.G = matrix_from_json(detail::field(j, "G"), p.n_z());
  p.S = matrix_from_json(detail::field(j, "S"), p.n_x());
  p.w = vector_from_json(detail::field(j, "w"));
  if (j.contains("name")) { p.name = j.at("name").get<std::string>(); }
  require_valid(p);
  return p;
}

inline json to_json(const SolvedSample & s)
{
  return {{"x_hat", to_json(s.x_hat)}, {"z_star", to_json(s.z_star)}, {"active", to_json(s.active)}};
}

inline SolvedSample sample_from_json(const json & j)
{
  return {vector_from_json(detail::field(j, "x_hat")), vector_from_json(detail::field(j, "z_star")),
    index_set_from_json(detail::field(j, "active"))};
}

inline json to_json(const QpSolution & s)
{
  return {{"status", to_string(s.status)}, {"z_star", to_json(s.z_star)}, {"lambda", to_json(s.lambda)},
    {"active", to_json(s.active)}, {"iterations", s.iterations}};
}

inline json to_json(const TrimOutcome & o)
{
  return {{"kept", to_json(o.kept)}, {"removed", to_json(o.removed)}, {"radius", detail::number_to_json(o.radius)},
    {"samples_used", o.samples_used}};
}

inline TrimOutcome trim_outcome_from_json(const json & j)
{
  TrimOutcome o;
  o.kept         = index_set_from_json(detail::field(j, "kept"));
  o.removed      = index_set_from_json(detail::field(j, "removed"));
  o.radius       = detail::number_from_json(detail::field(j, "radius"));
  o.samples_used = detail::field(j, "samples_used").get<int>();
  return o;
}

inline json to_json(const GlcReport & r)
{
  json j{{"kappa", detail::number_to_json(r.kappa)},
    {"terms",
      {{"term_unconstrained", r.terms.term_unconstrained}, {"denom_min_quad", r.terms.denom_min_quad},
        {"norm_HinvGt", r.terms.norm_HinvGt}, {"norm_S_plus", r.terms.norm_S_plus}}}};
  if (r.scaling_used) { j["scaling_used"] = to_json(*r.scaling_used); }
  return j;
}

inline json to_json(const Box & b) { return {{"lower", to_json(b.lower)}, {"upper", to_json(b.upper)}}; }

inline Box box_from_json(const json & j)
{
  Box b{vector_from_json(detail::field(j, "lower")), vector_from_json(detail::field(j, "upper"))};
  if (b.lower.size() != b.upper.size()) { throw Error(ErrorCode::DimensionMismatch, "json: box bounds differ in size"); }
  return b;
}

inline json to_json(const SigmaTable & t)
{
  json s = json::object(), lo = json::object();
  for (const auto & [i, v] : t.sigma) { s[std::to_string(i)] = detail::number_to_json(v); }
  for (const auto & [i, v] : t.lower) { lo[std::to_string(i)] = detail::number_to_json(v); }
  return {{"method", to_string(t.method)}, {"r_max", detail::number_to_json(t.r_max)}, {"sigma", s}, {"lower", lo}};
}

inline SigmaTable sigma_table_from_json(const json & j)
{
  SigmaTable t;
  const auto m = detail::field(j, "method").get<std::string>();
  if (m != "milp" && m != "sampled") { throw Error(ErrorCode::InvalidArgument, "json: unknown sigma method " + m); }
  t.method = m == "milp" ? SigmaMethod::Milp : SigmaMethod::Sampled;
  t.r_max  = detail::number_from_json(detail::field(j, "r_max"));
  for (const auto & [k, v] : detail::field(j, "sigma").items()) { t.sigma[std::stoi(k)] = detail::number_from_json(v); }
  if (j.contains("lower")) {
    for (const auto & [k, v] : j.at("lower").items()) { t.lower[std::stoi(k)] = detail::number_from_json(v); }
  }
  return t;
}

inline json to_json(const Polyhedron & P) { return {{"C", to_json(P.C)}, {"d", to_json(P.d)}}; }

inline Polyhedron polyhedron_from_json(const json & j, Index dim)
{
  Polyhedron P{matrix_from_json(detail::field(j, "C"), dim), vector_from_json(detail::field(j, "d"))};
  if (P.C.cols() != dim || P.C.rows() != P.d.size()) {
    throw Error(ErrorCode::DimensionMismatch, "json: polyhedron of dimension " + std::to_string(dim) + " expected");
  }
  return P;
}

/**
 * @brief Scenario object {A, B, Q, R, N, X, U, terminal, discretize}.
 *
 * `terminal` is "auto" or {C, d}. With `discretize` = {Ac, Bc, h} the matrices
 * A and B are obtained by zero-order hold and may be omitted.
 */
inline MpcDesign design_from_json(const json & j)
{
  MpcDesign d;
  if (j.contains("discretize")) {
    const auto & z = j.at("discretize");
    const double h = detail::field(z, "h").get<double>();
    if (!(h > 0.0)) { throw Error(ErrorCode::InvalidArgument, "scenario: discretization step must be positive"); }
    std::tie(d.A, d.B) = zoh_discretize(matrix_from_json(detail::field(z, "Ac")), matrix_from_json(detail::field(z, "Bc")), h);
  } else {
    d.A = matrix_from_json(detail::field(j, "A"));
    d.B = matrix_from_json(detail::field(j, "B"));
  }
  const Index n = d.A.rows(), m = d.B.cols();
  d.Q = j.contains("Q") ? matrix_from_json(j.at("Q")) : Matrix::Identity(n, n);
  d.R = j.contains("R") ? matrix_from_json(j.at("R")) : Matrix::Identity(m, m);
  d.N = detail::field(j, "N").get<int>();
  d.X = polyhedron_from_json(detail::field(j, "X"), n);
  d.U = polyhedron_from_json(detail::field(j, "U"), m);
  const json & t = j.contains("terminal") ? j.at("terminal") : json("auto");
  if (t.is_string()) {
    if (t.get<std::string>() != "auto") { throw Error(ErrorCode::InvalidArgument, "scenario: terminal must be \"auto\" or {C, d}"); }
  } else {
    d.terminal = polyhedron_from_json(t, n);
  }
  d.prune_redundant = j.value("prune_redundant", false);
  d.name            = j.value("name", std::string());
  if (d.A.rows() != d.A.cols() || d.B.rows() != n || d.Q.rows() != n || d.Q.cols() != n || d.R.rows() != m || d.R.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "scenario: inconsistent A, B, Q, R");
  }
  if (d.N < 1) { throw Error(ErrorCode::InvalidArgument, "scenario: horizon must be at least 1"); }
  return d;
}

inline json to_json(const MpcDesign & d)
{
  json j{{"A", to_json(d.A)}, {"B", to_json(d.B)}, {"Q", to_json(d.Q)}, {"R", to_json(d.R)}, {"N", d.N},
    {"X", to_json(d.X)}, {"U", to_json(d.U)}};
  j["terminal"] = d.terminal ? to_json(*d.terminal) : json("auto");
  if (d.prune_redundant) { j["prune_redundant"] = true; }
  if (!d.name.empty()) { j["name"] = d.name; }
  return j;
}

inline json to_json(const StepRecord & s, SimMode mode)
{
  return {{"mode", to_string(mode)}, {"k", s.k}, {"x", to_json(s.x)}, {"u", to_json(s.u)}, {"kept", s.kept_count},
    {"iterations", s.iterations}, {"wall_time", s.wall_time}};
}

/// One JSON object per line and per step.
inline void write_trace_lines(std::ostream & os, const ClosedLoopTrace & tr)
{
  for (const auto & s : tr.steps) { os << to_json(s, tr.mode).dump() << '\n'; }
}

inline json read_json_file(const std::string & path)
{
  std::ifstream in(path);
  if (!in) { throw Error(ErrorCode::Io, "cannot open " + path); }
  try {
    return json::parse(in);
  } catch (const json::exception & e) {
    throw Error(ErrorCode::Io, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) { throw Error(ErrorCode::Io, "cannot write " + path); }
}

}  // namespace mptrim
