#pragma once

// Discrete central systems on the lattice x, x + 1, ... with constant free
// entries (B, C for 2x2; A, B, C for 3x3 unital):
//   L2b: C1 TC2 = C2 C1          =>  TC2 = C1^-1 C2 C1
//   L4:  C1 TC2 = C2 TC1         =>  TU = C1^-1 U C1,  U = C2 C1^-1
//   L5:  C1 TC2 = C2 T^-1 C1     =>  TC2 = C1^-1 C2 T^-1 C1

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deform_cs/algebra_core.hpp"
#include "deform_cs/dda_registry.hpp"
#include "deform_cs/errors.hpp"

namespace dcs {

/// Denominators below this magnitude make a map step singular.
inline constexpr double kOrbitDegeneracy = 1e-12;

struct MapState {
  long n = 0;
  Entries entries;
  std::optional<Entries> prev;  // site n - 1, needed by L5
  bool det_degenerate = false;  // |det C1| (BG - CE for 2x2) below tolerance
  bool eg_degenerate = false;   // |E - G| below tolerance

  MatrixPair pair() const { return MatrixPair::from_entries(entries); }

  /// V = T^-1 C1 . C2 of the L5 conjugation form.
  std::optional<Mat> v() const {
    if (!prev) return std::nullopt;
    return Mat(MatrixPair::from_entries(*prev).C1 * pair().C2);
  }
};

inline std::string_view map_free_names(int n) { return n == 3 ? "ABC" : "BC"; }
inline std::string_view map_evolved_names(int n) { return n == 3 ? "DEGLMN" : "EGMN"; }

inline void flag_degeneracy(MapState& s) {
  const double det = s.pair().C1.determinant();
  s.det_degenerate = std::abs(det) < kOrbitDegeneracy;
  s.eg_degenerate = std::abs(s.entries.E - s.entries.G) < kOrbitDegeneracy;
}

inline MapState make_map_state(Entries e, long n = 0, std::optional<Entries> prev = std::nullopt) {
  if (e.n != 2 && e.n != 3) throw InvalidInput("map state needs 2x2 or 3x3 structure constants");
  for (char c : e.names()) {
    if (!std::isfinite(e[c])) throw InvalidInput(std::string("entry ") + c + " is not finite");
  }
  if (prev) {
    if (prev->n != e.n) throw InvalidInput("previous site has a different size");
    for (char c : map_free_names(e.n)) {
      if ((*prev)[c] != e[c]) throw InvalidInput(std::string("free entry ") + c + " differs between sites");
    }
  }
  MapState s{n, e, std::move(prev)};
  flag_degeneracy(s);
  return s;
}

inline void require_discrete(DdaId dda) {
  if (dda != DdaId::L2b && dda != DdaId::L4 && dda != DdaId::L5) {
    throw InvalidInput("dda " + std::string(to_string(dda)) + " has no discrete map");
  }
}

namespace detail {

inline Mat checked_inverse(const Mat& c1, std::string_view what) {
  const double det = c1.determinant();
  if (!std::isfinite(det) || std::abs(det) < kOrbitDegeneracy) {
    throw SingularOrbit(std::string(what) + ": det C1 vanishes", det);
  }
  return c1.inverse();
}

/// Next-site entries from the shifted C2: for 2x2 TC2 = [[TE, TM], [TG, TN]];
/// for 3x3 columns 1 and 2 hold (TD, TE, TG) and (TL, TM, TN).
inline Entries entries_from_shifted_c2(const Entries& here, const Mat& tc2) {
  Entries e = here;
  if (here.n == 2) {
    e.E = tc2(0, 0); e.G = tc2(1, 0);
    e.M = tc2(0, 1); e.N = tc2(1, 1);
  } else {
    e.D = tc2(0, 1); e.E = tc2(1, 1); e.G = tc2(2, 1);
    e.L = tc2(0, 2); e.M = tc2(1, 2); e.N = tc2(2, 2);
  }
  return e;
}

}  // namespace detail

/// L2b, 2x2, component form:
///   TE = (GM - EN) C / (BG - CE),  TG = B + (BN - CM) C / (BG - CE),
///   TM = (GM - EN) G / (BG - CE),  TN = E + (BN - CM) G / (BG - CE).
inline Entries l2b_step_2x2(const Entries& e) {
  const double den = e.B * e.G - e.C * e.E;
  if (std::abs(den) < kOrbitDegeneracy) throw SingularOrbit("L2b step: BG - CE vanishes", den);
  const double p = (e.G * e.M - e.E * e.N) / den;
  const double q = (e.B * e.N - e.C * e.M) / den;
  Entries t = e;
  t.E = p * e.C;
  t.G = e.B + q * e.C;
  t.M = p * e.G;
  t.N = e.E + q * e.G;
  return t;
}

/// L4, 2x2 with B = C = 1; r = (M - N)/(E - G):
///   TE = M - E r,  TG = 1 + r,  TM = N + (N - G) r - G r^2,  TN = M + (1 - E) r + r^2.
inline Entries l4_step_unit_bc(const Entries& e) {
  const double den = e.E - e.G;
  if (std::abs(den) < kOrbitDegeneracy) throw SingularOrbit("L4 step: E - G vanishes", den);
  const double r = (e.M - e.N) / den;
  Entries t = e;
  t.E = e.M - e.E * r;
  t.G = 1.0 + r;
  t.M = e.N + (e.N - e.G) * r - e.G * r * r;
  t.N = e.M + (1.0 - e.E) * r + r * r;
  return t;
}

/// The resolved matrix forms, valid for 2x2 and 3x3 alike.
inline Entries step_matrix_form(DdaId dda, const MapState& s) {
  require_discrete(dda);
  const MatrixPair p = s.pair();
  const Mat c1inv = detail::checked_inverse(p.C1, std::string(to_string(dda)) + " step");
  switch (dda) {
    case DdaId::L2b: return detail::entries_from_shifted_c2(s.entries, c1inv * p.C2 * p.C1);
    case DdaId::L4: {
      // Column by column: C1 Tt1 = C2 f and C1 Tt2 = C2 Tt1, with f the free
      // column of C1 and t1, t2 the evolved columns of C2.
      const int fcol = s.entries.n == 2 ? 0 : 1;
      const Mat u = c1inv * p.C2;
      const Eigen::VectorXd t1 = u * p.C1.col(fcol);
      const Eigen::VectorXd t2 = u * t1;
      Mat tc2 = p.C2;
      tc2.col(fcol) = t1;
      tc2.col(fcol + 1) = t2;
      return detail::entries_from_shifted_c2(s.entries, tc2);
    }
    case DdaId::L5: {
      if (!s.prev) throw InvalidInput("L5 step needs the previous site");
      const Mat c1prev = MatrixPair::from_entries(*s.prev).C1;
      return detail::entries_from_shifted_c2(s.entries, c1inv * p.C2 * c1prev);
    }
    default: break;
  }
  throw InvalidInput("unreachable");
}

/// One step of the map. 2x2 L2b uses the component form, 2x2 L4 with
/// B = C = 1 the explicit mapping; everything else the matrix form.
inline MapState step(DdaId dda, const MapState& s) {
  require_discrete(dda);
  Entries next;
  if (dda == DdaId::L2b && s.entries.n == 2) {
    next = l2b_step_2x2(s.entries);
  } else if (dda == DdaId::L4 && s.entries.n == 2 && s.entries.B == 1.0 && s.entries.C == 1.0) {
    next = l4_step_unit_bc(s.entries);
  } else {
    next = step_matrix_form(dda, s);
  }
  for (char c : next.names()) {
    if (!std::isfinite(next[c])) throw SingularOrbit("map step produced a non-finite entry", next[c]);
  }
  return make_map_state(next, s.n + 1, s.entries);
}

/// tr M, tr M^2 / 2, tr M^3 / 3.
inline NamedValues trace_powers(const Mat& m) {
  const Mat sq = m * m;
  NamedValues out;
  out.set("I1", m.trace());
  out.set("I2", 0.5 * sq.trace());
  if (m.rows() == 3) out.set("I3", (sq * m).trace() / 3.0);
  return out;
}

/// L2b: traces of C2 powers and det C2. L4: traces of U = C2 C1^-1.
/// L5: traces of V = T^-1 C1 . C2, i.e. of C1 TC2 on the transition into
/// this site.
inline NamedValues map_invariants(DdaId dda, const MapState& s) {
  require_discrete(dda);
  const MatrixPair p = s.pair();
  switch (dda) {
    case DdaId::L2b: {
      NamedValues out = trace_powers(p.C2);
      out.set("det", p.C2.determinant());
      return out;
    }
    case DdaId::L4: return trace_powers(p.C2 * detail::checked_inverse(p.C1, "L4 invariants"));
    case DdaId::L5: {
      const auto v = s.v();
      if (!v) throw InvalidInput("L5 invariants need the previous site");
      return trace_powers(*v);
    }
    default: break;
  }
  throw InvalidInput("unreachable");
}

/// max |TU - C1^-1 U C1| for consecutive L4 states.
inline double l4_conjugation_defect(const MapState& before, const MapState& after) {
  const MatrixPair p = before.pair();
  const MatrixPair q = after.pair();
  const Mat c1inv = detail::checked_inverse(p.C1, "L4 conjugation");
  const Mat u = p.C2 * c1inv;
  const Mat tu = q.C2 * detail::checked_inverse(q.C1, "L4 conjugation");
  return (tu - c1inv * u * p.C1).cwiseAbs().maxCoeff();
}

struct Orbit {
  DdaId dda = DdaId::L4;
  std::vector<MapState> states;
  std::vector<NamedValues> invariants;  // empty entries where undefined
  bool truncated = false;
  std::string diagnostic;

  std::size_t size() const { return states.size(); }
};

/// Iterates `steps` times. A singular step ends the orbit with a diagnostic
/// and the states computed so far.
inline Orbit iterate(DdaId dda, const MapState& initial, long steps) {
  require_discrete(dda);
  if (steps < 0) throw InvalidInput("steps must be non-negative");
  Orbit o;
  o.dda = dda;
  auto invariants_or_empty = [&](const MapState& s) {
    try {
      return map_invariants(dda, s);
    } catch (const SingularOrbit&) {
      return NamedValues{};
    } catch (const InvalidInput&) {
      return NamedValues{};
    }
  };
  o.states.push_back(initial);
  o.invariants.push_back(invariants_or_empty(initial));
  for (long i = 0; i < steps; ++i) {
    try {
      o.states.push_back(step(dda, o.states.back()));
    } catch (const SingularOrbit& e) {
      o.truncated = true;
      o.diagnostic = std::string(e.what()) + " at n=" + std::to_string(o.states.back().n) +
                     " (quantity " + std::to_string(e.quantity()) + ")";
      break;
    }
    o.invariants.push_back(invariants_or_empty(o.states.back()));
  }
  return o;
}

// ---------------------------------------------------------------------------
// Gauge potentials and the discrete oriented associativity equation
// ---------------------------------------------------------------------------

/// Three potentials Phi^0, Phi^1, Phi^2 sampled at x0, x0 + 1, ...
struct SampledPotentials {
  long x0 = 0;
  std::array<std::vector<double>, 3> values;

  long size() const { return static_cast<long>(values[0].size()); }

  double operator()(int m, long x) const {
    const long i = x - x0;
    if (i < 0 || i >= static_cast<long>(values[m].size())) {
      throw OutOfRange("potential sample at x=" + std::to_string(x) + " is outside the interval");
    }
    return values[m][static_cast<std::size_t>(i)];
  }

  void validate() const {
    if (values[1].size() != values[0].size() || values[2].size() != values[0].size()) {
      throw InvalidInput("potentials must share one sample interval");
    }
  }
};

template <class F>
SampledPotentials sample_potentials(const std::array<F, 3>& phi, long x0, long x1) {
  if (x1 < x0) throw InvalidInput("empty sample interval");
  SampledPotentials s;
  s.x0 = x0;
  for (int m = 0; m < 3; ++m)
    for (long x = x0; x <= x1; ++x) s.values[m].push_back(phi[m](static_cast<double>(x)));
  return s;
}

/// Shifts of T_0 = 1, T_1 = T, T_2 = T^-1.
inline constexpr std::array<long, 3> kLatticeShifts{0, 1, -1};

struct OrientedAssocPoint {
  std::array<Mat, 9> delta;    // LHS - RHS as a matrix over (n, m), index j * 3 + k
  double raw = 0.0;            // max |LHS - RHS| over j, k, n, m
  double normalized = 0.0;     // max over j, k of || g^-1 (LHS - RHS) ||_F
};

/// Both sides of
///   sum_{l,t} T_j T_t Phi^n (g^-1)_l^t T_k T_m Phi^l
/// and the (j <-> k) swap at lattice point x; g_t^m = T_t Phi^m sits at
/// row m, column t, and (g^-1)_l^t at row t, column l. The difference equals
/// g [C_j, C_k] for the gauge solution C_j = g^-1 T_j g.
inline OrientedAssocPoint oriented_assoc_at(const SampledPotentials& phi, long x) {
  phi.validate();
  Mat g(3, 3);
  for (int m = 0; m < 3; ++m)
    for (int t = 0; t < 3; ++t) g(m, t) = phi(m, x + kLatticeShifts[t]);
  double scale = 1.0;
  for (int r = 0; r < 3; ++r) scale *= std::max(g.row(r).norm(), 1e-300);
  const double det = g.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-12 * scale) {
    throw SingularGauge("gauge matrix g is singular at x=" + std::to_string(x));
  }
  const Mat gi = g.inverse();

  auto side = [&](int j, int k, int n, int m) {
    double sum = 0.0;
    for (int l = 0; l < 3; ++l)
      for (int t = 0; t < 3; ++t)
        sum += phi(n, x + kLatticeShifts[j] + kLatticeShifts[t]) * gi(t, l) *
               phi(l, x + kLatticeShifts[k] + kLatticeShifts[m]);
    return sum;
  };

  OrientedAssocPoint out;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      Mat d(3, 3);
      for (int n = 0; n < 3; ++n)
        for (int m = 0; m < 3; ++m) {
          d(n, m) = side(j, k, n, m) - side(k, j, n, m);
          out.raw = std::max(out.raw, std::abs(d(n, m)));
        }
      out.normalized = std::max(out.normalized, frobenius(gi * d));
      out.delta[static_cast<std::size_t>(j * 3 + k)] = std::move(d);
    }
  return out;
}

/// Maximum over every lattice point with both double shifts inside the
/// sample interval.
inline ResidualReport discrete_oriented_assoc_residual(const SampledPotentials& phi) {
  phi.validate();
  if (phi.size() < 5) throw OutOfRange("oriented associativity needs at least five samples");
  double raw = 0.0, normalized = 0.0;
  for (long x = phi.x0 + 2; x <= phi.x0 + phi.size() - 3; ++x) {
    const OrientedAssocPoint p = oriented_assoc_at(phi, x);
    raw = std::max(raw, p.raw);
    normalized = std::max(normalized, p.normalized);
  }
  ResidualReport r;
  r.add("oriented_assoc.raw.max_abs", raw);
  r.add("oriented_assoc.normalized.frobenius", normalized);
  return r;
}

}  // namespace dcs
