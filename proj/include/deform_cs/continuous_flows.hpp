#pragma once

// Central systems of the L2a and L3 DDAs as autonomous ODE systems on the
// evolved structure constants, with first integrals and spectra.
//
// L2a: x dC2/dx = [C2, C1]. Integrated in s = ln x, where x d/dx = d/ds.
// L3:  C1 dC1/dx = [C1, C2]. Integrated in y with x = y det C1.

#include <algorithm>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "deform_cs/algebra_core.hpp"
#include "deform_cs/dda_registry.hpp"
#include "deform_cs/errors.hpp"
#include "deform_cs/rk4.hpp"

namespace dcs {

enum class FlowSystem { L2a_3x3, L2a_2x2, L3_detnorm, L3_unimodular, L3_simple };

inline constexpr std::array<FlowSystem, 5> kAllFlowSystems{FlowSystem::L2a_3x3, FlowSystem::L2a_2x2,
                                                          FlowSystem::L3_detnorm, FlowSystem::L3_unimodular,
                                                          FlowSystem::L3_simple};

/// Below this |det C1| the L3 variable change x = y det C1 is unavailable.
inline constexpr double kDegenerateDet = 1e-12;

inline std::string_view to_string(FlowSystem s) {
  switch (s) {
    case FlowSystem::L2a_3x3: return "L2a_3x3";
    case FlowSystem::L2a_2x2: return "L2a_2x2";
    case FlowSystem::L3_detnorm: return "L3_detnorm";
    case FlowSystem::L3_unimodular: return "L3_unimodular";
    case FlowSystem::L3_simple: return "L3_simple";
  }
  return "?";
}

inline FlowSystem parse_flow_system(std::string_view name) {
  for (FlowSystem s : kAllFlowSystems) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown flow system '" + std::string(name) + "'");
}

inline bool is_l2a(FlowSystem s) { return s == FlowSystem::L2a_3x3 || s == FlowSystem::L2a_2x2; }
inline int matrix_size(FlowSystem s) { return s == FlowSystem::L2a_3x3 ? 3 : 2; }

/// Entries advanced by the integrator, in the order the equations are listed.
inline std::string_view evolved_names(FlowSystem s) {
  switch (s) {
    case FlowSystem::L2a_3x3: return "DLEMGN";
    case FlowSystem::L2a_2x2: return "EMGN";
    default: return "BECG";
  }
}

/// Entries held fixed (constant free functions).
inline std::string_view free_names(FlowSystem s) {
  switch (s) {
    case FlowSystem::L2a_3x3: return "ABC";
    case FlowSystem::L2a_2x2: return "BC";
    case FlowSystem::L3_simple: return "";
    default: return "MN";
  }
}

struct FlowState {
  double s = 0.0;  // ln x for L2a, y for L3
  Entries entries;

  MatrixPair pair() const { return MatrixPair::from_entries(entries); }
};

inline double det_c1_2x2(const Entries& e) { return e.B * e.G - e.C * e.E; }

inline void validate_flow_state(FlowSystem system, const FlowState& st) {
  const Entries& e = st.entries;
  if (e.n != matrix_size(system)) {
    throw InvalidInput(std::string(to_string(system)) + " needs " + std::to_string(matrix_size(system)) +
                       "x" + std::to_string(matrix_size(system)) + " structure constants");
  }
  for (char c : e.names()) {
    if (!std::isfinite(e[c])) throw InvalidInput(std::string("entry ") + c + " is not finite");
  }
  switch (system) {
    case FlowSystem::L3_detnorm:
      if (std::abs(det_c1_2x2(e)) < kDegenerateDet) throw SingularFlow("det C1 vanishes; L3 flow undefined");
      break;
    case FlowSystem::L3_unimodular:
      if (std::abs(det_c1_2x2(e) - 1.0) > 1e-9) throw InvalidInput("L3_unimodular needs det C1 = BG - CE = 1");
      break;
    case FlowSystem::L3_simple:
      if (e.M != 0.0 || e.N != 0.0) throw InvalidInput("L3_simple fixes M = N = 0");
      break;
    default: break;
  }
}

/// Right-hand sides of the component systems; only evolved entries are set.
inline Entries vector_field(FlowSystem system, const FlowState& st) {
  const Entries& e = st.entries;
  if (e.n != matrix_size(system)) throw InvalidInput("vector_field: state size does not match the system");
  const double A = e.A, B = e.B, C = e.C, D = e.D, E = e.E, G = e.G, L = e.L, M = e.M, N = e.N;
  Entries d;
  d.n = e.n;
  switch (system) {
    case FlowSystem::L2a_3x3:
      d.D = D * B + L * C - A * E - D * G;
      d.L = D * E + L * G - A * M - D * N;
      d.E = M * C - E * G - D;
      d.M = E * E + M * G - B * M - E * N - L;
      d.G = G * B + N * C - C * E - G * G + A;
      d.N = G * E - C * M + D;
      break;
    case FlowSystem::L2a_2x2:
      d.E = M * C - E * G;
      d.M = E * E + M * G - B * M - E * N;
      d.G = G * B + N * C - C * E - G * G;
      d.N = G * E - C * M;
      break;
    case FlowSystem::L3_detnorm:
      if (std::abs(B * G - C * E) < kDegenerateDet) throw SingularFlow("det C1 vanishes along the L3 flow");
      d.B = E * B * G + E * N * C - G * M * C - C * E * E;
      d.E = G * B * M + G * E * N - E * C * M - M * G * G;
      d.C = B * C * E + B * G * G + M * C * C - C * E * G - B * N * C - G * B * B;
      d.G = C * M * G + C * E * E - C * E * N - B * G * E;
      break;
    case FlowSystem::L3_unimodular: {
      const double w = E * N - G * M;
      d.B = E + C * w;
      d.E = M + G * w;
      d.C = G - B + C * (M * C - B * N);
      d.G = -E - C * w;
      break;
    }
    case FlowSystem::L3_simple:
      d.B = E;
      d.E = 0.0;
      d.C = G - B;
      d.G = -E;
      break;
  }
  return d;
}

/// Exact algebraic first integrals: traces of powers of C2 (L2a) or C1 (L3).
inline NamedValues first_integrals(FlowSystem system, const FlowState& st) {
  const Entries& e = st.entries;
  NamedValues out;
  if (system == FlowSystem::L2a_3x3) {
    const Mat c2 = st.pair().C2;
    const Mat sq = c2 * c2;
    out.set("I1", c2.trace());
    out.set("I2", 0.5 * sq.trace());
    out.set("I3", (sq * c2).trace() / 3.0);
  } else if (system == FlowSystem::L2a_2x2) {
    out.set("I1", e.E + e.N);
    out.set("I2", 0.5 * (e.E * e.E + e.N * e.N + 2.0 * e.M * e.G));
  } else {
    out.set("I1", e.B + e.G);
    out.set("I2", 0.5 * (e.B * e.B + e.G * e.G + 2.0 * e.C * e.E));
    out.set("det", det_c1_2x2(e));
  }
  return out;
}

using Spectrum = std::vector<std::complex<double>>;

inline void sort_spectrum(Spectrum& ev) {
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
}

/// Roots of lambda^2 - tr lambda + det for a 2x2 matrix [[a,b],[c,d]]:
///   1/2 (a + d +- sqrt((a - d)^2 + 4 b c)).
inline Spectrum eigenvalues_2x2(double a, double b, double c, double d) {
  const std::complex<double> disc = std::sqrt(std::complex<double>((a - d) * (a - d) + 4.0 * b * c, 0.0));
  Spectrum ev{0.5 * (a + d - disc), 0.5 * (a + d + disc)};
  sort_spectrum(ev);
  return ev;
}

inline Spectrum eigenvalues(const Mat& m) {
  if (m.rows() == 2) return eigenvalues_2x2(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m), false);
  Spectrum ev;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) ev.push_back(solver.eigenvalues()(i));
  sort_spectrum(ev);
  return ev;
}

/// Eigenvalues of the isospectral matrix: C2 for L2a, C1 for L3.
inline Spectrum spectral_invariants(FlowSystem system, const FlowState& st) {
  const MatrixPair p = st.pair();
  return eigenvalues(is_l2a(system) ? p.C2 : p.C1);
}

struct Trajectory {
  FlowSystem system = FlowSystem::L2a_2x2;
  std::vector<FlowState> states;
  std::vector<NamedValues> integrals;
  std::vector<Spectrum> spectra;
  bool truncated = false;
  std::string diagnostic;

  std::size_t size() const { return states.size(); }

  /// Deformation parameter x at state i: e^s for L2a, y det C1 for L3.
  double x_at(std::size_t i) const {
    const FlowState& st = states[i];
    return is_l2a(system) ? std::exp(st.s) : st.s * det_c1_2x2(st.entries);
  }
};

namespace detail {

inline Vec pack_evolved(FlowSystem system, const Entries& e) {
  const std::string_view names = evolved_names(system);
  Vec v(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) v(static_cast<Eigen::Index>(i)) = e[names[i]];
  return v;
}

inline Entries unpack_evolved(FlowSystem system, const Entries& base, const Vec& v) {
  Entries e = base;
  const std::string_view names = evolved_names(system);
  for (std::size_t i = 0; i < names.size(); ++i) e[names[i]] = v(static_cast<Eigen::Index>(i));
  return e;
}

}  // namespace detail

/// Fixed-step RK4 integration of `system` from `initial` over [s0, s1].
/// Free entries stay at their initial values. A run that meets a singular
/// configuration or leaves the overflow guard is returned truncated with a
/// diagnostic.
inline Trajectory integrate(FlowSystem system, const FlowState& initial, double s0, double s1, double step) {
  validate_flow_state(system, initial);
  const Entries base = initial.entries;
  auto rhs = [&](double s, const Vec& v) {
    const FlowState st{s, detail::unpack_evolved(system, base, v)};
    return detail::pack_evolved(system, vector_field(system, st));
  };
  const FixedStepRun run = integrate_fixed(rhs, s0, s1, detail::pack_evolved(system, base), step);
  Trajectory traj;
  traj.system = system;
  traj.truncated = run.truncated;
  traj.diagnostic = run.diagnostic;
  traj.states.reserve(run.t.size());
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    FlowState st{run.t[i], detail::unpack_evolved(system, base, run.y[i])};
    traj.integrals.push_back(first_integrals(system, st));
    traj.spectra.push_back(spectral_invariants(system, st));
    traj.states.push_back(std::move(st));
  }
  return traj;
}

/// Trajectory resampled as a field for the matrix-form central-system
/// residual: a log-x grid for L2a, an x = y det C1 grid for L3.
inline SampledField sampled_field(const Trajectory& traj) {
  SampledField f;
  for (char c : free_names(traj.system)) f.free_entries.emplace_back(1, c);
  if (is_l2a(traj.system)) {
    f.variable = GridVariable::log_x;
    for (const auto& st : traj.states) {
      f.grid.push_back(st.s);
      f.values.push_back(st.pair());
    }
    return f;
  }
  f.variable = GridVariable::x;
  if (traj.states.empty()) return f;
  const double det = det_c1_2x2(traj.states.front().entries);
  for (const auto& st : traj.states) {
    f.grid.push_back(st.s * det);
    f.values.push_back(st.pair());
  }
  if (det < 0.0) {
    std::reverse(f.grid.begin(), f.grid.end());
    std::reverse(f.values.begin(), f.values.end());
  }
  return f;
}

inline DdaId dda_of(FlowSystem s) { return is_l2a(s) ? DdaId::L2a : DdaId::L3; }

}  // namespace dcs
