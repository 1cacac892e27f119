#pragma once

// Scalar reductions of the L2a and L3 central systems: the Chazy family
// (2x2, C = 1, I1 = 0), the Boussinesq-type equation (3x3, B = G = 0, C = 1)
// and the elliptic system (L3 with M = 0, N = 1, B + G = 0).

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "deform_cs/algebra_core.hpp"
#include "deform_cs/errors.hpp"
#include "deform_cs/rk4.hpp"

namespace dcs {

// ---------------------------------------------------------------------------
// Chazy family
// ---------------------------------------------------------------------------

/// Every member is G''' + 2G^2G' + 4G'^2 + 2GG'' - 2G'Phi - G Phi' = 0 with
/// Phi = B' + B^2/2 for the free function B; the variants fix Phi.
enum class ChazyVariant { ChazyV, ChazyV_shifted, Generic, ChazyVII, ChazyVIII, ChazyIII };

inline constexpr std::array<ChazyVariant, 6> kAllChazyVariants{
    ChazyVariant::ChazyV,   ChazyVariant::ChazyV_shifted, ChazyVariant::Generic,
    ChazyVariant::ChazyVII, ChazyVariant::ChazyVIII,      ChazyVariant::ChazyIII};

inline std::string_view to_string(ChazyVariant v) {
  switch (v) {
    case ChazyVariant::ChazyV: return "ChazyV";
    case ChazyVariant::ChazyV_shifted: return "ChazyV_shifted";
    case ChazyVariant::Generic: return "Generic";
    case ChazyVariant::ChazyVII: return "ChazyVII";
    case ChazyVariant::ChazyVIII: return "ChazyVIII";
    case ChazyVariant::ChazyIII: return "ChazyIII";
  }
  return "?";
}

inline ChazyVariant parse_chazy_variant(std::string_view name) {
  for (ChazyVariant v : kAllChazyVariants) {
    if (to_string(v) == name) return v;
  }
  throw InvalidInput("unknown Chazy variant '" + std::string(name) + "'");
}

/// How Phi is fixed for each variant.
inline std::string_view phi_spec(ChazyVariant v) {
  switch (v) {
    case ChazyVariant::ChazyV: return "B = 0, Phi = 0";
    case ChazyVariant::ChazyV_shifted: return "B = 1, Phi = 1/2";
    case ChazyVariant::Generic: return "B constant, Phi = B^2/2";
    case ChazyVariant::ChazyVII: return "Phi = G', B from B' = G' - B^2/2";
    case ChazyVariant::ChazyVIII: return "B = 2G, Phi = 2G' + 2G^2";
    case ChazyVariant::ChazyIII: return "(G^2 Phi)' = G(2G^2G' + G'^2 + 4GG''), B from B' = Phi - B^2/2";
  }
  return "?";
}

/// G''' of the variant. `phi`, `phi1` are used by Generic only.
inline double chazy_rhs(ChazyVariant v, double G, double G1, double G2, double phi = 0.0, double phi1 = 0.0) {
  switch (v) {
    case ChazyVariant::ChazyV: return -2.0 * G * G * G1 - 4.0 * G1 * G1 - 2.0 * G * G2;
    case ChazyVariant::ChazyV_shifted: return -2.0 * G * G * G1 - 4.0 * G1 * G1 - 2.0 * G * G2 + G1;
    case ChazyVariant::Generic:
      return -2.0 * G * G * G1 - 4.0 * G1 * G1 - 2.0 * G * G2 + 2.0 * G1 * phi + G * phi1;
    case ChazyVariant::ChazyVII: return -2.0 * G * G * G1 - 2.0 * G1 * G1 - G * G2;
    case ChazyVariant::ChazyVIII: return 6.0 * G * G * G1;
    case ChazyVariant::ChazyIII: return 2.0 * G * G2 - 3.0 * G1 * G1;
  }
  return 0.0;
}

/// Chazy state: G and two derivatives, the free function B carried for the
/// reconstruction, and W = G^2 Phi (Chazy III only).
struct ChazyState {
  double y = 0.0;
  double g = 0.0, g1 = 0.0, g2 = 0.0;
  double b = 0.0;
  double w = 0.0;
};

struct PhiValues {
  double phi = 0.0;
  double phi1 = 0.0;
};

/// W' for Chazy III.
inline double chazy_iii_w_rate(double G, double G1, double G2) {
  return G * (2.0 * G * G * G1 + G1 * G1 + 4.0 * G * G2);
}

inline PhiValues chazy_phi(ChazyVariant v, const ChazyState& s) {
  switch (v) {
    case ChazyVariant::ChazyV: return {0.0, 0.0};
    case ChazyVariant::ChazyV_shifted: return {0.5, 0.0};
    case ChazyVariant::Generic: return {0.5 * s.b * s.b, 0.0};
    case ChazyVariant::ChazyVII: return {s.g1, s.g2};
    case ChazyVariant::ChazyVIII: return {2.0 * s.g1 + 2.0 * s.g * s.g, 2.0 * s.g2 + 4.0 * s.g * s.g1};
    case ChazyVariant::ChazyIII: {
      if (std::abs(s.g) < 1e-12) throw SingularFlow("Chazy III: Phi = W/G^2 undefined at G = 0");
      const double g2 = s.g * s.g;
      return {s.w / g2, chazy_iii_w_rate(s.g, s.g1, s.g2) / g2 - 2.0 * s.w * s.g1 / (g2 * s.g)};
    }
  }
  return {};
}

/// dB/dy for the free function B carried in the state.
inline double chazy_b_rate(ChazyVariant v, const ChazyState& s) {
  switch (v) {
    case ChazyVariant::ChazyVII: return s.g1 - 0.5 * s.b * s.b;
    case ChazyVariant::ChazyVIII: return 2.0 * s.g1;
    case ChazyVariant::ChazyIII: return chazy_phi(v, s).phi - 0.5 * s.b * s.b;
    default: return 0.0;
  }
}

/// Puts B (and W) in a state consistent with the variant. For Chazy VII and
/// III the caller's b is kept as the initial value of the Riccati equation;
/// for Chazy III the caller supplies Phi(y0) through w = G^2 Phi.
inline ChazyState normalize_chazy_state(ChazyVariant v, ChazyState s) {
  switch (v) {
    case ChazyVariant::ChazyV: s.b = 0.0; break;
    case ChazyVariant::ChazyV_shifted: s.b = 1.0; break;
    case ChazyVariant::ChazyVIII: s.b = 2.0 * s.g; break;
    default: break;
  }
  if (v != ChazyVariant::ChazyIII) s.w = 0.0;
  return s;
}

/// Second integral
///   I2 = -G^4/2 + G'^2/2 - 2G^2G' - GG'' + Phi G^2.
inline double second_integral(double G, double G1, double G2, double phi) {
  return -0.5 * G * G * G * G + 0.5 * G1 * G1 - 2.0 * G * G * G1 - G * G2 + phi * G * G;
}

/// Second integral with B = 0 or B = 1 (Chazy V and its shifted form),
/// where the last term reads B G^2 / 2.
inline double chazy_v_second_integral(double G, double G1, double G2, double B) {
  return second_integral(G, G1, G2, 0.5 * B);
}

inline double chazy_second_integral(ChazyVariant v, const ChazyState& s) {
  if (v == ChazyVariant::ChazyIII) return second_integral(s.g, s.g1, s.g2, 0.0) + s.w;
  return second_integral(s.g, s.g1, s.g2, chazy_phi(v, s).phi);
}

/// lambda_1,2 = +-sqrt(I2/2), the spectrum of the reconstructed C2.
inline std::array<std::complex<double>, 2> chazy_eigenvalues(double i2) {
  const std::complex<double> r = std::sqrt(std::complex<double>(0.5 * i2, 0.0));
  return {-r, r};
}

inline ChazyState chazy_derivative(ChazyVariant v, const ChazyState& s) {
  ChazyState d;
  d.y = 1.0;
  d.g = s.g1;
  d.g1 = s.g2;
  const PhiValues phi = v == ChazyVariant::Generic ? chazy_phi(v, s) : PhiValues{};
  d.g2 = chazy_rhs(v, s.g, s.g1, s.g2, phi.phi, phi.phi1);
  d.b = chazy_b_rate(v, s);
  d.w = v == ChazyVariant::ChazyIII ? chazy_iii_w_rate(s.g, s.g1, s.g2) : 0.0;
  return d;
}

/// 2x2 structure constants of the L2a central system rebuilt from a Chazy
/// solution: C = 1, N = -E,
///   E = -(G' + G^2 - GB)/2,
///   M = -(G'' + 3GG' + G^3 - G^2B - (GB)')/2.
inline Entries reconstruct_from_g(double G, double G1, double G2, double B, double B1) {
  Entries e;
  e.n = 2;
  e.B = B;
  e.C = 1.0;
  e.G = G;
  e.E = -0.5 * (G1 + G * G - G * B);
  e.N = -e.E;
  e.M = -0.5 * (G2 + 3.0 * G * G1 + G * G * G - G * G * B - (G1 * B + G * B1));
  return e;
}

inline Entries reconstruct_from_g(ChazyVariant v, const ChazyState& s) {
  return reconstruct_from_g(s.g, s.g1, s.g2, s.b, chazy_b_rate(v, s));
}

template <class State>
struct ScalarTrajectory {
  std::vector<State> states;
  std::vector<NamedValues> invariants;
  bool truncated = false;
  std::string diagnostic;

  std::size_t size() const { return states.size(); }
};

using ChazyTrajectory = ScalarTrajectory<ChazyState>;

inline NamedValues chazy_invariants(ChazyVariant v, const ChazyState& s) {
  NamedValues out;
  const double i2 = chazy_second_integral(v, s);
  out.set("I2", i2);
  return out;
}

/// RK4 integration of a Chazy variant on [initial.y, y1]. Runs into a pole
/// come back truncated.
inline ChazyTrajectory chazy_integrate(ChazyVariant v, const ChazyState& initial, double y1, double step) {
  const ChazyState s0 = normalize_chazy_state(v, initial);
  auto to_vec = [](const ChazyState& s) { return Vec{{s.g, s.g1, s.g2, s.b, s.w}}; };
  auto from_vec = [](double y, const Vec& v5) { return ChazyState{y, v5(0), v5(1), v5(2), v5(3), v5(4)}; };
  auto rhs = [&](double y, const Vec& u) { return to_vec(chazy_derivative(v, from_vec(y, u))); };
  // Chazy VIII carries B' = 2G' in the integrator; the output resyncs B = 2G.
  const FixedStepRun run = integrate_fixed(rhs, s0.y, y1, to_vec(s0), step);
  ChazyTrajectory t;
  t.truncated = run.truncated;
  t.diagnostic = run.diagnostic;
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    ChazyState s = normalize_chazy_state(v, from_vec(run.t[i], run.y[i]));
    t.invariants.push_back(chazy_invariants(v, s));
    t.states.push_back(s);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Boussinesq-type reduction: E'' - 6E^2 + 4 alpha E + beta = 0
// ---------------------------------------------------------------------------

struct BoussinesqParams {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
};

struct BoussinesqState {
  double s = 0.0;  // ln x
  double e = 0.0, e1 = 0.0;
};

inline double boussinesq_rhs(double E, const BoussinesqParams& p) { return 6.0 * E * E - 4.0 * p.alpha * E - p.beta; }

/// Companion 3x3 structure constants. N = alpha - E (the printed
/// self-referential N = alpha - N read so that tr C2 = alpha).
inline Entries boussinesq_companions(double E, double E1, const BoussinesqParams& p) {
  Entries c;
  c.n = 3;
  c.A = 2.0 * E - p.alpha;
  c.B = 0.0;
  c.C = 1.0;
  c.D = p.gamma - 0.5 * E1;
  c.E = E;
  c.G = 0.0;
  c.L = -E * E + p.alpha * E + 0.5 * p.beta;
  c.M = p.gamma + 0.5 * E1;
  c.N = p.alpha - E;
  return c;
}

inline NamedValues boussinesq_integrals(double E, double E1, const BoussinesqParams& p) {
  const double a = p.alpha, b = p.beta, g = p.gamma;
  NamedValues out;
  out.set("I1", a);
  out.set("I2", 0.5 * (b + a * a));
  out.set("I3", a * a * a / 3.0 + g * g + 0.5 * a * b - 0.25 * E1 * E1 + E * E * E - a * E * E - 0.5 * b * E);
  return out;
}

struct BoussinesqStep {
  double e2 = 0.0;
  Entries companions;
  NamedValues integrals;
};

inline BoussinesqStep boussinesq_rhs_and_companions(double E, double E1, const BoussinesqParams& p) {
  return {boussinesq_rhs(E, p), boussinesq_companions(E, E1, p), boussinesq_integrals(E, E1, p)};
}

using BoussinesqTrajectory = ScalarTrajectory<BoussinesqState>;

inline BoussinesqTrajectory boussinesq_integrate(const BoussinesqState& initial, const BoussinesqParams& p, double s1,
                                                 double step) {
  auto rhs = [&](double, const Vec& u) { return Vec{{u(1), boussinesq_rhs(u(0), p)}}; };
  const FixedStepRun run = integrate_fixed(rhs, initial.s, s1, Vec{{initial.e, initial.e1}}, step);
  BoussinesqTrajectory t;
  t.truncated = run.truncated;
  t.diagnostic = run.diagnostic;
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    BoussinesqState s{run.t[i], run.y[i](0), run.y[i](1)};
    t.invariants.push_back(boussinesq_integrals(s.e, s.e1, p));
    t.states.push_back(s);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Elliptic reduction of the unimodular L3 system (M = 0, N = 1, G = -B)
// ---------------------------------------------------------------------------

struct EllipticState {
  double y = 0.0;
  double b = 0.0, e = 0.0, c = 0.0;
};

struct EllipticEval {
  double db = 0.0, de = 0.0, dc = 0.0;
  double r1 = 0.0;  // (E')^2 + alpha E^4 - 2E^3 + E^2 with E' = -BE
  double r2 = 0.0;  // B^2 + CE + 1, i.e. I2 + 1
};

inline EllipticEval elliptic_system(double B, double E, double C, double alpha) {
  EllipticEval r;
  r.db = (1.0 + C) * E;
  r.de = -B * E;
  r.dc = -(2.0 + C) * B;
  r.r1 = r.de * r.de + alpha * E * E * E * E - 2.0 * E * E * E + E * E;
  r.r2 = B * B + C * E + 1.0;
  return r;
}

/// A point on the constraint manifold: C = alpha E - 2, B = sign sqrt(2E - 1 - alpha E^2).
inline EllipticState elliptic_point(double E, double alpha, double sign = 1.0, double y = 0.0) {
  const double b2 = 2.0 * E - 1.0 - alpha * E * E;
  if (b2 < 0.0) throw InvalidInput("no real B on the elliptic constraint for this E, alpha");
  return {y, std::copysign(std::sqrt(b2), sign), E, alpha * E - 2.0};
}

/// Full 2x2 L3 structure constants of an elliptic state.
inline Entries elliptic_entries(const EllipticState& s) {
  Entries e;
  e.n = 2;
  e.B = s.b;
  e.E = s.e;
  e.C = s.c;
  e.G = -s.b;
  e.M = 0.0;
  e.N = 1.0;
  return e;
}

using EllipticTrajectory = ScalarTrajectory<EllipticState>;

inline EllipticTrajectory elliptic_integrate(const EllipticState& initial, double alpha, double y1, double step) {
  auto rhs = [](double, const Vec& u) {
    const EllipticEval ev = elliptic_system(u(0), u(1), u(2), 0.0);
    return Vec{{ev.db, ev.de, ev.dc}};
  };
  const FixedStepRun run = integrate_fixed(rhs, initial.y, y1, Vec{{initial.b, initial.e, initial.c}}, step);
  EllipticTrajectory t;
  t.truncated = run.truncated;
  t.diagnostic = run.diagnostic;
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    EllipticState s{run.t[i], run.y[i](0), run.y[i](1), run.y[i](2)};
    const EllipticEval ev = elliptic_system(s.b, s.e, s.c, alpha);
    NamedValues inv;
    inv.set("r1", ev.r1);
    inv.set("r2", ev.r2);
    t.invariants.push_back(inv);
    t.states.push_back(s);
  }
  return t;
}

}  // namespace dcs
