#pragma once

// Explicit solution families of the central systems and their validation.

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "deform_cs/algebra_core.hpp"
#include "deform_cs/continuous_flows.hpp"
#include "deform_cs/errors.hpp"

namespace dcs {

enum class FamilyId { Nilpotent3x3, Nilpotent2x2, UpperTri2x2, PolyL3, PolyL3Printed, GaugeL5 };

inline constexpr std::array<FamilyId, 6> kAllFamilies{FamilyId::Nilpotent3x3, FamilyId::Nilpotent2x2,
                                                      FamilyId::UpperTri2x2,  FamilyId::PolyL3,
                                                      FamilyId::PolyL3Printed, FamilyId::GaugeL5};

inline std::string_view to_string(FamilyId f) {
  switch (f) {
    case FamilyId::Nilpotent3x3: return "Nilpotent3x3";
    case FamilyId::Nilpotent2x2: return "Nilpotent2x2";
    case FamilyId::UpperTri2x2: return "UpperTri2x2";
    case FamilyId::PolyL3: return "PolyL3";
    case FamilyId::PolyL3Printed: return "PolyL3Printed";
    case FamilyId::GaugeL5: return "GaugeL5";
  }
  return "?";
}

inline FamilyId parse_family(std::string_view name) {
  for (FamilyId f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  throw InvalidInput("unknown family '" + std::string(name) + "'");
}

/// Real polynomial, coefficients in ascending powers.
struct Polynomial {
  std::vector<double> coeffs;

  double operator()(double x) const {
    double v = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
    return v;
  }
};

using GaugePotentials = std::array<Polynomial, 3>;

struct FamilySpec {
  FamilyId id = FamilyId::Nilpotent2x2;
  NamedValues params;
  GaugePotentials phi;  // GaugeL5 only
};

inline std::vector<std::string_view> required_params(FamilyId f) {
  switch (f) {
    case FamilyId::Nilpotent3x3: return {"alpha", "beta", "gamma", "delta", "mu"};
    case FamilyId::Nilpotent2x2: return {"alpha", "beta", "gamma"};
    case FamilyId::UpperTri2x2:
    case FamilyId::PolyL3:
    case FamilyId::PolyL3Printed: return {"alpha", "beta", "gamma", "delta"};
    case FamilyId::GaugeL5: return {};
  }
  return {};
}

/// Checks parameters and constraints (beta gamma - alpha delta = 1 for the
/// polynomial L3 families, beta != 0 for UpperTri2x2).
inline FamilySpec make_family(FamilyId id, NamedValues params, GaugePotentials phi = {}) {
  for (std::string_view name : required_params(id)) {
    if (!params.contains(name)) throw InvalidInput("family " + std::string(to_string(id)) + " needs parameter '" + std::string(name) + "'");
    if (!std::isfinite(params.at(name))) throw InvalidInput("parameter '" + std::string(name) + "' is not finite");
  }
  if (id == FamilyId::UpperTri2x2 && params.at("beta") == 0.0) throw InvalidInput("UpperTri2x2 needs beta != 0");
  if (id == FamilyId::PolyL3 || id == FamilyId::PolyL3Printed) {
    const double c = params.at("beta") * params.at("gamma") - params.at("alpha") * params.at("delta") - 1.0;
    if (std::abs(c) > 1e-12) throw InvalidInput("PolyL3 needs beta*gamma - alpha*delta = 1");
  }
  if (id == FamilyId::GaugeL5) {
    for (const auto& p : phi) {
      if (p.coeffs.empty()) throw InvalidInput("GaugeL5 needs three potential polynomials");
    }
  }
  return {id, std::move(params), std::move(phi)};
}

// ---------------------------------------------------------------------------
// Gauge solutions C_j = g^-1 T_j g with g_j^m = T_j Phi^m
// ---------------------------------------------------------------------------

/// Lattice shifts of T_0 = 1, T_1 = T, T_2 = T^-1.
inline constexpr std::array<int, 3> kGaugeShifts{0, 1, -1};

/// (T_a g)(m, k) = Phi^m(x + s_a + s_k); a = -1 gives g itself.
inline Mat shifted_gauge(const GaugePotentials& phi, double x, int a) {
  Mat g(3, 3);
  const int sa = a < 0 ? 0 : kGaugeShifts[a];
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k) g(m, k) = phi[m](x + static_cast<double>(sa + kGaugeShifts[k]));
  return g;
}

inline Mat gauge_matrix(const GaugePotentials& phi, double x) { return shifted_gauge(phi, x, -1); }

/// g^-1, or SingularGauge when g is numerically rank deficient.
inline Mat gauge_inverse(const Mat& g) {
  double scale = 1.0;
  for (int r = 0; r < 3; ++r) scale *= std::max(g.row(r).norm(), 1e-300);
  const double det = g.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-12 * scale) throw SingularGauge("gauge matrix g is singular");
  return g.inverse();
}

/// The three matrices C_0 = 1, C_1, C_2 of the gauge solution at x.
inline std::array<Mat, 3> gauge_matrices(const GaugePotentials& phi, double x) {
  const Mat gi = gauge_inverse(gauge_matrix(phi, x));
  return {gi * shifted_gauge(phi, x, 0), gi * shifted_gauge(phi, x, 1), gi * shifted_gauge(phi, x, 2)};
}

namespace detail {

/// Reads the gauge C1, C2 into a consistent unital pair. The unit columns
/// equal e1, e2 up to round-off and are snapped.
inline MatrixPair gauge_pair(const std::array<Mat, 3>& c) {
  for (int r = 0; r < 3; ++r) {
    if (std::abs(c[1](r, 0) - (r == 1)) > 1e-8 || std::abs(c[2](r, 0) - (r == 2)) > 1e-8) {
      throw SingularGauge("gauge solution lost its unit columns; g is ill-conditioned");
    }
  }
  Entries e;
  e.n = 3;
  e.A = c[1](0, 1); e.B = c[1](1, 1); e.C = c[1](2, 1);
  e.D = c[1](0, 2); e.E = c[1](1, 2); e.G = c[1](2, 2);
  e.L = c[2](0, 2); e.M = c[2](1, 2); e.N = c[2](2, 2);
  return MatrixPair::from_entries(e);
}

inline double log_point(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidInput("logarithmic family needs x > 0");
  const double l = std::log(x);
  if (std::abs(l) <= 1e-9) throw InvalidInput("logarithmic family is singular at x = 1");
  return l;
}

}  // namespace detail

/// Structure constants of a family at x (y for the L3 families).
inline Entries eval_family_entries(const FamilySpec& f, double x) {
  const NamedValues& p = f.params;
  Entries e;
  switch (f.id) {
    case FamilyId::Nilpotent3x3: {
      const double l = detail::log_point(x);
      const double al = p.at("alpha"), be = p.at("beta"), ga = p.at("gamma"), de = p.at("delta"), mu = p.at("mu");
      e.n = 3;
      e.D = be / l;
      e.E = -be + ga / l;
      e.G = 1.0 / l;
      e.L = al * be + 2.0 * be * be + de * l - be * ga / l;
      e.M = al * ga + 3.0 * be * ga + mu * l - de * l * l - ga * ga / l;
      e.N = al + be - ga / l;
      return e;
    }
    case FamilyId::Nilpotent2x2: {
      const double l = detail::log_point(x);
      const double al = p.at("alpha"), be = p.at("beta"), ga = p.at("gamma");
      e.n = 2;
      e.E = be / l;
      e.G = 1.0 / l;
      e.M = ga * l - be * be / l + al * be;
      e.N = -be / l + al;
      return e;
    }
    case FamilyId::UpperTri2x2: {
      const double al = p.at("alpha"), be = p.at("beta"), ga = p.at("gamma"), de = p.at("delta");
      if (!std::isfinite(x) || x == 0.0 || x + be == 0.0) throw InvalidInput("UpperTri2x2 is singular at x = 0 and x = -beta");
      e.n = 2;
      e.B = 1.0;
      e.E = ga / (x + be);
      e.G = x / (x + be);
      e.M = de + (al * ga + be * de - ga * ga / be) / x + ga * ga / (be * (x + be));
      e.N = -ga / (x + be) + al;
      return e;
    }
    case FamilyId::PolyL3:
    case FamilyId::PolyL3Printed: {
      if (!std::isfinite(x)) throw InvalidInput("PolyL3 needs a finite y");
      const double al = p.at("alpha"), be = p.at("beta"), ga = p.at("gamma"), de = p.at("delta");
      const double quad = f.id == FamilyId::PolyL3 ? al : 1.0;
      e.n = 2;
      e.E = al;
      e.B = al * x + be;
      e.G = -al * x + ga;
      e.C = -quad * x * x + (ga - be) * x + de;
      return e;
    }
    case FamilyId::GaugeL5: return detail::gauge_pair(gauge_matrices(f.phi, x)).entries();
  }
  throw InvalidInput("unknown family");
}

inline MatrixPair eval_family(const FamilySpec& f, double x) { return MatrixPair::from_entries(eval_family_entries(f, x)); }

/// The flow system whose trajectories the continuous families are.
inline FlowSystem family_flow_system(FamilyId f) {
  switch (f) {
    case FamilyId::Nilpotent3x3: return FlowSystem::L2a_3x3;
    case FamilyId::Nilpotent2x2:
    case FamilyId::UpperTri2x2: return FlowSystem::L2a_2x2;
    case FamilyId::PolyL3:
    case FamilyId::PolyL3Printed: return FlowSystem::L3_simple;
    case FamilyId::GaugeL5: break;
  }
  throw InvalidInput("GaugeL5 is a discrete family");
}

/// d/dy of the polynomial L3 families (exact).
inline Entries poly_l3_derivative(const FamilySpec& f, double y) {
  const double al = f.params.at("alpha"), be = f.params.at("beta"), ga = f.params.at("gamma");
  const double quad = f.id == FamilyId::PolyL3 ? al : 1.0;
  Entries d;
  d.n = 2;
  d.E = 0.0;
  d.B = al;
  d.G = -al;
  d.C = -2.0 * quad * y + (ga - be);
  return d;
}

inline std::string point_label(FamilyId f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s@%.17g", std::string(to_string(f)).c_str(), x);
  return buf;
}

/// Integral values the family carries by construction.
inline NamedValues family_integrals(const FamilySpec& f) {
  const NamedValues& p = f.params;
  NamedValues out;
  switch (f.id) {
    case FamilyId::Nilpotent3x3: {
      const double al = p.at("alpha"), be = p.at("beta"), ga = p.at("gamma"), de = p.at("delta"), mu = p.at("mu");
      const double ab = al + be;
      out.set("I1", al);
      out.set("I2", 0.5 * al * al + 3.0 * be * be + 2.0 * al * be + mu);
      out.set("I3", (ab * ab * ab - be * be * be) / 3.0 + ab * (mu + be * (al + 2.0 * be)) - ga * de);
      break;
    }
    case FamilyId::Nilpotent2x2:
      out.set("I1", p.at("alpha"));
      out.set("I2", p.at("gamma") + 0.5 * p.at("alpha") * p.at("alpha"));
      break;
    case FamilyId::UpperTri2x2:
      out.set("I1", p.at("alpha"));
      out.set("I2", p.at("delta") + 0.5 * p.at("alpha") * p.at("alpha"));
      break;
    case FamilyId::PolyL3:
    case FamilyId::PolyL3Printed: {
      const double al = p.at("alpha"), be = p.at("beta"), ga = p.at("gamma"), de = p.at("delta");
      out.set("I1", be + ga);
      out.set("I2", 0.5 * (be * be + ga * ga + 2.0 * al * de));
      break;
    }
    case FamilyId::GaugeL5:
      // C1 T C2 = g^-1 T g (T g)^-1 g = 1, so tr (C1 T C2)^k / k = 3 / k
      out.set("I1", 3.0);
      out.set("I2", 1.5);
      out.set("I3", 1.0);
      break;
  }
  return out;
}

/// Residual of the family's governing central system at each sample point.
/// Logarithmic and rational families: x-central differences with step h
/// against the component right-hand sides. Polynomial L3 families: exact
/// derivatives. GaugeL5: exact shift residual C1 TC2 - C2 T^-1 C1.
inline ResidualReport validate_family(const FamilySpec& f, const std::vector<double>& points, double h = 1e-4) {
  if (points.empty()) throw InvalidInput("validate_family needs sample points");
  ResidualReport r;
  for (double x : points) {
    double res = 0.0;
    switch (f.id) {
      case FamilyId::GaugeL5: {
        const auto here = gauge_matrices(f.phi, x);
        const auto next = gauge_matrices(f.phi, x + 1.0);
        const auto prev = gauge_matrices(f.phi, x - 1.0);
        res = frobenius(here[1] * next[2] - here[2] * prev[1]);
        break;
      }
      case FamilyId::PolyL3:
      case FamilyId::PolyL3Printed: {
        const FlowState st{x, eval_family_entries(f, x)};
        const Entries rhs = vector_field(FlowSystem::L3_simple, st);
        const Entries d = poly_l3_derivative(f, x);
        for (char c : evolved_names(FlowSystem::L3_simple)) res = std::max(res, std::abs(d[c] - rhs[c]));
        break;
      }
      default: {
        if (!(h > 0.0)) throw InvalidInput("finite-difference step must be positive");
        const FlowSystem sys = family_flow_system(f.id);
        const Entries lo = eval_family_entries(f, x - h);
        const Entries hi = eval_family_entries(f, x + h);
        const FlowState st{std::log(std::abs(x)), eval_family_entries(f, x)};
        const Entries rhs = vector_field(sys, st);
        for (char c : evolved_names(sys)) {
          const double deriv = x * (hi[c] - lo[c]) / (2.0 * h);
          res = std::max(res, std::abs(deriv - rhs[c]));
        }
        break;
      }
    }
    r.add(point_label(f.id, x), res);
  }
  r.integrals = family_integrals(f);
  return r;
}

}  // namespace dcs
