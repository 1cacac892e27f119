#pragma once

// Grid fields for the multi-parameter residual evaluators and loop-nest
// versions of those evaluators, shared by the unit tests and the acceptance run.

#include <cmath>
#include <vector>

#include "deform_cs/dda_registry.hpp"
#include "oracles.hpp"

namespace oracle {

inline dcs::Entries e2(double B, double C, double E, double G, double M, double N) {
  dcs::Entries e;
  e.n = 2;
  e.B = B; e.C = C; e.E = E; e.G = G; e.M = M; e.N = N;
  return e;
}

/// An associative algebra: R[t]/(t^3 - t^2 + 2t - 1) when unital, R x R otherwise.
inline dcs::StructTensor constant_associative(bool unital) {
  if (unital) {
    const double a = 1, b = -2, c = 1;
    dcs::Entries e;
    e.n = 3;
    e.C = 1; e.D = c; e.E = b; e.G = a; e.L = a * c; e.M = c + a * b; e.N = b + a * a;
    return dcs::tensor_from_pair(dcs::MatrixPair::from_entries(e), true);
  }
  // P1 = u + v, P2 = v for idempotents u, v: P1^2 = P1, P1P2 = P2, P2^2 = P2
  return dcs::tensor_from_pair(dcs::MatrixPair::from_entries(e2(1, 0, 0, 1, 0, 1)), false);
}

/// Smooth field with random coefficients on a 5x5 grid.
inline dcs::TensorGridField random_field(Rng& rng, int dim, bool unital, double h) {
  dcs::TensorGridField f;
  f.dim = dim;
  f.unital = unital;
  f.shape = {5, 5};
  f.spacing = {h, h};
  const int first = unital ? 1 : 0;
  struct Coef { double c[5]; };
  std::vector<Coef> coef;
  for (int s = 0; s < 27; ++s) {
    Coef k;
    for (double& v : k.c) v = rng.uniform(-1, 1);
    coef.push_back(k);
  }
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      const double x1 = 0.3 + a * h, x2 = -0.2 + b * h;
      dcs::StructTensor t(dim, unital);
      for (int j = first; j < dim; ++j)
        for (int k = j; k < dim; ++k)
          for (int l = 0; l < dim; ++l) {
            const Coef& q = coef[static_cast<std::size_t>((j * 3 + k) * 3 + l)];
            t.set_symmetric(j, k, l, q.c[0] + q.c[1] * x1 + q.c[2] * x2 + q.c[3] * x1 * x2 + q.c[4] * std::sin(x1 + 0.3 * x2));
          }
      f.values.push_back(t);
    }
  return f;
}

inline dcs::TensorGridField constant_field(const dcs::StructTensor& t, std::vector<int> shape) {
  dcs::TensorGridField f;
  f.dim = t.dim();
  f.unital = t.unital();
  f.shape = shape;
  f.spacing.assign(shape.size(), 0.25);
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  f.values.assign(n, t);
  return f;
}

/// d/dx^s of C_jk^l by central differences on a 5x5 field, zero along the unit index.
inline double derivative(const dcs::TensorGridField& f, int a, int b, int s, int j, int k, int l) {
  const int dir = s - (f.unital ? 1 : 0);
  if (dir < 0) return 0.0;
  const int da = dir == 0 ? 1 : 0, db = dir == 1 ? 1 : 0;
  const dcs::StructTensor& hi = f.values[static_cast<std::size_t>((a + da) * 5 + (b + db))];
  const dcs::StructTensor& lo = f.values[static_cast<std::size_t>((a - da) * 5 + (b - db))];
  return (hi(j, k, l) - lo(j, k, l)) / (2.0 * f.spacing[static_cast<std::size_t>(dir)]);
}

/// max |library - loop nest| over the quantum components at grid point (a, b).
inline double quantum_mismatch(const dcs::TensorGridField& f, int a, int b, double hbar) {
  const int d = f.dim;
  const int p[2] = {a, b};
  const auto comps = dcs::quantum_cs_components(f, p, hbar);
  const dcs::StructTensor& c = f.values[static_cast<std::size_t>(a * 5 + b)];
  double worst = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int n = 0; n < d; ++n) {
          double omega = hbar * derivative(f, a, b, l, j, k, n) - hbar * derivative(f, a, b, j, k, l, n);
          for (int m = 0; m < d; ++m) omega += c(j, k, m) * c(m, l, n) - c(k, l, m) * c(j, m, n);
          worst = std::max(worst, std::abs(comps[static_cast<std::size_t>(((j * d + k) * d + l) * d + n)] - omega));
        }
  return worst;
}

/// max |library - loop nest| over the coisotropic bracket and the
/// associativity part at grid point (a, b).
inline double coisotropic_mismatch(const dcs::TensorGridField& f, int a, int b) {
  const int d = f.dim;
  const int p[2] = {a, b};
  const auto br = dcs::coisotropic_bracket(f, p);
  const dcs::StructTensor& c = f.values[static_cast<std::size_t>(a * 5 + b)];
  auto D = [&](int s, int j, int k, int l) { return derivative(f, a, b, s, j, k, l); };
  double worst = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int r = 0; r < d; ++r)
          for (int m = 0; m < d; ++m) {
            double sum = 0.0;
            for (int s = 0; s < d; ++s) {
              sum += c(s, j, m) * D(k, l, r, s) + c(s, k, m) * D(j, l, r, s) - c(s, r, m) * D(l, j, k, s) -
                     c(s, l, m) * D(r, j, k, s) + c(l, r, s) * D(s, j, k, m) - c(j, k, s) * D(s, l, r, m);
            }
            worst = std::max(worst, std::abs(br[static_cast<std::size_t>((((j * d + k) * d + l) * d + r) * d + m)] - sum));
          }
  Tensor ot{};
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) ot[j][k][l] = c(j, k, l);
  const double assoc = dcs::coisotropic_cs_residual_at(f, p).norm("coisotropic.associativity.max_abs");
  return std::max(worst, std::abs(assoc - assoc_defect(ot, d)));
}

/// max |library - loop nest| over the per-pair Frobenius norms of the
/// discrete system at lattice point (a, b).
inline double discrete_mismatch(const dcs::TensorGridField& f, int a, int b) {
  const int d = f.dim;
  const int p[2] = {a, b};
  const dcs::ResidualReport r = dcs::discrete_cs_residual_at(f, p);
  const int off = f.unital ? 1 : 0;
  auto at = [&](int u, int v) -> const dcs::StructTensor& { return f.values[static_cast<std::size_t>(u * 5 + v)]; };
  auto shifted = [&](int basis) -> const dcs::StructTensor& {
    const int dir = basis - off;
    if (dir < 0) return at(a, b);
    return dir == 0 ? at(a + 1, b) : at(a, b + 1);
  };
  const dcs::StructTensor& c = at(a, b);
  double worst = 0.0;
  for (int j = 0; j < d; ++j)
    for (int l = j + 1; l < d; ++l) {
      double fro = 0.0;
      for (int n = 0; n < d; ++n)
        for (int k = 0; k < d; ++k) {
          double v = 0.0;
          for (int m = 0; m < d; ++m) v += c(l, m, n) * shifted(l)(j, k, m) - c(j, m, n) * shifted(j)(l, k, m);
          fro += v * v;
        }
      worst = std::max(worst, std::abs(r.norm(std::to_string(j) + "," + std::to_string(l)) - std::sqrt(fro)));
    }
  return worst;
}

}  // namespace oracle
