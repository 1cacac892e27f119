#pragma once

// Deformation driving algebras (DDAs) built on three-dimensional Lie
// algebras, and residual evaluators for the central systems they induce.
// Also houses the quantum, discrete and coisotropic central systems, which
// live on multi-parameter fields of structure constants.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deform_cs/algebra_core.hpp"
#include "deform_cs/errors.hpp"

namespace dcs {

enum class DdaId { L1, L2a, L2b, L3, L4, L5 };

/// How p_j acts on a function of x, [p_j, phi(x)].
enum class OperatorKind {
  none,                 // 0
  scaling_derivative,   // x dphi/dx
  derivative_times_p1,  // dphi/dx * p1
  shift,                // (T - 1) phi * p_j
  inverse_shift,        // (T^-1 - 1) phi * p_j
};

struct DdaSpec {
  DdaId id;
  std::array<OperatorKind, 2> ops;  // for p1, p2
  std::string_view relations;
  bool discrete;  // shift-type operators
  bool deforms;   // L1 generates no deformation
};

inline constexpr std::array<DdaId, 6> kAllDdas{DdaId::L1, DdaId::L2a, DdaId::L2b, DdaId::L3, DdaId::L4, DdaId::L5};

inline std::string_view to_string(DdaId id) {
  switch (id) {
    case DdaId::L1: return "L1";
    case DdaId::L2a: return "L2a";
    case DdaId::L2b: return "L2b";
    case DdaId::L3: return "L3";
    case DdaId::L4: return "L4";
    case DdaId::L5: return "L5";
  }
  return "?";
}

inline std::string_view to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::none: return "none";
    case OperatorKind::scaling_derivative: return "scaling_derivative";
    case OperatorKind::derivative_times_p1: return "derivative_times_p1";
    case OperatorKind::shift: return "shift";
    case OperatorKind::inverse_shift: return "inverse_shift";
  }
  return "?";
}

inline DdaId parse_dda(std::string_view name) {
  for (DdaId id : kAllDdas) {
    if (to_string(id) == name) return id;
  }
  throw InvalidInput("unknown dda '" + std::string(name) + "'");
}

inline DdaSpec lookup(DdaId id) {
  using K = OperatorKind;
  switch (id) {
    case DdaId::L1: return {id, {K::none, K::none}, "[p1,p2]=0, [p1,x]=0, [p2,x]=0", false, false};
    case DdaId::L2a: return {id, {K::scaling_derivative, K::none}, "[p1,p2]=0, [p1,x]=x, [p2,x]=0", false, true};
    case DdaId::L2b: return {id, {K::shift, K::none}, "[p1,p2]=0, [p1,x]=p1, [p2,x]=0", true, true};
    case DdaId::L3: return {id, {K::none, K::derivative_times_p1}, "[p1,p2]=0, [p1,x]=0, [p2,x]=p1", false, true};
    case DdaId::L4: return {id, {K::shift, K::shift}, "[p1,p2]=0, [p1,x]=p1, [p2,x]=p2", true, true};
    case DdaId::L5: return {id, {K::shift, K::inverse_shift}, "[p1,p2]=0, [p1,x]=p1, [p2,x]=-p2", true, true};
  }
  throw InvalidInput("unknown dda id");
}

inline DdaSpec lookup(std::string_view name) { return lookup(parse_dda(name)); }

// ---------------------------------------------------------------------------
// One-parameter sampled fields and the six DDA central systems
// ---------------------------------------------------------------------------

/// Which variable the grid of a SampledField holds. For log_x the samples
/// are uniform in s = ln x, so x d/dx = d/ds.
enum class GridVariable { x, log_x, lattice };

struct SampledField {
  GridVariable variable = GridVariable::x;
  std::vector<double> grid;
  std::vector<MatrixPair> values;
  std::vector<std::string> free_entries;

  double spacing() const { return grid.size() >= 2 ? grid[1] - grid[0] : 0.0; }

  void validate() const {
    if (grid.size() != values.size()) throw InvalidInput("sampled field: grid and values differ in length");
    if (grid.empty()) throw InvalidInput("sampled field is empty");
    for (const auto& v : values) v.validate();
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i].n != values[0].n) throw InvalidInput("sampled field mixes matrix sizes");
    }
    if (grid.size() < 2) return;
    const double h = spacing();
    if (!(h > 0.0)) throw InvalidInput("sampled field grid must be strictly increasing");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double d = grid[i] - grid[i - 1];
      if (!(d > 0.0)) throw InvalidInput("sampled field grid must be strictly increasing");
      if (variable == GridVariable::lattice) {
        if (grid[i - 1] != std::round(grid[i - 1]) || d != 1.0) {
          throw InvalidInput("lattice grid must be consecutive integers");
        }
      } else if (std::abs(d - h) > 1e-6 * h) {
        throw InvalidInput("sampled field grid must be uniformly spaced");
      }
    }
  }
};

namespace detail {

inline void require_neighbours(const SampledField& f, std::size_t i, bool need_prev, bool need_next) {
  if (i >= f.values.size()) throw OutOfRange("sample index beyond the field");
  if (need_prev && i == 0) throw OutOfRange("stencil needs the sample before index 0");
  if (need_next && i + 1 >= f.values.size()) throw OutOfRange("stencil needs the sample after the last index");
}

/// Central difference of a matrix-valued sample sequence, d/d(grid variable).
template <class Get>
Mat central_difference(const SampledField& f, std::size_t i, Get get) {
  const double h = f.grid[i + 1] - f.grid[i - 1];
  return (get(f.values[i + 1]) - get(f.values[i - 1])) / h;
}

inline double x_at(const SampledField& f, std::size_t i) {
  return f.variable == GridVariable::log_x ? std::exp(f.grid[i]) : f.grid[i];
}

inline void add_matrix_norms(ResidualReport& r, std::string_view dda, const Mat& m) {
  r.add(std::string(dda) + ".frobenius", frobenius(m));
  r.add(std::string(dda) + ".max_abs", m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
}

}  // namespace detail

namespace detail {

inline Mat cs_matrix_unchecked(const DdaSpec& dda, const SampledField& field, std::size_t i) {
  const bool lattice = field.variable == GridVariable::lattice;
  if (!dda.deforms) throw Unsupported("L1 generates no deformation; its central system is plain associativity");
  if (dda.discrete != lattice) {
    throw InvalidInput(std::string("dda ") + std::string(to_string(dda.id)) +
                       (dda.discrete ? " needs an integer lattice field" : " needs a continuous field"));
  }
  auto c1 = [](const MatrixPair& p) -> const Mat& { return p.C1; };
  auto c2 = [](const MatrixPair& p) -> const Mat& { return p.C2; };
  if (i >= field.values.size()) throw OutOfRange("sample index beyond the field");
  const MatrixPair& here = field.values[i];
  switch (dda.id) {
    case DdaId::L2a: {
      detail::require_neighbours(field, i, true, true);
      Mat d = detail::central_difference(field, i, c2);
      if (field.variable == GridVariable::x) d *= field.grid[i];
      return d - commutator(here.C2, here.C1);
    }
    case DdaId::L3: {
      detail::require_neighbours(field, i, true, true);
      Mat d = detail::central_difference(field, i, c1);
      if (field.variable == GridVariable::log_x) d /= detail::x_at(field, i);
      return here.C1 * d - commutator(here.C1, here.C2);
    }
    case DdaId::L2b:
      detail::require_neighbours(field, i, false, true);
      return here.C1 * field.values[i + 1].C2 - here.C2 * here.C1;
    case DdaId::L4:
      detail::require_neighbours(field, i, false, true);
      return here.C1 * field.values[i + 1].C2 - here.C2 * field.values[i + 1].C1;
    case DdaId::L5:
      detail::require_neighbours(field, i, true, true);
      return here.C1 * field.values[i + 1].C2 - here.C2 * field.values[i - 1].C1;
    case DdaId::L1: break;
  }
  throw Unsupported("no central system for this dda");
}

}  // namespace detail

/// Matrix-form residual of the central system of `dda` at sample i:
///   L2a  x dC2/dx - [C2, C1]
///   L3   C1 dC1/dx - [C1, C2]
///   L2b  C1 TC2 - C2 C1
///   L4   C1 TC2 - C2 TC1
///   L5   C1 TC2 - C2 T^-1 C1
/// Continuous DDAs use second-order central differences.
inline Mat cs_residual_matrix(const DdaSpec& dda, const SampledField& field, std::size_t i) {
  field.validate();
  return detail::cs_matrix_unchecked(dda, field, i);
}

inline ResidualReport cs_residual(const DdaSpec& dda, const SampledField& field, std::size_t i) {
  ResidualReport r;
  detail::add_matrix_norms(r, to_string(dda.id), cs_residual_matrix(dda, field, i));
  return r;
}

/// Largest Frobenius residual over every sample that has a full stencil.
inline double cs_residual_max(const DdaSpec& dda, const SampledField& field) {
  const bool prev = dda.id != DdaId::L2b && dda.id != DdaId::L4;
  const std::size_t first = prev ? 1 : 0;
  field.validate();
  if (field.values.size() < first + 2) throw OutOfRange("field too short for the stencil");
  double worst = 0.0;
  for (std::size_t i = first; i + 1 < field.values.size(); ++i) {
    worst = std::max(worst, frobenius(detail::cs_matrix_unchecked(dda, field, i)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Multi-parameter fields: quantum, coisotropic and discrete central systems
// ---------------------------------------------------------------------------

/// Structure constants sampled on a tensor-product grid in x^1..x^M.
/// Basis index b maps onto grid direction b - (unital ? 1 : 0); the unit
/// index has no direction and its derivative / shift is trivial.
struct TensorGridField {
  int dim = 2;
  bool unital = false;
  std::vector<int> shape;
  std::vector<double> spacing;  // ignored for integer lattices
  std::vector<StructTensor> values;

  int directions() const { return static_cast<int>(shape.size()); }
  int offset() const { return unital ? 1 : 0; }

  std::size_t flat(std::span<const int> p) const {
    std::size_t idx = 0;
    for (int d = 0; d < directions(); ++d) idx = idx * static_cast<std::size_t>(shape[d]) + static_cast<std::size_t>(p[d]);
    return idx;
  }
  const StructTensor& at(std::span<const int> p) const { return values[flat(p)]; }

  std::size_t point_count() const {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }

  void validate(bool need_spacing) const {
    if (dim < 1 || dim > 3) throw InvalidInput("field dimension must be in 1..3");
    if (directions() != dim - offset()) {
      throw InvalidInput("field has " + std::to_string(directions()) + " grid directions but " +
                         std::to_string(dim - offset()) + " deformation parameters are required");
    }
    for (int s : shape) {
      if (s < 1) throw InvalidInput("grid shape entries must be positive");
    }
    if (need_spacing) {
      if (static_cast<int>(spacing.size()) != directions()) throw InvalidInput("one grid spacing per direction required");
      for (double h : spacing) {
        if (!(h > 0.0)) throw InvalidInput("grid spacing must be positive");
      }
    }
    if (values.size() != point_count()) throw InvalidInput("field value count does not match grid shape");
    for (const auto& t : values) {
      if (t.dim() != dim || t.unital() != unital) throw InvalidInput("field tensors disagree with field dimension");
    }
  }

  /// Iterates over every grid point (row-major).
  template <class F>
  void for_each_point(F&& f) const {
    std::vector<int> p(shape.size(), 0);
    for (std::size_t n = 0; n < point_count(); ++n) {
      f(std::span<const int>(p));
      for (int d = directions() - 1; d >= 0; --d) {
        if (++p[d] < shape[d]) break;
        p[d] = 0;
      }
    }
  }

  bool interior(std::span<const int> p, int before, int after) const {
    for (int d = 0; d < directions(); ++d) {
      if (p[d] - before < 0 || p[d] + after >= shape[d]) return false;
    }
    return true;
  }
};

namespace detail {

/// The matrices C_b(x) at a grid point.
inline std::vector<Mat> matrices_at(const TensorGridField& f, std::span<const int> p) {
  const StructTensor& t = f.at(p);
  std::vector<Mat> out;
  for (int b = 0; b < f.dim; ++b) out.push_back(t.matrix(b));
  return out;
}

/// dC_b/dx^s for every matrix b, by central differences along x^s.
inline std::vector<Mat> derivative_at(const TensorGridField& f, std::span<const int> p, int s) {
  std::vector<Mat> out(static_cast<std::size_t>(f.dim), Mat::Zero(f.dim, f.dim));
  const int dir = s - f.offset();
  if (dir < 0) return out;
  std::vector<int> lo(p.begin(), p.end()), hi(p.begin(), p.end());
  --lo[dir];
  ++hi[dir];
  if (lo[dir] < 0 || hi[dir] >= f.shape[dir]) throw OutOfRange("central difference leaves the grid");
  const StructTensor& a = f.at(lo);
  const StructTensor& b = f.at(hi);
  const double inv = 1.0 / (2.0 * f.spacing[dir]);
  for (int j = 0; j < f.dim; ++j) out[j] = (b.matrix(j) - a.matrix(j)) * inv;
  return out;
}

inline int tensor_index(int dim, int a, int b, int c, int d) { return ((a * dim + b) * dim + c) * dim + d; }

}  // namespace detail

/// All components Omega_klj^n of the quantum central system
///   hbar dC_jk^n/dx^l - hbar dC_kl^n/dx^j + sum_m (C_jk^m C_ml^n - C_kl^m C_jm^n)
/// stored at index ((j*dim + k)*dim + l)*dim + n.
inline std::vector<double> quantum_cs_components(const TensorGridField& f, std::span<const int> p, double hbar) {
  f.validate(true);
  const int d = f.dim;
  const std::vector<Mat> c = detail::matrices_at(f, p);
  std::vector<std::vector<Mat>> dc;  // dc[s][b] = dC_b/dx^s
  for (int s = 0; s < d; ++s) dc.push_back(detail::derivative_at(f, p, s));
  std::vector<double> out(static_cast<std::size_t>(d * d * d * d), 0.0);
  // With symmetric C the component (j,k,l,n) is entry (n,k) of
  //   hbar (d_l C_j - d_j C_l) + [C_l, C_j].
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l) {
      const Mat m = hbar * (dc[l][j] - dc[j][l]) + commutator(c[l], c[j]);
      for (int k = 0; k < d; ++k)
        for (int n = 0; n < d; ++n) out[detail::tensor_index(d, j, k, l, n)] = m(n, k);
    }
  return out;
}

inline ResidualReport quantum_cs_residual_at(const TensorGridField& f, std::span<const int> p, double hbar) {
  const auto comps = quantum_cs_components(f, p, hbar);
  double worst = 0.0;
  for (double v : comps) worst = std::max(worst, std::abs(v));
  ResidualReport r;
  r.add("quantum_cs.max_abs", worst);
  return r;
}

/// Quantum residual maximised over all interior grid points.
inline ResidualReport quantum_cs_residual(const TensorGridField& f, double hbar) {
  f.validate(true);
  double worst = 0.0;
  bool any = false;
  f.for_each_point([&](std::span<const int> p) {
    if (!f.interior(p, 1, 1)) return;
    any = true;
    worst = std::max(worst, quantum_cs_residual_at(f, p, hbar).norms[0]);
  });
  if (!any) throw OutOfRange("grid has no interior point for central differences");
  ResidualReport r;
  r.add("quantum_cs.max_abs", worst);
  return r;
}

/// Bracket [C,C]_jklr^m of the coisotropic central system, stored at
/// ((((j*dim + k)*dim + l)*dim + r)*dim + m).
inline std::vector<double> coisotropic_bracket(const TensorGridField& f, std::span<const int> p) {
  f.validate(true);
  const int d = f.dim;
  const std::vector<Mat> c = detail::matrices_at(f, p);
  std::vector<std::vector<Mat>> dc;
  for (int s = 0; s < d; ++s) dc.push_back(detail::derivative_at(f, p, s));
  // column r of C_l is the vector (C_lr^s)_s; dc[k][l].col(r) its x^k derivative
  std::vector<double> out(static_cast<std::size_t>(d * d * d * d * d), 0.0);
  using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int r = 0; r < d; ++r) {
          const Vec vlr = c[l].col(r);
          const Vec vjk = c[j].col(k);
          Vec b = c[j] * dc[k][l].col(r) + c[k] * dc[j][l].col(r) - c[r] * dc[l][j].col(k) - c[l] * dc[r][j].col(k);
          for (int s = 0; s < d; ++s) b += vlr(s) * dc[s][j].col(k) - vjk(s) * dc[s][l].col(r);
          for (int m = 0; m < d; ++m) out[static_cast<std::size_t>((((j * d + k) * d + l) * d + r) * d + m)] = b(m);
        }
  return out;
}

/// Both coisotropic residuals at a point: the differential bracket and the
/// algebraic associativity part.
inline ResidualReport coisotropic_cs_residual_at(const TensorGridField& f, std::span<const int> p) {
  const auto br = coisotropic_bracket(f, p);
  double worst = 0.0;
  for (double v : br) worst = std::max(worst, std::abs(v));
  ResidualReport r;
  r.add("coisotropic.bracket.max_abs", worst);
  r.add("coisotropic.associativity.max_abs", associativity_defect(f.at(p)));
  return r;
}

inline ResidualReport coisotropic_cs_residual(const TensorGridField& f) {
  f.validate(true);
  double wb = 0.0, wa = 0.0;
  bool any = false;
  f.for_each_point([&](std::span<const int> p) {
    if (!f.interior(p, 1, 1)) return;
    any = true;
    const auto r = coisotropic_cs_residual_at(f, p);
    wb = std::max(wb, r.norms[0]);
    wa = std::max(wa, r.norms[1]);
  });
  if (!any) throw OutOfRange("grid has no interior point for central differences");
  ResidualReport r;
  r.add("coisotropic.bracket.max_abs", wb);
  r.add("coisotropic.associativity.max_abs", wa);
  return r;
}

namespace detail {

/// T_b C_j at lattice point p: shift by +1 along the direction of basis
/// index b (identity for the unit index).
inline Mat shifted_matrix(const TensorGridField& f, std::span<const int> p, int b, int j) {
  const int dir = b - f.offset();
  if (dir < 0) return f.at(p).matrix(j);
  std::vector<int> q(p.begin(), p.end());
  ++q[dir];
  if (q[dir] >= f.shape[dir]) throw OutOfRange("lattice point has no neighbour in direction " + std::to_string(dir));
  return f.at(q).matrix(j);
}

}  // namespace detail

/// Discrete central system C_l T_l C_j - C_j T_j C_l at one lattice point,
/// one Frobenius norm per unordered pair j < l labelled "j,l".
inline ResidualReport discrete_cs_residual_at(const TensorGridField& f, std::span<const int> p) {
  f.validate(false);
  ResidualReport r;
  const StructTensor& t = f.at(p);
  for (int j = 0; j < f.dim; ++j)
    for (int l = j + 1; l < f.dim; ++l) {
      const Mat m = t.matrix(l) * detail::shifted_matrix(f, p, l, j) - t.matrix(j) * detail::shifted_matrix(f, p, j, l);
      r.add(std::to_string(j) + "," + std::to_string(l), frobenius(m));
    }
  return r;
}

/// Discrete residual maximised over every lattice point with forward neighbours.
inline ResidualReport discrete_cs_residual(const TensorGridField& f) {
  f.validate(false);
  double worst = 0.0;
  bool any = false;
  f.for_each_point([&](std::span<const int> p) {
    if (!f.interior(p, 0, 1)) return;
    any = true;
    worst = std::max(worst, discrete_cs_residual_at(f, p).max_norm());
  });
  if (!any) throw OutOfRange("lattice has no point with forward neighbours");
  ResidualReport r;
  r.add("discrete_cs.frobenius", worst);
  return r;
}

}  // namespace dcs
