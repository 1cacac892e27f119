#pragma once

// Structure constants of 2- and 3-dimensional commutative algebras, their
// matrix form, and the associativity residual.
//
// Storage convention: (C_j)_k^l lives in row l, column k of the matrix C_j,
// so the 3x3 unital layout reads
//
//   C1 = | 0 A D |    C2 = | 0 D L |
//        | 1 B E |         | 0 E M |
//        | 0 C G |         | 1 G N |
//
// and the 2x2 non-unital layout reads C1 = [[B,E],[C,G]], C2 = [[E,M],[G,N]].

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deform_cs/errors.hpp"

namespace dcs {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

inline double frobenius(const Mat& m) { return m.norm(); }

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

/// Named list of real values (first integrals, invariants, parameters).
/// Order is preserved so that reports and CSV columns are deterministic.
class NamedValues {
 public:
  NamedValues() = default;
  NamedValues(std::initializer_list<std::pair<std::string, double>> init) : items_(init) {}

  void set(const std::string& name, double v) {
    for (auto& [k, val] : items_) {
      if (k == name) {
        val = v;
        return;
      }
    }
    items_.emplace_back(name, v);
  }
  bool contains(std::string_view name) const {
    for (const auto& [k, v] : items_) {
      if (k == name) return true;
    }
    return false;
  }
  double at(std::string_view name) const {
    for (const auto& [k, v] : items_) {
      if (k == name) return v;
    }
    throw InvalidInput("no value named '" + std::string(name) + "'");
  }
  double get(std::string_view name, double fallback) const {
    return contains(name) ? at(name) : fallback;
  }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::pair<std::string, double>& operator[](std::size_t i) const { return items_[i]; }

 private:
  std::vector<std::pair<std::string, double>> items_;
};

/// Per-equation residual norms plus optional first-integral snapshots.
struct ResidualReport {
  std::vector<std::string> labels;
  std::vector<double> norms;
  NamedValues integrals;

  void add(std::string label, double norm) {
    if (!(norm >= 0.0)) throw InvalidInput("residual norm must be nonnegative: " + label);
    labels.push_back(std::move(label));
    norms.push_back(norm);
  }
  void merge(const ResidualReport& other, const std::string& prefix = {}) {
    for (std::size_t i = 0; i < other.labels.size(); ++i) add(prefix + other.labels[i], other.norms[i]);
    for (const auto& [k, v] : other.integrals) integrals.set(prefix + k, v);
  }
  double max_norm() const {
    double m = 0.0;
    for (double n : norms) m = std::max(m, n);
    return m;
  }
  double norm(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) return norms[i];
    }
    throw InvalidInput("no residual labelled '" + std::string(label) + "'");
  }
};

/// The multiplication-table entries A..N of the nontrivial products
///   P1^2 = A P0 + B P1 + C P2,  P1P2 = D P0 + E P1 + G P2,  P2^2 = L P0 + M P1 + N P2.
/// With n == 2 (no unit element) A = D = L = 0.
struct Entries {
  int n = 2;
  double A = 0, B = 0, C = 0, D = 0, E = 0, G = 0, L = 0, M = 0, N = 0;

  static constexpr std::string_view kNames3 = "ABCDEGLMN";
  static constexpr std::string_view kNames2 = "BCEGMN";

  std::string_view names() const { return n == 3 ? kNames3 : kNames2; }

  double& operator[](char name) {
    switch (name) {
      case 'A': return A;
      case 'B': return B;
      case 'C': return C;
      case 'D': return D;
      case 'E': return E;
      case 'G': return G;
      case 'L': return L;
      case 'M': return M;
      case 'N': return N;
      default: break;
    }
    throw InvalidInput(std::string("unknown structure constant '") + name + "'");
  }
  double operator[](char name) const { return const_cast<Entries&>(*this)[name]; }

  bool operator==(const Entries&) const = default;
};

/// The matrices C1, C2 of the multiplication table.
struct MatrixPair {
  int n = 2;
  Mat C1;
  Mat C2;

  static MatrixPair from_entries(const Entries& e) {
    MatrixPair p;
    p.n = e.n;
    if (e.n == 3) {
      p.C1.resize(3, 3);
      p.C2.resize(3, 3);
      p.C1 << 0, e.A, e.D,
              1, e.B, e.E,
              0, e.C, e.G;
      p.C2 << 0, e.D, e.L,
              0, e.E, e.M,
              1, e.G, e.N;
    } else if (e.n == 2) {
      p.C1.resize(2, 2);
      p.C2.resize(2, 2);
      p.C1 << e.B, e.E,
              e.C, e.G;
      p.C2 << e.E, e.M,
              e.G, e.N;
    } else {
      throw InvalidInput("entries dimension must be 2 or 3");
    }
    return p;
  }

  /// Reads the named entries back; validates first.
  Entries entries() const {
    validate();
    Entries e;
    e.n = n;
    if (n == 3) {
      e.A = C1(0, 1); e.B = C1(1, 1); e.C = C1(2, 1);
      e.D = C1(0, 2); e.E = C1(1, 2); e.G = C1(2, 2);
      e.L = C2(0, 2); e.M = C2(1, 2); e.N = C2(2, 2);
    } else {
      e.B = C1(0, 0); e.C = C1(1, 0);
      e.E = C1(0, 1); e.G = C1(1, 1);
      e.M = C2(0, 1); e.N = C2(1, 1);
    }
    return e;
  }

  void validate(double tol = 1e-12) const {
    if (n != 2 && n != 3) throw InvalidInput("matrix pair size must be 2 or 3");
    if (C1.rows() != n || C1.cols() != n || C2.rows() != n || C2.cols() != n) {
      throw InvalidInput("matrix pair: C1, C2 must both be " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (!C1.allFinite() || !C2.allFinite()) throw InvalidInput("matrix pair has non-finite entries");
    auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); };
    if (n == 3) {
      const std::array<double, 3> u1{0, 1, 0}, u2{0, 0, 1};
      for (int r = 0; r < 3; ++r) {
        if (C1(r, 0) != u1[r] || C2(r, 0) != u2[r]) throw InvalidInput("matrix pair: unital columns violated");
      }
    }
    // column "P2" of C1 and column "P1" of C2 both hold the products P1P2
    const int c1col = n - 1, c2col = n - 2;
    for (int r = 0; r < n; ++r) {
      if (!close(C1(r, c1col), C2(r, c2col))) throw InvalidInput("matrix pair: inconsistent shared entries");
    }
  }

  bool operator==(const MatrixPair& o) const { return n == o.n && C1 == o.C1 && C2 == o.C2; }
};

/// Structure constants c[j][k][l] = C_jk^l of an algebra of dimension <= 3.
class StructTensor {
 public:
  StructTensor() : StructTensor(2, false) {}
  StructTensor(int dim, bool unital) : dim_(dim), unital_(unital) {
    if (dim < 1 || dim > 3) throw InvalidInput("tensor dimension must be in 1..3");
    c_.fill(0.0);
    if (unital) {
      for (int j = 0; j < dim; ++j) {
        (*this)(j, 0, j) = 1.0;
        (*this)(0, j, j) = 1.0;
      }
    }
  }

  int dim() const { return dim_; }
  bool unital() const { return unital_; }

  double& operator()(int j, int k, int l) { return c_[static_cast<std::size_t>((j * 3 + k) * 3 + l)]; }
  double operator()(int j, int k, int l) const { return c_[static_cast<std::size_t>((j * 3 + k) * 3 + l)]; }

  /// Sets C_jk^l and C_kj^l together.
  void set_symmetric(int j, int k, int l, double v) {
    (*this)(j, k, l) = v;
    (*this)(k, j, l) = v;
  }

  /// The matrix (C_j)_k^l with row l, column k.
  Mat matrix(int j) const {
    Mat m(dim_, dim_);
    for (int k = 0; k < dim_; ++k)
      for (int l = 0; l < dim_; ++l) m(l, k) = (*this)(j, k, l);
    return m;
  }

  void validate(double tol = 1e-12) const {
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k)
        for (int l = 0; l < dim_; ++l) {
          const double v = (*this)(j, k, l);
          if (!std::isfinite(v)) throw InvalidInput("tensor has non-finite entries");
          if (std::abs(v - (*this)(k, j, l)) > tol * std::max(1.0, std::abs(v))) {
            throw InvalidInput("tensor not symmetric in its lower indices");
          }
          if (unital_ && k == 0 && v != (j == l ? 1.0 : 0.0)) throw InvalidInput("tensor violates the unit constraint");
        }
  }

  StructTensor operator*(double s) const {
    StructTensor t = *this;
    for (double& v : t.c_) v *= s;
    return t;
  }

  bool operator==(const StructTensor& o) const = default;

 private:
  int dim_;
  bool unital_;
  std::array<double, 27> c_;
};

/// ||C1 C2 - C2 C1||_F; zero exactly when the algebra is associative.
inline double assoc_residual(const MatrixPair& pair) {
  if (pair.C1.rows() != pair.C2.rows() || pair.C1.cols() != pair.C2.cols() || pair.C1.rows() != pair.C1.cols()) {
    throw InvalidInput("assoc_residual: dimension mismatch between C1 and C2");
  }
  return frobenius(commutator(pair.C1, pair.C2));
}

inline StructTensor tensor_from_pair(const MatrixPair& pair, bool unital) {
  pair.validate();
  if (unital != (pair.n == 3)) {
    throw InvalidInput("only 3x3 unital and 2x2 non-unital pairs map onto a structure tensor");
  }
  StructTensor t(pair.n, unital);
  const int first = unital ? 1 : 0;
  const Mat* mats[2] = {&pair.C1, &pair.C2};
  for (int a = 0; a < 2; ++a) {
    const int j = first + a;
    for (int k = 0; k < pair.n; ++k)
      for (int l = 0; l < pair.n; ++l) t.set_symmetric(j, k, l, (*mats[a])(l, k));
  }
  return t;
}

inline MatrixPair pair_from_tensor(const StructTensor& t) {
  t.validate();
  const bool three = t.dim() == 3 && t.unital();
  const bool two = t.dim() == 2 && !t.unital();
  if (!three && !two) throw InvalidInput("only dim-3 unital and dim-2 non-unital tensors have a matrix-pair form");
  const int first = t.unital() ? 1 : 0;
  MatrixPair p;
  p.n = t.dim();
  p.C1 = t.matrix(first);
  p.C2 = t.matrix(first + 1);
  return p;
}

/// Componentwise associativity defect
///   sum_m C_jk^m C_ml^n - sum_m C_kl^m C_jm^n
/// maximised over all (j,k,l,n).
inline double associativity_defect(const StructTensor& t) {
  const int d = t.dim();
  double worst = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int n = 0; n < d; ++n) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += t(j, k, m) * t(m, l, n) - t(k, l, m) * t(j, m, n);
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

}  // namespace dcs
