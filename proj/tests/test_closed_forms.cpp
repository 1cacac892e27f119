#include <gtest/gtest.h>

#include "deform_cs/closed_forms.hpp"
#include "oracles.hpp"

using namespace dcs;

namespace {

NamedValues params(std::initializer_list<std::pair<const char*, double>> kv) {
  NamedValues p;
  for (const auto& [k, v] : kv) p.set(k, v);
  return p;
}

FamilySpec random_family(oracle::Rng& rng, FamilyId id) {
  const double al = rng.uniform(-2, 2), be = rng.uniform(0.5, 2) * rng.sign(), ga = rng.uniform(-2, 2);
  switch (id) {
    case FamilyId::Nilpotent3x3:
      return make_family(id, params({{"alpha", al}, {"beta", be}, {"gamma", ga}, {"delta", rng.uniform(-2, 2)}, {"mu", rng.uniform(-2, 2)}}));
    case FamilyId::Nilpotent2x2: return make_family(id, params({{"alpha", al}, {"beta", be}, {"gamma", ga}}));
    case FamilyId::UpperTri2x2: return make_family(id, params({{"alpha", al}, {"beta", be}, {"gamma", ga}, {"delta", rng.uniform(-2, 2)}}));
    default: {
      // solve beta gamma - alpha delta = 1 for delta
      const double a = rng.uniform(0.5, 2) * rng.sign();
      return make_family(id, params({{"alpha", a}, {"beta", be}, {"gamma", ga}, {"delta", (be * ga - 1.0) / a}}));
    }
  }
}

/// x d/dx of the logarithmic and rational families, differentiated by hand.
Entries hand_derivative(const FamilySpec& f, double x) {
  const NamedValues& p = f.params;
  Entries d;
  const double l = std::log(x);
  switch (f.id) {
    case FamilyId::Nilpotent3x3: {
      const double be = p.at("beta"), ga = p.at("gamma"), de = p.at("delta"), mu = p.at("mu");
      d.n = 3;
      d.D = -be / (l * l);
      d.E = -ga / (l * l);
      d.G = -1.0 / (l * l);
      d.L = de + be * ga / (l * l);
      d.M = mu - 2.0 * de * l + ga * ga / (l * l);
      d.N = ga / (l * l);
      break;
    }
    case FamilyId::Nilpotent2x2: {
      const double be = p.at("beta"), ga = p.at("gamma");
      d.E = -be / (l * l);
      d.G = -1.0 / (l * l);
      d.M = ga + be * be / (l * l);
      d.N = be / (l * l);
      break;
    }
    case FamilyId::UpperTri2x2: {
      const double al = p.at("alpha"), be = p.at("beta"), ga = p.at("gamma"), de = p.at("delta");
      const double q = x + be, k = al * ga + be * de - ga * ga / be;
      d.E = -x * ga / (q * q);
      d.G = x * be / (q * q);
      d.M = -k / x - x * ga * ga / (be * q * q);
      d.N = x * ga / (q * q);
      break;
    }
    default: ADD_FAILURE() << "no hand derivative";
  }
  return d;
}

GaugePotentials random_cubics(oracle::Rng& rng) {
  GaugePotentials phi;
  for (auto& p : phi) p.coeffs = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return phi;
}

oracle::Square<3> to_square(const Mat& m) {
  oracle::Square<3> s{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return s;
}

}  // namespace

TEST(EvalFamily, Nilpotent2x2AtE) {
  const FamilySpec f = make_family(FamilyId::Nilpotent2x2, params({{"alpha", 0}, {"beta", 1}, {"gamma", 0}}));
  const Entries e = eval_family_entries(f, std::exp(1.0));
  EXPECT_NEAR(e.E, 1.0, 1e-15);
  EXPECT_NEAR(e.G, 1.0, 1e-15);
  EXPECT_NEAR(e.M, -1.0, 1e-15);
  EXPECT_NEAR(e.N, -1.0, 1e-15);
  EXPECT_EQ(e.B, 0.0);
  EXPECT_EQ(e.C, 0.0);
}

TEST(EvalFamily, UpperTriangularAtOne) {
  const FamilySpec f = make_family(FamilyId::UpperTri2x2, params({{"alpha", 0}, {"beta", 1}, {"gamma", 1}, {"delta", 0}}));
  const Entries e = eval_family_entries(f, 1.0);
  EXPECT_EQ(e.B, 1.0);
  EXPECT_EQ(e.E, 0.5);
  EXPECT_EQ(e.G, 0.5);
  EXPECT_EQ(e.M, -0.5);
  EXPECT_EQ(e.N, -0.5);
}

TEST(EvalFamily, GaugeVandermondeAtZero) {
  FamilySpec f = make_family(FamilyId::GaugeL5, {}, {Polynomial{{1}}, Polynomial{{0, 1}}, Polynomial{{0, 0, 1}}});
  const Mat g = gauge_matrix(f.phi, 0.0);
  const double s[3] = {0, 1, -1};
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(g(m, k), std::pow(s[k], m));

  // g C_j = T_j g, checked with plain loops
  const auto c = gauge_matrices(f.phi, 0.0);
  const oracle::Square<3> gs = to_square(g);
  for (int j = 0; j < 3; ++j) {
    const oracle::Square<3> lhs = oracle::matmul(gs, to_square(c[static_cast<std::size_t>(j)]));
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(lhs[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)], std::pow(s[j] + s[k], m), 1e-14);
  }
  const MatrixPair p = eval_family(f, 0.0);
  EXPECT_NO_THROW(p.validate());
}

TEST(EvalFamily, ClosedFormsSatisfyTheirSystemsExactly) {
  oracle::Rng rng(11);
  for (FamilyId id : {FamilyId::Nilpotent3x3, FamilyId::Nilpotent2x2, FamilyId::UpperTri2x2}) {
    for (int trial = 0; trial < 50; ++trial) {
      const FamilySpec f = random_family(rng, id);
      const double x = rng.uniform(1.5, 20.0);
      const Entries e = eval_family_entries(f, x);
      const Entries rhs = oracle::l2a_rhs(e);
      const Entries d = hand_derivative(f, x);
      for (char c : evolved_names(family_flow_system(id))) {
        ASSERT_LT(oracle::rel_diff(d[c], rhs[c]), 1e-12) << to_string(id) << " " << c << " x=" << x;
      }
    }
  }
}

TEST(ValidateFamily, FiniteDifferenceFloorOnLogFamily) {
  const FamilySpec f = make_family(FamilyId::Nilpotent2x2, params({{"alpha", 0}, {"beta", 1}, {"gamma", 0}}));
  const std::vector<double> pts{2.0, std::exp(1.0), 10.0};
  const ResidualReport r = validate_family(f, pts, 1e-4);
  ASSERT_EQ(r.norms.size(), 3u);
  EXPECT_LT(r.max_norm(), 1e-6);
  EXPECT_EQ(r.labels.front(), "Nilpotent2x2@2");

  const double ratio = validate_family(f, pts, 1e-2).max_norm() / validate_family(f, pts, 5e-3).max_norm();
  EXPECT_NEAR(ratio, 4.0, 0.05);
}

TEST(ValidateFamily, RandomContinuousFamiliesConvergeQuadratically) {
  oracle::Rng rng(12);
  for (FamilyId id : {FamilyId::Nilpotent3x3, FamilyId::Nilpotent2x2, FamilyId::UpperTri2x2}) {
    for (int trial = 0; trial < 10; ++trial) {
      const FamilySpec f = random_family(rng, id);
      const std::vector<double> pts{3.0, 7.5};
      EXPECT_LT(validate_family(f, pts, 1e-4).max_norm(), 1e-6) << to_string(id);
      const double ratio = validate_family(f, pts, 1e-2).max_norm() / validate_family(f, pts, 5e-3).max_norm();
      EXPECT_NEAR(ratio, 4.0, 0.1) << to_string(id);
    }
  }
}

TEST(ValidateFamily, PolynomialL3IsExact) {
  oracle::Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const FamilySpec f = random_family(rng, FamilyId::PolyL3);
    EXPECT_LT(validate_family(f, {-1.0, 0.0, 2.0}).max_norm(), 1e-12);
  }
}

TEST(ValidateFamily, PrintedPolynomialFailsAwayFromUnitAlpha) {
  // beta gamma - alpha delta = 1 in both cases
  const FamilySpec unit = make_family(FamilyId::PolyL3Printed, params({{"alpha", 1}, {"beta", 2}, {"gamma", 1}, {"delta", 1}}));
  EXPECT_LT(validate_family(unit, {-1.0, 0.0, 2.0}).max_norm(), 1e-12);
  const FamilySpec other = make_family(FamilyId::PolyL3Printed, params({{"alpha", 2}, {"beta", 3}, {"gamma", 1}, {"delta", 1}}));
  // C' misses 2 (alpha - 1) y, which is 4 at y = 2
  EXPECT_NEAR(validate_family(other, {2.0}).max_norm(), 4.0, 1e-12);
  const FamilySpec fixed = make_family(FamilyId::PolyL3, params({{"alpha", 2}, {"beta", 3}, {"gamma", 1}, {"delta", 1}}));
  EXPECT_LT(validate_family(fixed, {2.0}).max_norm(), 1e-12);
}

TEST(ValidateFamily, GaugeResidualIsRoundOff) {
  oracle::Rng rng(14);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const FamilySpec f = make_family(FamilyId::GaugeL5, {}, random_cubics(rng));
    const double x = rng.uniform(-2, 2);
    try {
      const auto c = gauge_matrices(f.phi, x);
      const double scale = std::max(1.0, c[1].norm() * c[2].norm());
      EXPECT_LT(validate_family(f, {x}).max_norm() / scale, 1e-12);
      ++checked;
    } catch (const SingularGauge&) {
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(GaugeFamily, StructureConstantsAreSymmetric) {
  oracle::Rng rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const GaugePotentials phi = random_cubics(rng);
    const auto c = gauge_matrices(phi, rng.uniform(-2, 2));
    const double scale = std::max({1.0, c[1].norm(), c[2].norm()});
    // C_jk^n = C_kj^n: column k of C_j equals column j of C_k
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int n = 0; n < 3; ++n) EXPECT_LT(std::abs(c[static_cast<std::size_t>(j)](n, k) - c[static_cast<std::size_t>(k)](n, j)) / scale, 1e-12);
  }
}

TEST(GaugeFamily, RankDeficientPotentialsAreSingular) {
  const FamilySpec f = make_family(FamilyId::GaugeL5, {}, {Polynomial{{1}}, Polynomial{{0, 1}}, Polynomial{{0, 2}}});
  EXPECT_THROW(eval_family(f, 0.5), SingularGauge);
  EXPECT_THROW(validate_family(f, {0.5}), SingularGauge);
}

TEST(FamilyIntegrals, AgreeWithAlgebraicIntegralsAtEveryPoint) {
  oracle::Rng rng(16);
  for (FamilyId id : {FamilyId::Nilpotent3x3, FamilyId::Nilpotent2x2, FamilyId::UpperTri2x2, FamilyId::PolyL3}) {
    for (int trial = 0; trial < 100; ++trial) {
      const FamilySpec f = random_family(rng, id);
      const NamedValues claimed = family_integrals(f);
      const FlowSystem sys = family_flow_system(id);
      const double lo = id == FamilyId::PolyL3 ? -3.0 : 1.5;
      for (double x : {lo, lo + 1.0, lo + 4.5}) {
        const Entries e = eval_family_entries(f, x);
        const NamedValues got = first_integrals(sys, FlowState{0.0, e});
        // near a pole the integrals cancel large squares, so scale by them
        double size = 1.0;
        for (char c : e.names()) size = std::max(size, e[c] * e[c]);
        if (e.n == 3) size *= std::sqrt(size);
        for (const auto& [name, v] : claimed) ASSERT_LT(std::abs(got.at(name) - v) / size, 1e-12) << to_string(id) << " " << name;
      }
    }
  }
}

TEST(FamilyIntegrals, PrintedValues) {
  const FamilySpec n2 = make_family(FamilyId::Nilpotent2x2, params({{"alpha", 3}, {"beta", 1}, {"gamma", 2}}));
  EXPECT_EQ(family_integrals(n2).at("I1"), 3.0);
  EXPECT_EQ(family_integrals(n2).at("I2"), 2.0 + 4.5);
  const FamilySpec ut = make_family(FamilyId::UpperTri2x2, params({{"alpha", -1}, {"beta", 1}, {"gamma", 2}, {"delta", 5}}));
  EXPECT_EQ(family_integrals(ut).at("I1"), -1.0);
  EXPECT_EQ(family_integrals(ut).at("I2"), 5.5);
  const FamilySpec n3 = make_family(FamilyId::Nilpotent3x3, params({{"alpha", 1}, {"beta", 2}, {"gamma", 0}, {"delta", 0}, {"mu", 1}}));
  EXPECT_EQ(family_integrals(n3).at("I2"), 0.5 + 12.0 + 4.0 + 1.0);
}

TEST(FamilyIntegrals, GaugeProductIsIdentity) {
  oracle::Rng rng(17);
  const GaugePotentials phi = random_cubics(rng);
  const double x = 0.3;
  const Mat u = gauge_matrices(phi, x)[1] * gauge_matrices(phi, x + 1.0)[2];
  EXPECT_LT((u - Mat::Identity(3, 3)).norm(), 1e-10);
  const NamedValues i = family_integrals(make_family(FamilyId::GaugeL5, {}, phi));
  EXPECT_EQ(i.at("I1"), 3.0);
}

TEST(MakeFamily, RejectsBadParameters) {
  EXPECT_THROW(make_family(FamilyId::Nilpotent2x2, params({{"alpha", 0}, {"beta", 1}})), InvalidInput);
  EXPECT_THROW(make_family(FamilyId::Nilpotent2x2, params({{"alpha", 0}, {"beta", NAN}, {"gamma", 0}})), InvalidInput);
  EXPECT_THROW(make_family(FamilyId::UpperTri2x2, params({{"alpha", 0}, {"beta", 0}, {"gamma", 1}, {"delta", 0}})), InvalidInput);
  EXPECT_THROW(make_family(FamilyId::PolyL3, params({{"alpha", 1}, {"beta", 1}, {"gamma", 1}, {"delta", 1}})), InvalidInput);
  EXPECT_NO_THROW(make_family(FamilyId::PolyL3, params({{"alpha", 1}, {"beta", 1}, {"gamma", 1}, {"delta", 0}})));
  EXPECT_THROW(make_family(FamilyId::GaugeL5, {}, {Polynomial{{1}}, Polynomial{}, Polynomial{{1}}}), InvalidInput);
  EXPECT_THROW(parse_family("Nilpotent4x4"), InvalidInput);
  for (FamilyId id : kAllFamilies) EXPECT_EQ(parse_family(to_string(id)), id);
}

TEST(EvalFamily, DomainGuards) {
  const FamilySpec n2 = make_family(FamilyId::Nilpotent2x2, params({{"alpha", 0}, {"beta", 1}, {"gamma", 0}}));
  EXPECT_THROW(eval_family(n2, 1.0), InvalidInput);
  EXPECT_THROW(eval_family(n2, 1.0 + 1e-12), InvalidInput);
  EXPECT_THROW(eval_family(n2, 0.0), InvalidInput);
  EXPECT_THROW(eval_family(n2, -2.0), InvalidInput);
  EXPECT_NO_THROW(eval_family(n2, 1.0 + 1e-6));
  const FamilySpec ut = make_family(FamilyId::UpperTri2x2, params({{"alpha", 0}, {"beta", 2}, {"gamma", 1}, {"delta", 0}}));
  EXPECT_THROW(eval_family(ut, 0.0), InvalidInput);
  EXPECT_THROW(eval_family(ut, -2.0), InvalidInput);
  EXPECT_THROW(validate_family(ut, {}), InvalidInput);
  EXPECT_THROW(validate_family(ut, {3.0}, 0.0), InvalidInput);
  EXPECT_THROW(family_flow_system(FamilyId::GaugeL5), InvalidInput);
}
