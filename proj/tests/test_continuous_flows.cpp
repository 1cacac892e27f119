#include <gtest/gtest.h>

#include "deform_cs/continuous_flows.hpp"
#include "oracles.hpp"

using namespace dcs;

namespace {

Entries random_entries(oracle::Rng& rng, int n, double scale = 1.0) {
  Entries e;
  e.n = n;
  for (char c : e.names()) e[c] = rng.uniform(-scale, scale);
  return e;
}

/// [C2, C1] with plain loops, read back on the C2 entries.
Entries l2a_oracle(const Entries& e) {
  const MatrixPair p = MatrixPair::from_entries(e);
  const int n = e.n;
  double comm[3][3] = {};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) comm[i][j] += p.C2(i, k) * p.C1(k, j) - p.C1(i, k) * p.C2(k, j);
  Entries d;
  d.n = n;
  if (n == 2) {
    d.E = comm[0][0]; d.M = comm[0][1]; d.G = comm[1][0]; d.N = comm[1][1];
  } else {
    d.D = comm[0][1]; d.E = comm[1][1]; d.G = comm[2][1];
    d.L = comm[0][2]; d.M = comm[1][2]; d.N = comm[2][2];
  }
  return d;
}

/// adj(C1) [C1, C2], the L3 system in y.
Entries l3_oracle(const Entries& e) {
  const double c1[2][2] = {{e.B, e.E}, {e.C, e.G}}, c2[2][2] = {{e.E, e.M}, {e.G, e.N}};
  const double adj[2][2] = {{e.G, -e.E}, {-e.C, e.B}};
  double comm[2][2] = {}, out[2][2] = {};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) comm[i][j] += c1[i][k] * c2[k][j] - c2[i][k] * c1[k][j];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out[i][j] += adj[i][k] * comm[k][j];
  Entries d;
  d.B = out[0][0]; d.E = out[0][1]; d.C = out[1][0]; d.G = out[1][1];
  return d;
}

double max_rel_drift(const std::vector<NamedValues>& series, const std::string& name) {
  const double v0 = series.front().at(name);
  double worst = 0.0;
  for (const auto& nv : series) worst = std::max(worst, std::abs(nv.at(name) - v0) / std::max(1.0, std::abs(v0)));
  return worst;
}

}  // namespace

TEST(VectorField, L2aMatchesCommutatorLoops) {
  oracle::Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial % 2 ? 3 : 2;
    const Entries e = random_entries(rng, n);
    const FlowSystem sys = n == 3 ? FlowSystem::L2a_3x3 : FlowSystem::L2a_2x2;
    const Entries d = vector_field(sys, FlowState{0.0, e});
    const Entries o = l2a_oracle(e);
    const Entries t = oracle::l2a_rhs(e);
    for (char c : evolved_names(sys)) {
      ASSERT_NEAR(d[c], o[c], 1e-14) << c;
      ASSERT_NEAR(d[c], t[c], 1e-14) << c;
    }
  }
}

TEST(VectorField, L3FormsAgreeWithAdjugateCommutator) {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Entries e = random_entries(rng, 2);
    e.B = rng.uniform(0.5, 2.0);
    const Entries det_free = l3_oracle(e);
    const Entries d = vector_field(FlowSystem::L3_detnorm, FlowState{0.0, e});
    for (char c : evolved_names(FlowSystem::L3_detnorm)) ASSERT_NEAR(d[c], det_free[c], 1e-13) << c;

    e.G = (1.0 + e.C * e.E) / e.B;  // det C1 = 1
    const Entries o = l3_oracle(e);
    const Entries u = vector_field(FlowSystem::L3_unimodular, FlowState{0.0, e});
    for (char c : evolved_names(FlowSystem::L3_unimodular)) ASSERT_NEAR(u[c], o[c], 1e-12) << c;

    e.M = e.N = 0.0;
    const Entries os = l3_oracle(e);
    const Entries s = vector_field(FlowSystem::L3_simple, FlowState{0.0, e});
    for (char c : evolved_names(FlowSystem::L3_simple)) ASSERT_NEAR(s[c], os[c], 1e-12) << c;
  }
}

TEST(FlowState, ValidationNamesTheProblem) {
  Entries e;
  e.n = 2;
  e.B = 1.0;
  e.G = 2.0;
  EXPECT_THROW(validate_flow_state(FlowSystem::L2a_3x3, {0, e}), InvalidInput);
  EXPECT_THROW(validate_flow_state(FlowSystem::L3_unimodular, {0, e}), InvalidInput);
  e.M = 1.0;
  EXPECT_THROW(validate_flow_state(FlowSystem::L3_simple, {0, e}), InvalidInput);
  Entries z;
  z.n = 2;
  EXPECT_THROW(validate_flow_state(FlowSystem::L3_detnorm, {0, z}), SingularFlow);
  e.E = std::nan("");
  EXPECT_THROW(validate_flow_state(FlowSystem::L2a_2x2, {0, e}), InvalidInput);
  EXPECT_THROW(parse_flow_system("L7"), InvalidInput);
}

TEST(Integrate, FirstIntegralsAndSpectrumConservedOnL2a) {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = trial % 2 ? 3 : 2;
    const FlowSystem sys = n == 3 ? FlowSystem::L2a_3x3 : FlowSystem::L2a_2x2;
    const Entries e = random_entries(rng, n, 0.5);
    const Trajectory t = integrate(sys, FlowState{0.0, e}, 0.0, 1.0, 1e-3);
    ASSERT_FALSE(t.truncated) << t.diagnostic;
    ASSERT_EQ(t.size(), 1001u);
    for (const auto& [name, v] : t.integrals.front()) EXPECT_LT(max_rel_drift(t.integrals, name), 1e-8) << name;
    for (std::size_t i = 0; i < t.size(); i += 100) {
      for (std::size_t k = 0; k < t.spectra[i].size(); ++k) {
        EXPECT_LT(std::abs(t.spectra[i][k] - t.spectra[0][k]) / std::max(1.0, std::abs(t.spectra[0][k])), 1e-8);
      }
    }
    // free entries stay put
    for (char c : free_names(sys)) EXPECT_EQ(t.states.back().entries[c], e[c]);
  }
}

TEST(Integrate, L3DetIsAFirstIntegral) {
  oracle::Rng rng(4);
  Entries e = random_entries(rng, 2, 0.5);
  e.B = 1.5;
  e.G = 1.0;
  const Trajectory t = integrate(FlowSystem::L3_detnorm, FlowState{0.0, e}, 0.0, 1.0, 1e-3);
  ASSERT_FALSE(t.truncated);
  for (const char* name : {"I1", "I2", "det"}) EXPECT_LT(max_rel_drift(t.integrals, name), 1e-8) << name;
}

TEST(Integrate, FourthOrderConvergence) {
  oracle::Rng rng(5);
  const Entries e = random_entries(rng, 2, 0.8);
  const FlowState s0{0.0, e};
  const Entries ref = integrate(FlowSystem::L2a_2x2, s0, 0.0, 1.0, 1e-4).states.back().entries;
  auto err = [&](double h) {
    const Entries end = integrate(FlowSystem::L2a_2x2, s0, 0.0, 1.0, h).states.back().entries;
    double m = 0.0;
    for (char c : evolved_names(FlowSystem::L2a_2x2)) m = std::max(m, std::abs(end[c] - ref[c]));
    return m;
  };
  const double ratio = err(0.05) / err(0.025);
  EXPECT_GT(ratio, 13.0);
  EXPECT_LT(ratio, 19.0);
}

TEST(Integrate, BlowUpIsTruncatedWithDiagnostic) {
  // B = C = 0 and E = N = 0 reduce the G equation to G' = -G^2
  Entries e;
  e.n = 2;
  e.G = -1.0;
  const Trajectory t = integrate(FlowSystem::L2a_2x2, FlowState{0.0, e}, 0.0, 2.0, 1e-3);
  EXPECT_TRUE(t.truncated);
  EXPECT_NE(t.diagnostic.find("overflow"), std::string::npos);
  EXPECT_LT(t.states.back().s, 1.1);
}

TEST(Integrate, RejectsBadSpans) {
  Entries e;
  e.n = 2;
  EXPECT_THROW(integrate(FlowSystem::L2a_2x2, {0, e}, 0.0, 1.0, 0.0), InvalidInput);
  EXPECT_THROW(integrate(FlowSystem::L2a_2x2, {0, e}, 1.0, 1.0, 0.1), InvalidInput);
}

TEST(Integrate, Deterministic) {
  oracle::Rng rng(6);
  const Entries e = random_entries(rng, 3);
  const Trajectory a = integrate(FlowSystem::L2a_3x3, {0, e}, 0.0, 0.5, 1e-3);
  const Trajectory b = integrate(FlowSystem::L2a_3x3, {0, e}, 0.0, 0.5, 1e-3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.states[i].entries, b.states[i].entries);
}

TEST(SampledTrajectory, CentralSystemResidualIsSmall) {
  oracle::Rng rng(7);
  const Entries e = random_entries(rng, 3, 0.5);
  const double coarse = cs_residual_max(lookup(DdaId::L2a), sampled_field(integrate(FlowSystem::L2a_3x3, {0, e}, 0.0, 1.0, 2e-3)));
  const double fine = cs_residual_max(lookup(DdaId::L2a), sampled_field(integrate(FlowSystem::L2a_3x3, {0, e}, 0.0, 1.0, 1e-3)));
  EXPECT_NEAR(coarse / fine, 4.0, 0.1);
  const Trajectory t = integrate(FlowSystem::L2a_3x3, {0, e}, 0.0, 1.0, 1e-4);
  EXPECT_LT(cs_residual_max(lookup(DdaId::L2a), sampled_field(t)), 1e-5);

  Entries f = random_entries(rng, 2, 0.5);
  f.B = -1.2;
  f.G = 0.9;  // det C1 < 0, grid is reversed
  const Trajectory u = integrate(FlowSystem::L3_detnorm, {0, f}, 0.0, 0.5, 1e-3);
  const SampledField sf = sampled_field(u);
  EXPECT_LT(sf.grid.front(), sf.grid.back());
  EXPECT_LT(cs_residual_max(lookup(DdaId::L3), sf), 1e-5);
}

TEST(Spectrum, ClosedFormMatchesEigenSolver) {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Mat m(2, 2);
    m << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2);
    const Spectrum a = eigenvalues_2x2(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
    Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), false);
    Spectrum b{es.eigenvalues()(0), es.eigenvalues()(1)};
    sort_spectrum(b);
    for (int k = 0; k < 2; ++k) EXPECT_LT(std::abs(a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]), 1e-12);
  }
  // rotation generator: +-i
  const Spectrum r = eigenvalues_2x2(0, -1, 1, 0);
  EXPECT_DOUBLE_EQ(r[0].imag(), -1.0);
  EXPECT_DOUBLE_EQ(r[1].imag(), 1.0);
}
