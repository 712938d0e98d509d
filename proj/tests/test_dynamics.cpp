#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "ttx/dynamics.hpp"
#include "ttx/simulate.hpp"

using namespace ttx;
using ttx::test::two_node_graph;

namespace {

double occupancy_sum(const Occupancy& o) {
  double s = 0.0;
  for (double v : o) s += v;
  return s;
}

// Random connected-ish topology with 2..8 nodes.
Topology random_topology(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = size(rng);
  std::vector<Node> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({"n" + std::to_string(i), "", NodeKind::IT, 0.5 + u(rng)});
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i + 1 || u(rng) < 0.3) edges.push_back({nodes[i].id, nodes[j].id, 0.2 + 2.0 * u(rng)});
    }
  }
  return build_topology(nodes, edges, u(rng) < 0.3);
}

PropagationParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r(0.0, 0.6), unit(0.0, 1.0);
  PropagationParams p;
  p.beta = r(rng);
  p.kappaE = unit(rng);
  p.sigma = r(rng);
  p.alpha = r(rng) / 4;
  p.upsilon = r(rng) / 2;
  p.rho = r(rng) / 2;
  p.xi = r(rng) / 4;
  p.gamma = r(rng) / 4;
  p.nu = r(rng) / 8;
  p.eta = r(rng) / 8;
  p.omega = r(rng) / 8;
  p.threatLevel = unit(rng);
  return p;
}

CompartmentState random_state(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Occupancy> occ(n);
  for (auto& o : occ) {
    double s = 0.0;
    for (auto& v : o) s += (v = u(rng) < 0.4 ? 0.0 : u(rng));
    if (s == 0.0) o[0] = s = 1.0;
    for (auto& v : o) v /= s;
  }
  return CompartmentState::mean_field(occ);
}

double global_mass(const CompartmentState& s, Compartment c) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) m += s.at(i)[index(c)];
  return m;
}

}  // namespace

TEST(ForceOfInfection, IsolatedNodeIsZero) {
  auto t = build_topology({{"a", "A"}, {"b", "B"}}, {});
  PropagationParams p{};
  p.beta = 5.0;
  p.kappaE = 1.0;
  auto s = CompartmentState::mean_field({indicator(Compartment::S), indicator(Compartment::D)});
  EXPECT_EQ(force_of_infection("a", s, p, t), 0.0);
}

TEST(ForceOfInfection, NeighbourFullyDegraded) {
  auto t = build_topology({{"a", "A"}, {"b", "B"}}, {{"a", "b", 1.0}});
  PropagationParams p{};
  p.beta = 0.3;
  auto s = CompartmentState::mean_field({indicator(Compartment::S), indicator(Compartment::D)});
  EXPECT_NEAR(force_of_infection("a", s, p, t), 0.3, 1e-15);
}

TEST(ForceOfInfection, NeighbourFullyExposed) {
  auto t = build_topology({{"a", "A"}, {"b", "B"}}, {{"a", "b", 2.0}});
  PropagationParams p{};
  p.beta = 0.3;
  p.kappaE = 0.5;
  auto s = CompartmentState::mean_field({indicator(Compartment::S), indicator(Compartment::E)});
  EXPECT_NEAR(force_of_infection("a", s, p, t), 0.3, 1e-15);
}

TEST(ForceOfInfection, AgentLabelsUseIndicators) {
  auto t = build_topology({{"a", "A"}, {"b", "B"}, {"c", "C"}}, {{"a", "b", 2.0}, {"a", "c", 1.0}});
  PropagationParams p{};
  p.beta = 0.3;
  p.kappaE = 0.5;
  auto s = CompartmentState::agent({Compartment::S, Compartment::E, Compartment::D});
  EXPECT_NEAR(force_of_infection("a", s, p, t), 0.3 * (2.0 * 0.5 + 1.0), 1e-15);
  EXPECT_THROW(force_of_infection("zz", s, p, t), Error);
}

TEST(ForceOfInfection, UAndXDoNotTransmit) {
  auto t = two_node_graph();
  PropagationParams p{};
  p.beta = 1.0;
  p.kappaE = 1.0;
  for (auto c : {Compartment::S, Compartment::R, Compartment::U, Compartment::X}) {
    auto s = CompartmentState::mean_field({indicator(Compartment::S), indicator(c)});
    EXPECT_EQ(force_of_infection("n1", s, p, t), 0.0);
  }
}

TEST(MeanField, ZeroRatesIdentity) {
  auto t = two_node_graph();
  auto s = CompartmentState::mean_field({{0.2, 0.3, 0.1, 0.1, 0.2, 0.1}, indicator(Compartment::D)});
  auto next = mean_field_step(s, PropagationParams{}, t, 0.5);
  EXPECT_EQ(next.occupancy, s.occupancy);
  EXPECT_DOUBLE_EQ(next.time, 0.5);
}

TEST(MeanField, SingleNodeExponentialDecay) {
  auto t = build_topology({{"a", "A"}}, {});
  PropagationParams p{};
  p.eta = 1.0;
  auto next = mean_field_step(CompartmentState::mean_field({indicator(Compartment::S)}), p, t, 0.1);
  EXPECT_NEAR(next.occupancy[0][index(Compartment::S)], std::exp(-0.1), 1e-6);
  EXPECT_NEAR(next.occupancy[0][index(Compartment::S)], 0.9048374, 1e-6);
  EXPECT_NEAR(next.occupancy[0][index(Compartment::R)], 1.0 - std::exp(-0.1), 1e-6);
}

TEST(MeanField, RejectsBadDt) {
  auto t = two_node_graph();
  auto s = CompartmentState::uniform(SimMode::MeanField, 2, Compartment::S);
  EXPECT_THROW(mean_field_step(s, {}, t, 0.0), Error);
  EXPECT_THROW(mean_field_step(s, {}, t, -1.0), Error);
}

TEST(MeanField, BlowUpIsANumericalError) {
  auto t = two_node_graph();
  PropagationParams p{};
  p.sigma = 1e6;
  auto s = CompartmentState::mean_field({indicator(Compartment::E), indicator(Compartment::S)});
  try {
    mean_field_step(s, p, t, 1.0);
    FAIL() << "expected a numerical error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Numerical);
  }
}

TEST(MeanField, PropertyConservationAndNonNegativity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto topo = random_topology(rng);
    auto p = random_params(rng);
    auto s = random_state(rng, topo.size());
    for (int k = 0; k < 100; ++k) {
      s = mean_field_step(s, p, topo, 0.05);
      for (const auto& o : s.occupancy) {
        ASSERT_NEAR(occupancy_sum(o), 1.0, 1e-9);
        for (double v : o) ASSERT_GE(v, 0.0);
      }
    }
  }
}

TEST(MeanField, DriftOverTenThousandStepsOnBundledScenario) {
  auto sc = ttx::test::bundled_scenario();
  auto p = sc.baseParams;
  p.beta *= 4;  // keep the outbreak moving for the whole run
  auto s = sc.initial_state();
  double worst_step = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = mean_field_step(s, p, sc.topology, 0.05);
    for (const auto& o : s.occupancy) worst_step = std::max(worst_step, std::abs(occupancy_sum(o) - 1.0));
  }
  EXPECT_LE(worst_step, 1e-9);
  for (const auto& o : s.occupancy) EXPECT_LE(std::abs(occupancy_sum(o) - 1.0), 1e-6);
}

TEST(MeanField, PropertyEpidemicMonotonicity) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto topo = random_topology(rng);
    auto p = random_params(rng);
    p.eta = p.omega = p.nu = 0.0;
    auto s = random_state(rng, topo.size());
    double prev = global_mass(s, Compartment::S);
    for (int k = 0; k < 200; ++k) {
      s = mean_field_step(s, p, topo, 0.05);
      double now = global_mass(s, Compartment::S);
      ASSERT_LE(now, prev + 1e-9);
      prev = now;
    }
  }
}

TEST(MeanField, PropertyAbsorbingDestruction) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    auto topo = random_topology(rng);
    auto p = random_params(rng);
    p.nu = 0.0;
    auto s = random_state(rng, topo.size());
    double prev = global_mass(s, Compartment::X);
    for (int k = 0; k < 200; ++k) {
      s = mean_field_step(s, p, topo, 0.05);
      double now = global_mass(s, Compartment::X);
      ASSERT_GE(now, prev - 1e-12);
      prev = now;
    }
  }
}

TEST(MeanField, PropertyDecouplingWithoutTransmission) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    auto topo = random_topology(rng);
    auto p = random_params(rng);
    p.beta = 0.0;
    auto s = random_state(rng, topo.size());
    std::vector<CompartmentState> alone;
    auto single = build_topology({{"solo", ""}}, {});
    for (std::size_t i = 0; i < topo.size(); ++i) alone.push_back(CompartmentState::mean_field({s.occupancy[i]}));
    for (int k = 0; k < 200; ++k) {
      s = mean_field_step(s, p, topo, 0.05);
      for (std::size_t i = 0; i < topo.size(); ++i) {
        alone[i] = mean_field_step(alone[i], p, single, 0.05);
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
          ASSERT_LE(std::abs(s.occupancy[i][c] - alone[i].occupancy[0][c]), 1e-9);
        }
      }
    }
  }
}

TEST(MeanField, FourthOrderConvergence) {
  auto topo = two_node_graph();
  PropagationParams p{};
  p.beta = 0.8;
  p.kappaE = 0.5;
  p.sigma = 0.6;
  p.alpha = 0.1;
  p.upsilon = 0.3;
  p.rho = 0.2;
  p.xi = 0.1;
  p.gamma = 0.1;
  p.nu = 0.05;
  p.eta = 0.05;
  p.omega = 0.05;
  auto start = CompartmentState::mean_field({{0.5, 0.5, 0, 0, 0, 0}, indicator(Compartment::S)});
  const double T = 6.0;
  auto integrate = [&](double dt) {
    auto s = start;
    const int n = static_cast<int>(std::llround(T / dt));
    for (int k = 0; k < n; ++k) s = mean_field_step(s, p, topo, dt);
    return s;
  };
  auto err = [&](const CompartmentState& a, const CompartmentState& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t c = 0; c < kCompartmentCount; ++c) e = std::max(e, std::abs(a.occupancy[i][c] - b.occupancy[i][c]));
    return e;
  };
  const double dt = 0.6;
  auto ref = integrate(dt / 16);
  const double e1 = err(integrate(dt), ref);
  const double e2 = err(integrate(dt / 2), ref);
  const double order = std::log2(e1 / e2);
  EXPECT_GE(order, 3.5) << "e(dt)=" << e1 << " e(dt/2)=" << e2;
}

TEST(Agent, ZeroRatesKeepLabels) {
  auto t = two_node_graph();
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    Rng rng(seed);
    auto s = CompartmentState::agent({Compartment::E, Compartment::S});
    for (int k = 0; k < 100; ++k) s = agent_step(s, PropagationParams{}, t, 0.5, rng);
    EXPECT_EQ(s.labels, (std::vector<Compartment>{Compartment::E, Compartment::S}));
  }
}

TEST(Agent, DeterministicForSeed) {
  auto sc = ttx::test::bundled_scenario();
  auto p = sc.baseParams;
  p.beta = 0.5;
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<Compartment>> seq;
    auto s = CompartmentState::uniform(SimMode::Agent, sc.topology.size(), Compartment::S);
    s.labels[1] = Compartment::D;
    for (int k = 0; k < 500; ++k) {
      s = agent_step(s, p, sc.topology, 0.05, rng);
      seq.push_back(s.labels);
    }
    return seq;
  };
  EXPECT_EQ(run(5), run(5));
  EXPECT_NE(run(5), run(6));
}

TEST(Agent, SingleTransitionFrequency) {
  auto t = build_topology({{"a", "A"}}, {});
  PropagationParams p{};
  p.eta = 1.0;
  const auto start = CompartmentState::agent({Compartment::S});
  Rng rng(2024);
  const int draws = 100000;
  int fired = 0;
  for (int k = 0; k < draws; ++k) {
    auto next = agent_step(start, p, t, 0.1, rng);
    if (next.labels[0] == Compartment::R) ++fired;
    else ASSERT_EQ(next.labels[0], Compartment::S);
  }
  const double q = 1.0 - std::exp(-0.1);
  const double sd = std::sqrt(q * (1 - q) / draws);
  EXPECT_NEAR(q, 0.09516, 1e-5);
  EXPECT_LE(std::abs(static_cast<double>(fired) / draws - q), 3 * sd);
}

TEST(Agent, CompetingWeightsNormalizedWhenSaturated) {
  PropagationParams p{};
  p.sigma = 1000.0;
  p.alpha = 1000.0;
  // Both weights are ~1, so each branch takes half the mass and nothing stays.
  EXPECT_EQ(sample_transition(Compartment::E, 0.0, p, 1.0, 0.25), Compartment::D);
  EXPECT_EQ(sample_transition(Compartment::E, 0.0, p, 1.0, 0.75), Compartment::R);
  EXPECT_EQ(sample_transition(Compartment::E, 0.0, p, 1.0, 0.999999), Compartment::R);
}

TEST(Agent, RemainderStays) {
  PropagationParams p{};
  p.omega = 1.0;
  const double w = 1.0 - std::exp(-0.1);
  EXPECT_EQ(sample_transition(Compartment::R, 0.0, p, 0.1, w * 0.999), Compartment::S);
  EXPECT_EQ(sample_transition(Compartment::R, 0.0, p, 0.1, w * 1.001), Compartment::R);
}

TEST(Agent, MasterEquationOracle) {
  auto topo = two_node_graph();
  auto p = ttx::test::two_node_params();
  ttx::test::TwoNodeMasterEquation me(p, 1.0);
  auto joint = me.solve(1, 0, 24.0, 1e-3);
  double total = 0.0;
  for (double v : joint) total += v;
  ASSERT_NEAR(total, 1.0, 1e-12);

  const int seeds = 10000;
  std::array<std::array<double, 6>, 2> freq{};
  SimulationOptions o;
  o.keepStates = true;
  o.sampleStride = 480;  // dt 0.05: samples at 0, 24 and 48 h
  auto start = CompartmentState::agent({Compartment::E, Compartment::S});
  for (int seed = 1; seed <= seeds; ++seed) {
    auto tr = simulate(topo, p, {}, 48.0, SimMode::Agent, static_cast<std::uint64_t>(seed), start, o);
    ASSERT_EQ(tr.rawStates.size(), 3u);
    ASSERT_DOUBLE_EQ(tr.rawStates[1].time, 24.0);
    for (std::size_t n = 0; n < 2; ++n) freq[n][index(tr.rawStates[1].labels[n])] += 1.0 / seeds;
  }
  // The oracle uses its own label order (S E R D U X): the same as the library's.
  for (int n = 0; n < 2; ++n) {
    auto m = ttx::test::TwoNodeMasterEquation::marginal(joint, n);
    for (std::size_t c = 0; c < 6; ++c) {
      const double sd = std::sqrt(m[c] * (1 - m[c]) / seeds);
      EXPECT_LE(std::abs(freq[n][c] - m[c]), std::max(3 * sd, 1e-12))
          << "node " << n << " compartment " << to_string(kAllCompartments[c]) << " exact " << m[c] << " sampled "
          << freq[n][c];
    }
  }
}
