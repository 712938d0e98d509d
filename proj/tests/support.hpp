// Shared fixtures and independent oracles for the unit and acceptance tests.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ttx/scenario.hpp"
#include "ttx/survey.hpp"
#include "ttx/topology.hpp"

namespace ttx::test {

inline std::string bundled_scenario_path() { return std::string(TTX_DEFAULT_SCENARIO_DIR) + "/maersk-5ev.json"; }

inline Scenario bundled_scenario() { return load_scenario_file(bundled_scenario_path()); }

inline Topology two_node_graph() {
  return build_topology({{"n1", "node 1", NodeKind::IT, 1.0}, {"n2", "node 2", NodeKind::IT, 1.0}}, {{"n1", "n2", 1.0}});
}

// Parameters of the two-node outbreak used by the master-equation check.
inline PropagationParams two_node_params() {
  PropagationParams p{};
  p.beta = 0.4;
  p.sigma = 0.5;
  p.upsilon = 0.2;
  p.rho = 0.1;
  return p;
}

/// Exact joint distribution of a two-node continuous-time Markov chain over
/// the 36 label pairs, integrated with a fine-step explicit RK4 scheme. Rates
/// are written out from scratch here (not shared with the library).
class TwoNodeMasterEquation {
 public:
  // Labels: 0 S, 1 E, 2 R, 3 D, 4 U, 5 X
  TwoNodeMasterEquation(const PropagationParams& p, double contact) : p_(p), c_(contact) {
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        add_moves(a, b, a, b, 0);
        add_moves(b, a, a, b, 1);
      }
    }
  }

  // Joint probability after `t` hours from the pure state (a0, b0).
  std::array<double, 36> solve(int a0, int b0, double t, double h) const {
    std::array<double, 36> prob{};
    prob[static_cast<std::size_t>(a0 * 6 + b0)] = 1.0;
    const int steps = static_cast<int>(std::llround(t / h));
    for (int k = 0; k < steps; ++k) {
      auto k1 = rhs(prob);
      auto k2 = rhs(axpy(prob, k1, h / 2));
      auto k3 = rhs(axpy(prob, k2, h / 2));
      auto k4 = rhs(axpy(prob, k3, h));
      for (std::size_t i = 0; i < 36; ++i) prob[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return prob;
  }

  // Marginal distribution of one node (0 or 1) from the joint one.
  static std::array<double, 6> marginal(const std::array<double, 36>& joint, int node) {
    std::array<double, 6> m{};
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) m[static_cast<std::size_t>(node == 0 ? a : b)] += joint[static_cast<std::size_t>(a * 6 + b)];
    }
    return m;
  }

 private:
  struct Move {
    int from, to;
    double rate;
  };

  // Moves of the node holding `self` while the other node holds `other`;
  // (a, b) is the joint state and `which` says which coordinate moves.
  void add_moves(int self, int other, int a, int b, int which) {
    const double infectious = (other == 1 ? p_.kappaE : 0.0) + (other == 3 ? 1.0 : 0.0);
    auto go = [&](int next, double rate) {
      if (rate <= 0.0) return;
      const int na = which == 0 ? next : a;
      const int nb = which == 0 ? b : next;
      moves_.push_back({a * 6 + b, na * 6 + nb, rate});
    };
    switch (self) {
      case 0: go(1, p_.beta * c_ * infectious); go(2, p_.eta); break;
      case 1: go(3, p_.sigma); go(2, p_.alpha); break;
      case 2: go(0, p_.omega); break;
      case 3: go(4, p_.upsilon); go(2, p_.rho); break;
      case 4: go(5, p_.xi); go(2, p_.gamma); break;
      case 5: go(0, p_.nu); break;
      default: break;
    }
  }

  std::array<double, 36> rhs(const std::array<double, 36>& prob) const {
    std::array<double, 36> d{};
    for (const auto& m : moves_) {
      const double flow = m.rate * prob[static_cast<std::size_t>(m.from)];
      d[static_cast<std::size_t>(m.from)] -= flow;
      d[static_cast<std::size_t>(m.to)] += flow;
    }
    return d;
  }

  static std::array<double, 36> axpy(const std::array<double, 36>& x, const std::array<double, 36>& k, double h) {
    std::array<double, 36> y{};
    for (std::size_t i = 0; i < 36; ++i) y[i] = x[i] + h * k[i];
    return y;
  }

  PropagationParams p_;
  double c_;
  std::vector<Move> moves_;
};

// Published model coefficients written out independently of the library.
inline constexpr std::array<double, 13> kPublishedCoef = {-0.0252, 0.8471, -0.7636, -0.0959, 0.1139, 0.2345, 0.4938,
                                                0.1171,  0.0975, -0.0491, 0.0090,  0.1979, -0.0631};
inline constexpr double kPublishedIntercept = -0.5722;

inline SurveyResponse make_row(double y, const std::array<double, 18>& x, std::string comment = "") {
  SurveyResponse r;
  r.y = y;
  r.x = x;
  r.comment = std::move(comment);
  return r;
}

// Random in-range survey row: X1..X4 binary, X5..X18 on the 0..5 scale in
// steps of 0.5 (Likert-like but not integer-only).
inline SurveyResponse random_row(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> bit(0, 1), half(0, 10);
  std::array<double, 18> x{};
  for (std::size_t k = 0; k < 4; ++k) x[k] = bit(rng);
  for (std::size_t k = 4; k < 18; ++k) x[k] = half(rng) / 2.0;
  return make_row(half(rng) / 2.0, x, "");
}

}  // namespace ttx::test
