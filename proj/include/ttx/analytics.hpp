#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ttx/error.hpp"
#include "ttx/regression.hpp"
#include "ttx/survey.hpp"

namespace ttx {

// ---------------------------------------------------------------------------
// Descriptive statistics

struct DescriptiveStats {
  std::size_t n = 0;
  std::array<double, kSurveyBinaryVars> proportions{};  // X1..X4
  double meanY = 0.0;
  std::array<double, kSurveyNumericVars> means{};  // X1..X18; X1..X4 equal the proportions
  double generalEvaluation = 0.0;   // mean of {X5, X6, X7, Y}
  double scenarioEvaluation = 0.0;  // mean of {X8..X13}
  double modelAccuracy = 0.0;       // mean of {X14..X18}
};

inline DescriptiveStats descriptive_stats(const std::vector<SurveyResponse>& rows) {
  if (rows.empty()) fail(ErrorCode::InvalidArgument, "descriptive statistics need at least one response");
  DescriptiveStats d;
  d.n = rows.size();
  const auto n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    d.meanY += r.y / n;
    for (std::size_t k = 0; k < kSurveyNumericVars; ++k) d.means[k] += r.x[k] / n;
  }
  for (std::size_t k = 0; k < kSurveyBinaryVars; ++k) d.proportions[k] = d.means[k];
  auto mean_of = [&](std::size_t first, std::size_t last) {
    double s = 0.0;
    for (std::size_t k = first; k <= last; ++k) s += d.means[k - 1];
    return s / static_cast<double>(last - first + 1);
  };
  d.generalEvaluation = (d.means[4] + d.means[5] + d.means[6] + d.meanY) / 4.0;
  d.scenarioEvaluation = mean_of(8, 13);
  d.modelAccuracy = mean_of(14, 18);
  return d;
}

/// Rounds half away from zero to `decimals` places.
inline double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

// ---------------------------------------------------------------------------
// Prospective scenarios

using PredictorVector = std::array<double, kModelPredictors>;

struct ProspectiveScenario {
  std::string name;
  PredictorVector x;
  double referenceY;
};

/// Reference exercise profiles, ordered from most pessimistic to most optimistic.
inline const std::array<ProspectiveScenario, 3>& prospective_scenarios() {
  static const std::array<ProspectiveScenario, 3> scenarios = {{
      {"Pessimistic", {1, 0, 0, 0, 3, 3, 3, 3, 3, 2, 1, 2, 1}, 2.8},
      {"TrendBased", {1, 0, 0, 1, 4, 4, 4, 4, 4, 4, 3, 3, 2}, 3.8},
      {"Optimistic", {1, 1, 1, 1, 5, 4, 5, 4, 5, 4, 4, 4, 3}, 4.8},
  }};
  return scenarios;
}

struct ScenarioMatch {
  std::string name;
  double distance = 0.0;
  std::array<double, 3> distances{};  // to each prospective scenario, same order
};

/// Nearest prospective scenario by Euclidean distance with each coordinate
/// divided by its range width (1 for X1..X4, 5 for X5..X13). Ties go to the
/// more pessimistic scenario.
inline ScenarioMatch classify_scenario(std::span<const double> x) {
  if (x.size() != kModelPredictors) {
    fail(ErrorCode::InvalidArgument, "predictor vector has dimension " + std::to_string(x.size()) + ", expected 13");
  }
  for (std::size_t k = 0; k < kModelPredictors; ++k) {
    const double hi = k < kSurveyBinaryVars ? 1.0 : 5.0;
    if (!(x[k] >= 0.0 && x[k] <= hi)) {
      fail(ErrorCode::InvalidArgument, "X" + std::to_string(k + 1) + " out of range [0," +
                                           std::to_string(static_cast<int>(hi)) + "]");
    }
  }
  ScenarioMatch best;
  best.distance = std::numeric_limits<double>::infinity();
  const auto& scenarios = prospective_scenarios();
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    double sum = 0.0;
    for (std::size_t k = 0; k < kModelPredictors; ++k) {
      const double width = k < kSurveyBinaryVars ? 1.0 : 5.0;
      const double d = (x[k] - scenarios[s].x[k]) / width;
      sum += d * d;
    }
    best.distances[s] = std::sqrt(sum);
    if (best.distances[s] < best.distance) {
      best.distance = best.distances[s];
      best.name = scenarios[s].name;
    }
  }
  return best;
}

}  // namespace ttx
