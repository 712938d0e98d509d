#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttx/analytics.hpp"
#include "ttx/regression.hpp"
#include "ttx/session.hpp"
#include "ttx/survey.hpp"

namespace ttx {

struct AnalysisSections {
  bool descriptive = true;
  bool fit = true;
  bool paperModel = true;
  bool scenarios = true;
};

inline json model_json(const RegressionModel& m) {
  json coef = json::object();
  for (std::size_t k = 0; k < m.coefficients.size(); ++k) coef[m.names[k]] = round_to(m.coefficients[k], 4);
  return json{{"intercept", round_to(m.intercept, 4)},
              {"coefficients", std::move(coef)},
              {"rSquared", round_to(m.rSquared, 4)},
              {"adjustedRSquared", round_to(m.adjustedRSquared, 4)},
              {"residualStdDev", round_to(m.residualStdDev, 4)},
              {"multipleCorrelation", round_to(m.multipleCorrelation, 4)},
              {"n", m.n},
              {"p", m.p},
              {"reported", m.reported}};
}

/// Structured analysis of a survey table; `rows` may be empty when only the
/// published model or the prospective scenarios are requested.
inline json analyze_survey(const std::vector<SurveyResponse>& rows, const AnalysisSections& want) {
  json out = json::object();
  out["n"] = rows.size();
  if (want.descriptive && !rows.empty()) {
    auto agg = survey_aggregates(rows);
    out["descriptive"] = {{"proportions", agg["proportions"]}, {"means", agg["means"]}, {"composites", agg["composites"]}};
  }
  if (want.fit) {
    try {
      out["fit"] = model_json(fit_ols(rows));
    } catch (const Error& e) {
      out["fit"] = {{"error", e.what()}};
    }
  }
  const auto pm = paper_model();
  if (want.paperModel) {
    json pmj = model_json(pm);
    pmj["note"] =
        "statistics as reported for the unpublished 36-response dataset; multipleCorrelation stores the reported "
        "correlation 0.935 as sqrt(R^2)";
    if (!rows.empty()) {
      Eigen::MatrixXd X = survey_design(rows);
      Eigen::VectorXd y = survey_response(rows);
      const double ssr = sum_squared_residuals(pm, X, y);
      const double sst = (y.array() - y.mean()).square().sum();
      pmj["onThisSurvey"] = {{"ssr", round_to(ssr, 4)},
                             {"rSquared", sst > 0.0 ? json(round_to(1.0 - ssr / sst, 4)) : json(nullptr)},
                             {"rmse", round_to(std::sqrt(ssr / static_cast<double>(rows.size())), 4)}};
    }
    out["paperModel"] = std::move(pmj);
  }
  if (want.scenarios) {
    json table = json::array();
    for (const auto& s : prospective_scenarios()) {
      table.push_back({{"name", s.name},
                       {"x", s.x},
                       {"referenceY", s.referenceY},
                       {"predictedY", round_to(predict(pm, s.x), 4)}});
    }
    json sj{{"table", std::move(table)}};
    if (!rows.empty()) {
      PredictorVector mean{};
      std::map<std::string, int> counts{{"Pessimistic", 0}, {"TrendBased", 0}, {"Optimistic", 0}};
      for (const auto& r : rows) {
        PredictorVector x;
        std::copy_n(r.x.begin(), kModelPredictors, x.begin());
        counts[classify_scenario(x).name] += 1;
        for (std::size_t k = 0; k < kModelPredictors; ++k) mean[k] += x[k] / static_cast<double>(rows.size());
      }
      auto match = classify_scenario(mean);
      sj["surveyMean"] = {{"x", mean},
                          {"nearest", match.name},
                          {"distance", round_to(match.distance, 4)},
                          {"predictedY", round_to(predict(pm, mean), 4)}};
      sj["rowCounts"] = counts;
    }
    out["scenarios"] = std::move(sj);
  }
  return out;
}

}  // namespace ttx
