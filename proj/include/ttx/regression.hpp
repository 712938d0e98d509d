#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttx/error.hpp"
#include "ttx/survey.hpp"

namespace ttx {

inline constexpr std::size_t kModelPredictors = 13;  // X1..X13

/// Linear model y = intercept + sum_k coefficients[k] * x_k with fit
/// statistics. For a fitted model `reported` is false; the published
/// evaluation model carries its statistics as metadata only.
struct RegressionModel {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  double intercept = 0.0;
  double rSquared = 0.0;
  double adjustedRSquared = 0.0;
  double residualStdDev = 0.0;
  double multipleCorrelation = 0.0;
  int n = 0;
  int p = 0;
  bool reported = false;
};

inline std::vector<std::string> predictor_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= p; ++k) names.push_back("X" + std::to_string(k));
  return names;
}

/// Satisfaction model over X1..X13 from the two maritime exercises
/// (36 respondents). The raw data are unpublished, so the fit statistics
/// are stored as reported.
inline RegressionModel paper_model() {
  RegressionModel m;
  m.names = predictor_names(kModelPredictors);
  m.coefficients = {-0.0252, 0.8471, -0.7636, -0.0959, 0.1139, 0.2345, 0.4938,
                    0.1171,  0.0975, -0.0491, 0.0090,  0.1979, -0.0631};
  m.intercept = -0.5722;
  m.rSquared = 0.8743;
  m.adjustedRSquared = 0.80;
  m.residualStdDev = 0.26;
  m.multipleCorrelation = 0.935;
  m.n = 36;
  m.p = static_cast<int>(kModelPredictors);
  m.reported = true;
  return m;
}

/// Raw linear prediction, no clamping.
inline double predict(const RegressionModel& model, std::span<const double> x) {
  if (x.size() != model.coefficients.size()) {
    fail(ErrorCode::InvalidArgument, "predictor vector has dimension " + std::to_string(x.size()) + ", model expects " +
                                         std::to_string(model.coefficients.size()));
  }
  double y = model.intercept;
  for (std::size_t k = 0; k < x.size(); ++k) y += model.coefficients[k] * x[k];
  return y;
}

/// Prediction clamped to the 0-5 response scale, for display.
inline double predict_clamped(const RegressionModel& model, std::span<const double> x) {
  return std::clamp(predict(model, x), 0.0, 5.0);
}

/// Ordinary least squares with intercept via Householder QR of [1 | X].
///
/// Columns are factored in order without pivoting, so a column that is a
/// linear combination of earlier ones shows up as a vanishing diagonal entry
/// of R and is reported by name.
inline RegressionModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names = {}) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (names.empty()) names = predictor_names(static_cast<std::size_t>(p));
  if (static_cast<Eigen::Index>(names.size()) != p) fail(ErrorCode::InvalidArgument, "one name per predictor required");
  if (y.size() != n) fail(ErrorCode::InvalidArgument, "response length does not match design rows");
  if (n < p + 2) {
    fail(ErrorCode::InvalidArgument, "insufficient sample size: n=" + std::to_string(n) + ", need at least " +
                                         std::to_string(p + 2) + " for " + std::to_string(p) + " predictors");
  }
  if (!X.allFinite() || !y.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite values in regression data");

  Eigen::MatrixXd A(n, p + 1);
  A.col(0).setOnes();
  A.rightCols(p) = X;

  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  if (!(sst > 0.0)) fail(ErrorCode::InvalidArgument, "constant response: total sum of squares is zero, R^2 undefined");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  for (Eigen::Index k = 0; k <= p; ++k) {
    const double col_norm = A.col(k).norm();
    if (col_norm == 0.0 || std::abs(packed(k, k)) <= 1e-10 * col_norm) {
      fail(ErrorCode::InvalidArgument,
           "rank-deficient design: column " + (k == 0 ? std::string("intercept") : names[static_cast<std::size_t>(k - 1)]) +
               " is linearly dependent on earlier columns");
    }
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const double ssr = (y - A * beta).squaredNorm();

  RegressionModel m;
  m.names = std::move(names);
  m.intercept = beta(0);
  m.coefficients.assign(beta.data() + 1, beta.data() + beta.size());
  m.n = static_cast<int>(n);
  m.p = static_cast<int>(p);
  const double dof = static_cast<double>(n - p - 1);
  m.rSquared = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
  m.adjustedRSquared = 1.0 - (1.0 - m.rSquared) * static_cast<double>(n - 1) / dof;
  m.residualStdDev = std::sqrt(ssr / dof);
  m.multipleCorrelation = std::sqrt(m.rSquared);
  return m;
}

/// Sum of squared residuals of `model` on (X, y).
inline double sum_squared_residuals(const RegressionModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  double ssr = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> row(X.cols());
    for (Eigen::Index k = 0; k < X.cols(); ++k) row[static_cast<std::size_t>(k)] = X(i, k);
    const double r = y(i) - predict(model, row);
    ssr += r * r;
  }
  return ssr;
}

inline Eigen::MatrixXd survey_design(const std::vector<SurveyResponse>& rows) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kModelPredictors));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < kModelPredictors; ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i].x[k];
  }
  return X;
}

inline Eigen::VectorXd survey_response(const std::vector<SurveyResponse>& rows) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = rows[i].y;
  return y;
}

/// Regresses Y on X1..X13. X14..X18 (the model-accuracy survey) do not enter.
inline RegressionModel fit_ols(const std::vector<SurveyResponse>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto errs = validate_response(rows[i], "row " + std::to_string(i + 1));
    if (!errs.empty()) fail(ErrorCode::InvalidArgument, errs.front());
  }
  return fit_ols(survey_design(rows), survey_response(rows));
}

}  // namespace ttx
