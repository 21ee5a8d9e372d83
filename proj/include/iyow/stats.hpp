#pragma once

// Regression and inference: OLS with HC3 errors, nested F-tests,
// Benjamini-Hochberg, logistic regression and the theme tables built on them.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iyow/annotation.hpp"
#include "iyow/corpus.hpp"

namespace iyow {

// Columns kept after rank handling, in original order. A column is dropped
// when it lies in the span of the columns kept before it.
struct RankSelection {
  std::vector<std::size_t> retained;
  std::vector<std::size_t> dropped;
};

RankSelection independent_columns(const Eigen::MatrixXd& X, double tolerance = 1e-9);

struct OlsFit {
  std::vector<std::string> names;            // retained columns
  std::vector<std::string> dropped_columns;  // removed for rank deficiency
  std::vector<std::size_t> retained_index;   // positions in the input matrix
  Eigen::VectorXd beta;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverage;  // hat diagonal
  Eigen::MatrixXd hc3_cov;
  Eigen::VectorXd hc3_se;
  Eigen::VectorXd classical_se;
  double rss = 0.0;
  double tss = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;  // retained column count
  // Rows with leverage numerically 1, whose HC3 weight was capped.
  std::size_t hc3_capped_rows = 0;

  std::optional<std::size_t> index_of(const std::string& name) const;
};

// Names default to "x0", "x1", ... Throws NumericError when N <= P after
// rank handling or the outcome has zero total sum of squares.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names = {});
OlsFit ols(const DesignMatrix& X, const Eigen::VectorXd& y);

struct NestedFResult {
  double f_stat = 0.0;
  double p_value = 1.0;
  int df_num = 0;
  int df_den = 0;
  double rss_base = 0.0;
  double rss_full = 0.0;
  double adj_r2_base = 0.0;
  double adj_r2_full = 0.0;
  // adj_r2_full / adj_r2_base; empty when adj_r2_base <= 0.
  std::optional<double> ratio;
  std::vector<std::string> dropped_columns;  // from the full fit
  std::vector<std::string> warnings;
};

// The base columns must appear, by name, among the full columns. Throws when
// rank handling leaves nothing to test.
NestedFResult nested_f(const DesignMatrix& base, const DesignMatrix& full, const Eigen::VectorXd& y);
NestedFResult nested_f(const Eigen::MatrixXd& base, const Eigen::MatrixXd& full, const Eigen::VectorXd& y);

struct BhResult {
  std::vector<bool> rejected;
  std::vector<double> adjusted;
};

BhResult bh_adjust(const std::vector<double>& p_values, double fdr = 0.05);

struct LogisticFit {
  std::vector<std::string> names;
  std::vector<std::string> dropped_columns;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;  // Wald
  Eigen::VectorXd p_values;
  Eigen::VectorXd odds_ratios;
  double loglik = 0.0;
  double loglik_null = 0.0;
  double mcfadden_r2 = 0.0;
  double coxsnell_r2 = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> loglik_trace;  // after each accepted step, starting at beta = 0
  std::string diagnostic;
};

// y must be 0/1 with both classes present. Separation stops the fit with
// converged = false and a diagnostic instead of throwing.
LogisticFit logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names = {});
LogisticFit logistic(const DesignMatrix& X, const Eigen::VectorXd& y);

struct R2Metrics {
  bool r2 = true;
  bool adj_r2 = true;
  bool mcfadden = true;
  bool coxsnell = true;
};

struct ThemeR2Row {
  int latent_index = 0;
  std::string theme;
  // NaN when the metric was not requested.
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double mcfadden_r2 = 0.0;
  double coxsnell_r2 = 0.0;
  bool constant = false;  // theme column constant; metrics reported as 0
  bool logistic_converged = true;
};

struct ThemeR2Table {
  std::vector<ThemeR2Row> rows;
  // (metric, median over non-constant themes) for each requested metric.
  std::vector<std::pair<std::string, double>> medians;
};

// Regresses each theme column on the design (categories only).
ThemeR2Table theme_r2_table(const AnnotationMatrix& Z, const DesignMatrix& D, const R2Metrics& metrics = {});

struct ThemeEffect {
  int latent_index = 0;
  std::string theme;
  bool estimated = false;
  double gamma = 0.0;
  double hc3_se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  std::string diagnostic;
};

// Rows of the corpus that carry the outcome, and the outcome values there,
// z-scored when `standardize` is set.
struct OutcomeColumn {
  std::vector<std::size_t> rows;
  Eigen::VectorXd values;
};

OutcomeColumn outcome_column(const Corpus& corpus, const std::string& outcome, bool standardize = true);

// One regression per theme: categories plus that theme alone. CI is
// gamma +/- 1.96 HC3 SE, uncorrected.
std::vector<ThemeEffect> per_theme_outcome_regressions(const Corpus& corpus, Axis axis, const AnnotationMatrix& Z,
                                                       const std::string& outcome, bool standardize = true);

// Logistic regression of "free text adds information" on the categories.
std::optional<LogisticFit> adds_info_regression(const Corpus& corpus, Axis axis);

double median(std::vector<double> values);

}  // namespace iyow
