#include "iyow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iyow/error.hpp"
#include "iyow/special_functions.hpp"
#include "iyow/util.hpp"

namespace iyow {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

RankSelection independent_columns(const Eigen::MatrixXd& X, double tolerance) {
  RankSelection sel;
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::VectorXd v = X.col(j);
    const double norm0 = v.norm();
    if (norm0 > 0.0) {
      // Two Gram-Schmidt passes keep the residual accurate for nearly dependent columns.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) v -= q.dot(v) * q;
      }
    }
    const double norm = v.norm();
    if (norm0 > 0.0 && norm > tolerance * norm0) {
      basis.push_back(v / norm);
      sel.retained.push_back(static_cast<std::size_t>(j));
    } else {
      sel.dropped.push_back(static_cast<std::size_t>(j));
    }
  }
  return sel;
}

std::optional<std::size_t> OlsFit::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& X, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = X.col(static_cast<Eigen::Index>(cols[k]));
  return out;
}

void check_inputs(const char* what, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<std::string>& names) {
  if (X.rows() != y.size()) {
    throw NumericError(std::string(what) + ": design has " + std::to_string(X.rows()) + " rows, outcome has " +
                       std::to_string(y.size()));
  }
  if (static_cast<Eigen::Index>(names.size()) != X.cols()) {
    throw NumericError(std::string(what) + ": column name count does not match the design");
  }
  if (!X.allFinite()) throw NumericError(std::string(what) + ": design contains non-finite values");
  if (!y.allFinite()) throw NumericError(std::string(what) + ": outcome contains non-finite values");
}

// Smallest admissible 1 - h_ii in the HC3 weights.
constexpr double kLeverageFloor = 1e-8;

}  // namespace

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
  if (names.empty()) names = default_names(X.cols());
  check_inputs("ols", X, y, names);
  const RankSelection sel = independent_columns(X);
  OlsFit fit;
  fit.n = static_cast<std::size_t>(X.rows());
  fit.p = sel.retained.size();
  fit.retained_index = sel.retained;
  for (auto j : sel.retained) fit.names.push_back(names[j]);
  for (auto j : sel.dropped) fit.dropped_columns.push_back(names[j]);
  if (fit.p == 0) throw NumericError("ols: no estimable columns");
  if (fit.n <= fit.p) {
    throw NumericError("ols: " + std::to_string(fit.n) + " rows for " + std::to_string(fit.p) +
                       " retained columns");
  }

  const auto n = static_cast<Eigen::Index>(fit.n), p = static_cast<Eigen::Index>(fit.p);
  const Eigen::MatrixXd Xr = take_columns(X, sel.retained);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Xr);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const auto Rt = R.triangularView<Eigen::Upper>();

  fit.beta = Rt.solve(Q.transpose() * y);
  fit.fitted = Xr * fit.beta;
  fit.residuals = y - fit.fitted;
  fit.rss = fit.residuals.squaredNorm();
  fit.tss = (y.array() - y.mean()).matrix().squaredNorm();
  if (!(fit.tss > 0.0)) throw NumericError("ols: outcome has zero total sum of squares");
  fit.r2 = 1.0 - fit.rss / fit.tss;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / static_cast<double>(n - p);

  const Eigen::MatrixXd Rinv = Rt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.leverage = Q.rowwise().squaredNorm();
  Eigen::VectorXd root_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double slack = 1.0 - fit.leverage[i];
    if (slack < kLeverageFloor) {
      slack = kLeverageFloor;
      ++fit.hc3_capped_rows;
    }
    root_w[i] = std::fabs(fit.residuals[i]) / slack;
  }
  const Eigen::MatrixXd A = root_w.asDiagonal() * Q;
  fit.hc3_cov = Rinv * (A.transpose() * A) * Rinv.transpose();
  fit.hc3_se = fit.hc3_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  const double sigma2 = fit.rss / static_cast<double>(n - p);
  fit.classical_se = (sigma2 * (Rinv * Rinv.transpose()).diagonal()).cwiseMax(0.0).cwiseSqrt();
  return fit;
}

OlsFit ols(const DesignMatrix& X, const Eigen::VectorXd& y) { return ols(X.values, y, X.qualified_names()); }

namespace {

NestedFResult nested_from_fits(const OlsFit& base, const OlsFit& full) {
  NestedFResult r;
  if (full.p <= base.p) {
    throw NumericError("nested F: the full model adds no estimable columns over the base model");
  }
  r.df_num = static_cast<int>(full.p - base.p);
  r.df_den = static_cast<int>(full.n - full.p);
  r.rss_base = base.rss;
  r.rss_full = full.rss;
  r.adj_r2_base = base.adj_r2;
  r.adj_r2_full = full.adj_r2;
  if (base.adj_r2 > 0.0) r.ratio = full.adj_r2 / base.adj_r2;
  r.dropped_columns = full.dropped_columns;
  // Exact fits leave rounding-level residuals; treat those as zero.
  if (full.rss <= 1e-24 * full.tss) {
    r.f_stat = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.warnings.push_back("full model fits exactly (RSS = 0); p-value set to 0");
    return r;
  }
  const double gain = std::max(base.rss - full.rss, 0.0);
  r.f_stat = (gain / r.df_num) / (full.rss / r.df_den);
  r.p_value = f_sf(r.f_stat, r.df_num, r.df_den);
  return r;
}

}  // namespace

NestedFResult nested_f(const Eigen::MatrixXd& base, const Eigen::MatrixXd& full, const Eigen::VectorXd& y) {
  if (base.rows() != full.rows()) throw NumericError("nested F: base and full designs differ in row count");
  return nested_from_fits(ols(base, y), ols(full, y));
}

NestedFResult nested_f(const DesignMatrix& base, const DesignMatrix& full, const Eigen::VectorXd& y) {
  if (base.rows != full.rows) throw NumericError("nested F: base and full designs have different rows");
  const auto full_names = full.qualified_names();
  for (const auto& name : base.qualified_names()) {
    if (std::find(full_names.begin(), full_names.end(), name) == full_names.end()) {
      throw NumericError("nested F: base column '" + name + "' is missing from the full design");
    }
  }
  return nested_from_fits(ols(base, y), ols(full, y));
}

BhResult bh_adjust(const std::vector<double>& p_values, double fdr) {
  if (!(fdr > 0.0 && fdr <= 1.0)) throw NumericError("bh_adjust: fdr must lie in (0, 1]");
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw NumericError("bh_adjust: p-value outside [0, 1]");
  }
  const std::size_t m = p_values.size();
  BhResult r;
  r.rejected.assign(m, false);
  r.adjusted.assign(m, 1.0);
  if (m == 0) return r;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  // Compare p * m against rank * fdr with a relative slack of a few ulps, so
  // thresholds written in decimal (0.03 vs 3/5 * 0.05) are not lost to rounding.
  std::size_t k_max = 0;
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double lhs = p_values[order[i]] * md;
    const double rhs = static_cast<double>(i + 1) * fdr;
    if (lhs <= rhs * (1.0 + 1e-12)) k_max = i + 1;
  }
  for (std::size_t i = 0; i < k_max; ++i) r.rejected[order[i]] = true;

  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    running = std::min(running, md / static_cast<double>(i + 1) * p_values[order[i]]);
    r.adjusted[order[i]] = std::min(running, 1.0);
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

double log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) without overflow
    const double softplus = std::max(eta[i], 0.0) + std::log1p(std::exp(-std::fabs(eta[i])));
    ll += y[i] * eta[i] - softplus;
  }
  return ll;
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& eta) {
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    mu[i] = e >= 0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
  }
  return mu;
}

constexpr int kMaxIrlsIterations = 100;
constexpr double kScoreTolerance = 1e-8;
constexpr double kLoglikTolerance = 1e-10;
constexpr double kSeparationBound = 30.0;

}  // namespace

LogisticFit logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
  if (names.empty()) names = default_names(X.cols());
  check_inputs("logistic", X, y, names);
  std::size_t ones = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw NumericError("logistic: outcome must be 0/1");
    ones += y[i] == 1.0;
  }
  const auto n = static_cast<std::size_t>(y.size());
  if (ones == 0 || ones == n) throw NumericError("logistic: outcome has a single class");

  const RankSelection sel = independent_columns(X);
  LogisticFit fit;
  for (auto j : sel.retained) fit.names.push_back(names[j]);
  for (auto j : sel.dropped) fit.dropped_columns.push_back(names[j]);
  if (sel.retained.empty()) throw NumericError("logistic: no estimable columns");
  const Eigen::MatrixXd Xr = take_columns(X, sel.retained);
  const auto p = Xr.cols();

  const double rate = static_cast<double>(ones) / static_cast<double>(n);
  fit.loglik_null = static_cast<double>(n) * (rate * std::log(rate) + (1.0 - rate) * std::log1p(-rate));

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = log_likelihood(Xr, y, beta);
  fit.loglik_trace.push_back(ll);
  for (int iter = 1; iter <= kMaxIrlsIterations; ++iter) {
    const Eigen::VectorXd mu = sigmoid(Xr * beta);
    const Eigen::VectorXd score = Xr.transpose() * (y - mu);
    if (score.cwiseAbs().maxCoeff() < kScoreTolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    const Eigen::MatrixXd info = Xr.transpose() * w.asDiagonal() * Xr;
    const Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) {
      fit.diagnostic = "information matrix is singular at iteration " + std::to_string(iter);
      break;
    }
    // Halve the step until the log-likelihood does not decrease.
    double t = 1.0;
    Eigen::VectorXd candidate;
    double ll_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      candidate = beta + t * step;
      ll_new = log_likelihood(Xr, y, candidate);
      if (ll_new >= ll) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent direction left at working precision.
      fit.converged = true;
      break;
    }
    const double change = std::fabs(ll_new - ll) / std::max(std::fabs(ll), 1e-300);
    beta = candidate;
    ll = ll_new;
    fit.iterations = iter;
    fit.loglik_trace.push_back(ll);
    Eigen::Index worst = 0;
    if (beta.cwiseAbs().maxCoeff(&worst) > kSeparationBound) {
      fit.diagnostic = "separation: |beta| for '" + fit.names[static_cast<std::size_t>(worst)] +
                       "' exceeded " + format_double(kSeparationBound) + " after " + std::to_string(iter) +
                       " iterations";
      break;
    }
    if (change < kLoglikTolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && fit.diagnostic.empty()) {
    fit.diagnostic = "IRLS did not converge in " + std::to_string(kMaxIrlsIterations) + " iterations";
  }

  fit.beta = beta;
  fit.loglik = ll;
  fit.mcfadden_r2 = 1.0 - ll / fit.loglik_null;
  fit.coxsnell_r2 = 1.0 - std::exp(2.0 / static_cast<double>(n) * (fit.loglik_null - ll));
  fit.odds_ratios = beta.array().exp();

  const Eigen::VectorXd mu = sigmoid(Xr * beta);
  const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
  const Eigen::MatrixXd info = Xr.transpose() * w.asDiagonal() * Xr;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.p_values.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double z = fit.se[j] > 0.0 ? beta[j] / fit.se[j] : std::numeric_limits<double>::quiet_NaN();
    fit.p_values[j] = std::isfinite(z) ? normal_two_sided_p(z) : std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

LogisticFit logistic(const DesignMatrix& X, const Eigen::VectorXd& y) {
  return logistic(X.values, y, X.qualified_names());
}

// ---------------------------------------------------------------------------

ThemeR2Table theme_r2_table(const AnnotationMatrix& Z, const DesignMatrix& D, const R2Metrics& metrics) {
  if (Z.rows() != D.n()) throw NumericError("theme_r2_table: annotation and design differ in row count");
  if (Z.row_ids != D.rows) throw NumericError("theme_r2_table: annotation and design rows are not aligned");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ThemeR2Table table;
  for (std::size_t k = 0; k < Z.cols(); ++k) {
    ThemeR2Row row;
    row.latent_index = Z.themes[k].latent_index;
    row.theme = Z.themes[k].text;
    const Eigen::VectorXd z = Z.values.col(static_cast<Eigen::Index>(k)).cast<double>();
    row.constant = z.size() == 0 || (z.array() == z[0]).all();
    if (row.constant) {
      row.r2 = row.adj_r2 = row.mcfadden_r2 = row.coxsnell_r2 = 0.0;
    } else {
      if (metrics.r2 || metrics.adj_r2) {
        const OlsFit f = ols(D, z);
        row.r2 = f.r2;
        row.adj_r2 = f.adj_r2;
      }
      if (metrics.mcfadden || metrics.coxsnell) {
        const LogisticFit f = logistic(D, z);
        row.mcfadden_r2 = f.mcfadden_r2;
        row.coxsnell_r2 = f.coxsnell_r2;
        row.logistic_converged = f.converged;
      }
    }
    if (!metrics.r2) row.r2 = nan;
    if (!metrics.adj_r2) row.adj_r2 = nan;
    if (!metrics.mcfadden) row.mcfadden_r2 = nan;
    if (!metrics.coxsnell) row.coxsnell_r2 = nan;
    table.rows.push_back(std::move(row));
  }
  auto med = [&](double ThemeR2Row::*field) {
    std::vector<double> v;
    for (const auto& r : table.rows) {
      if (!r.constant) v.push_back(r.*field);
    }
    return median(std::move(v));
  };
  if (metrics.r2) table.medians.emplace_back("r2", med(&ThemeR2Row::r2));
  if (metrics.adj_r2) table.medians.emplace_back("adj_r2", med(&ThemeR2Row::adj_r2));
  if (metrics.mcfadden) table.medians.emplace_back("mcfadden_r2", med(&ThemeR2Row::mcfadden_r2));
  if (metrics.coxsnell) table.medians.emplace_back("coxsnell_r2", med(&ThemeR2Row::coxsnell_r2));
  return table;
}

OutcomeColumn outcome_column(const Corpus& corpus, const std::string& outcome, bool standardize) {
  OutcomeColumn oc;
  std::vector<double> values;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto it = corpus[i].outcomes.find(outcome);
    if (it == corpus[i].outcomes.end()) continue;
    oc.rows.push_back(i);
    values.push_back(it->second);
  }
  oc.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (standardize) {
    if (oc.values.size() < 2) throw NumericError("outcome '" + outcome + "' has fewer than two observations");
    oc.values = zscore(oc.values);
  }
  return oc;
}

std::vector<ThemeEffect> per_theme_outcome_regressions(const Corpus& corpus, Axis axis, const AnnotationMatrix& Z,
                                                       const std::string& outcome, bool standardize) {
  if (Z.rows() != corpus.size()) throw NumericError("per-theme regressions: annotation and corpus differ in size");
  const OutcomeColumn oc = outcome_column(corpus, outcome, standardize);
  const DesignMatrix base = design_matrix(corpus.subset(oc.rows), axis);
  std::vector<ThemeEffect> out;
  for (std::size_t k = 0; k < Z.cols(); ++k) {
    ThemeEffect e;
    e.latent_index = Z.themes[k].latent_index;
    e.theme = Z.themes[k].text;
    e.n = oc.rows.size();
    Eigen::VectorXd z(static_cast<Eigen::Index>(oc.rows.size()));
    for (std::size_t i = 0; i < oc.rows.size(); ++i) {
      z[static_cast<Eigen::Index>(i)] = Z.values(static_cast<Eigen::Index>(oc.rows[i]), static_cast<Eigen::Index>(k));
    }
    if (z.size() == 0 || (z.array() == z[0]).all()) {
      e.diagnostic = "theme has no variation on rows with this outcome";
      out.push_back(std::move(e));
      continue;
    }
    DesignMatrix X = base;
    DesignColumn col{std::to_string(e.latent_index), ColumnKind::Theme};
    const std::string name = col.qualified_name();
    X.append_column(std::move(col), z);
    const OlsFit fit = ols(X, oc.values);
    const auto idx = fit.index_of(name);
    if (!idx) {
      e.diagnostic = "theme is collinear with the category indicators";
      out.push_back(std::move(e));
      continue;
    }
    e.estimated = true;
    e.gamma = fit.beta[static_cast<Eigen::Index>(*idx)];
    e.hc3_se = fit.hc3_se[static_cast<Eigen::Index>(*idx)];
    e.ci_low = e.gamma - 1.96 * e.hc3_se;
    e.ci_high = e.gamma + 1.96 * e.hc3_se;
    out.push_back(std::move(e));
  }
  return out;
}

std::optional<LogisticFit> adds_info_regression(const Corpus& corpus, Axis axis) {
  std::vector<std::size_t> rows;
  std::vector<double> y;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto it = corpus[i].says_freetext_adds_info.find(axis);
    if (it == corpus[i].says_freetext_adds_info.end()) continue;
    rows.push_back(i);
    y.push_back(it->second ? 1.0 : 0.0);
  }
  const auto ones = std::count(y.begin(), y.end(), 1.0);
  if (rows.size() < 2 || ones == 0 || ones == static_cast<std::ptrdiff_t>(y.size())) return std::nullopt;
  const DesignMatrix D = design_matrix(corpus.subset(rows), axis);
  return logistic(D, Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
}

}  // namespace iyow
