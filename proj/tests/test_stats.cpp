#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iyow/error.hpp"
#include "iyow/special_functions.hpp"
#include "iyow/stats.hpp"
#include "iyow/util.hpp"

namespace iyow {
namespace {

Eigen::MatrixXd random_design(Rng& rng, Eigen::Index n, Eigen::Index p) {
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) X(i, j) = rng.normal();
  }
  return X;
}

Eigen::VectorXd noise(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

TEST(Ols, ExactFit) {
  Rng rng(1);
  const Eigen::MatrixXd X = random_design(rng, 30, 4);
  const Eigen::VectorXd beta = (Eigen::VectorXd(4) << 1.0, -2.0, 0.5, 3.0).finished();
  const OlsFit fit = ols(X, X * beta);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  EXPECT_LE(fit.rss, 1e-16 * fit.tss);
  EXPECT_LT((fit.beta - beta).norm(), 1e-10);
}

TEST(Ols, InterceptOnlyIsTheMean) {
  Rng rng(2);
  const Eigen::VectorXd y = noise(rng, 25);
  const OlsFit fit = ols(Eigen::MatrixXd::Ones(25, 1), y);
  EXPECT_NEAR(fit.beta(0), y.mean(), 1e-12);
  EXPECT_NEAR(fit.r2, 0.0, 1e-12);
}

TEST(Ols, DuplicateColumnDropped) {
  Rng rng(3);
  const Eigen::MatrixXd X = random_design(rng, 40, 3);
  Eigen::MatrixXd Xdup(40, 4);
  Xdup << X, X.col(1);
  const Eigen::VectorXd y = X * Eigen::Vector3d(0.5, 1.0, -1.0) + noise(rng, 40);
  const OlsFit a = ols(X, y);
  const OlsFit b = ols(Xdup, y, {"c", "x", "z", "x_copy"});
  EXPECT_EQ(b.dropped_columns, std::vector<std::string>{"x_copy"});
  EXPECT_EQ(b.p, 3u);
  EXPECT_LT((a.beta - b.beta).norm(), 1e-10);
  EXPECT_NEAR(a.rss, b.rss, 1e-10);
  EXPECT_NEAR(a.adj_r2, b.adj_r2, 1e-12);
}

TEST(Ols, ResidualOrthogonalityAndAdjustedR2) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng.index(80));
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng.index(5));
    const Eigen::MatrixXd X = random_design(rng, n, p);
    const Eigen::VectorXd y = X * noise(rng, p) + noise(rng, n);
    const OlsFit fit = ols(X, y);
    const double scale = X.norm() * fit.residuals.norm();
    EXPECT_LE((X.transpose() * fit.residuals).cwiseAbs().maxCoeff(), 1e-8 * scale);
    EXPECT_GE(fit.rss, 0.0);
    EXPECT_LE(fit.r2, 1.0);
    EXPECT_LE(fit.adj_r2, fit.r2);
    const double nn = static_cast<double>(n), pp = static_cast<double>(p);
    EXPECT_NEAR(fit.adj_r2, 1.0 - (1.0 - fit.r2) * (nn - 1.0) / (nn - pp), 1e-12);
  }
}

TEST(Ols, Hc3MatchesSandwichFormula) {
  Rng rng(5);
  const Eigen::MatrixXd X = random_design(rng, 50, 3);
  const Eigen::VectorXd y = X * Eigen::Vector3d(1, 2, 3) + noise(rng, 50);
  const OlsFit fit = ols(X, y);
  const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
  const Eigen::VectorXd h = (X * bread * X.transpose()).diagonal();
  Eigen::VectorXd w(50);
  for (int i = 0; i < 50; ++i) w(i) = std::pow(fit.residuals(i) / (1.0 - h(i)), 2);
  const Eigen::MatrixXd cov = bread * X.transpose() * w.asDiagonal() * X * bread;
  EXPECT_LT((cov - fit.hc3_cov).cwiseAbs().maxCoeff(), 1e-12 * cov.cwiseAbs().maxCoeff());
  EXPECT_LT((h - fit.leverage).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ols, Hc3CloseToClassicalUnderHomoskedasticity) {
  Rng rng(6);
  const int n = 500;
  Eigen::MatrixXd X(n, 2);
  for (int i = 0; i < n; ++i) X.row(i) << 1.0, (i % 2);
  const Eigen::VectorXd y = X * Eigen::Vector2d(0.3, 0.7) + noise(rng, n);
  const OlsFit fit = ols(X, y);
  for (Eigen::Index j = 0; j < 2; ++j) {
    EXPECT_LT(std::abs(fit.hc3_se(j) / fit.classical_se(j) - 1.0), 0.25);
  }
}

TEST(Ols, Errors) {
  EXPECT_THROW(ols(Eigen::MatrixXd::Ones(3, 1), Eigen::VectorXd::Constant(3, 2.0)), NumericError);
  Rng rng(7);
  EXPECT_THROW(ols(random_design(rng, 3, 3), noise(rng, 3)), NumericError);
  EXPECT_THROW(ols(random_design(rng, 5, 2), noise(rng, 4)), Error);
}

TEST(Ols, PermutationEquivariant) {
  Rng rng(8);
  const Eigen::MatrixXd X = random_design(rng, 60, 4);
  const Eigen::VectorXd y = X * noise(rng, 4) + noise(rng, 60);
  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  Eigen::MatrixXd Xp(60, 4);
  Eigen::VectorXd yp(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    Xp.row(i) = X.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
    yp(i) = y(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
  }
  const OlsFit a = ols(X, y), b = ols(Xp, yp);
  EXPECT_LT((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((a.hc3_se - b.hc3_se).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(a.r2, b.r2, 1e-10);

  Eigen::MatrixXd full(60, 5), fullp(60, 5);
  const Eigen::VectorXd extra = noise(rng, 60);
  full << X, extra;
  for (Eigen::Index i = 0; i < 60; ++i) fullp.row(i) = full.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
  EXPECT_NEAR(nested_f(X, full, y).f_stat, nested_f(Xp, fullp, yp).f_stat, 1e-10);
}

// N = 6, one added column; RSS values by explicit normal equations.
TEST(NestedF, HandSizedCase) {
  Eigen::MatrixXd base(6, 2), full(6, 3);
  base << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
  Eigen::VectorXd z(6);
  z << 0, 1, 1, 0, 1, 0;
  full << base, z;
  Eigen::VectorXd y(6);
  y << 1.0, 2.5, 2.9, 3.1, 5.2, 4.8;
  auto rss = [&](const Eigen::MatrixXd& X) {
    const Eigen::VectorXd b = (X.transpose() * X).inverse() * (X.transpose() * y);
    return (y - X * b).squaredNorm();
  };
  const double rb = rss(base), rf = rss(full);
  const double f = (rb - rf) / 1.0 / (rf / 3.0);
  const NestedFResult r = nested_f(base, full, y);
  EXPECT_NEAR(r.f_stat, f, 1e-10);
  EXPECT_EQ(r.df_num, 1);
  EXPECT_EQ(r.df_den, 3);
  EXPECT_NEAR(r.p_value, 1.0 - f_cdf(f, 1, 3), 1e-12);
  ASSERT_TRUE(r.ratio.has_value() || r.adj_r2_base <= 0.0);
  if (r.ratio) {
    EXPECT_NEAR(*r.ratio, r.adj_r2_full / r.adj_r2_base, 1e-15);
  }
}

TEST(NestedF, ZeroAddedColumnLeavesNothingToTest) {
  Rng rng(9);
  const Eigen::MatrixXd base = random_design(rng, 30, 3);
  Eigen::MatrixXd full(30, 4);
  full << base, Eigen::VectorXd::Zero(30);
  EXPECT_THROW(nested_f(base, full, noise(rng, 30)), NumericError);
}

TEST(NestedF, FEqualsTSquared) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd base = random_design(rng, 80, 3);
    Eigen::MatrixXd full(80, 4);
    full << base, noise(rng, 80);
    const Eigen::VectorXd y = base * noise(rng, 3) + 0.2 * full.col(3) + noise(rng, 80);
    const NestedFResult r = nested_f(base, full, y);
    const OlsFit fit = ols(full, y);
    const double t = fit.beta(3) / fit.classical_se(3);
    EXPECT_NEAR(r.f_stat, t * t, 1e-8 * std::max(1.0, t * t));
  }
}

TEST(NestedF, NamedDesignsRequireBaseColumns) {
  DesignMatrix base, full;
  base.rows = full.rows = {"a", "b", "c", "d", "e"};
  base.columns = {{"intercept", ColumnKind::Intercept}, {"x", ColumnKind::Category}};
  base.values = (Eigen::MatrixXd(5, 2) << 1, 0, 1, 1, 1, 0, 1, 1, 1, 0).finished();
  full = base;
  full.append_column({"1", ColumnKind::Theme}, (Eigen::VectorXd(5) << 1, 0, 0, 1, 0).finished());
  const Eigen::VectorXd y = (Eigen::VectorXd(5) << 0.1, 1.2, 0.4, 2.0, -0.3).finished();
  EXPECT_EQ(nested_f(base, full, y).df_num, 1);
  DesignMatrix wrong = full;
  wrong.columns[1].name = "renamed";
  EXPECT_THROW(nested_f(base, wrong, y), Error);
}

TEST(Bh, Fixtures) {
  auto r = bh_adjust({0.01, 0.02, 0.03, 0.04, 0.05});
  EXPECT_EQ(r.rejected, std::vector<bool>(5, true));
  for (double a : r.adjusted) EXPECT_NEAR(a, 0.05, 1e-15);
  r = bh_adjust({1, 1, 1});
  EXPECT_EQ(r.rejected, std::vector<bool>(3, false));
  EXPECT_EQ(r.adjusted, std::vector<double>(3, 1.0));
  r = bh_adjust({0.04});
  EXPECT_TRUE(r.rejected[0]);
  EXPECT_NEAR(r.adjusted[0], 0.04, 1e-15);
  EXPECT_TRUE(bh_adjust({}).rejected.empty());
  EXPECT_THROW(bh_adjust({0.5, 1.5}), Error);
  EXPECT_THROW(bh_adjust({-0.1}), Error);
  EXPECT_THROW(bh_adjust({std::nan("")}), Error);
  // Step-up: 0.013 misses its own threshold 0.0125 but is rescued by 0.035 <= 3/4 * 0.05.
  r = bh_adjust({0.02, 0.2, 0.013, 0.035}, 0.05);
  EXPECT_EQ(r.rejected, (std::vector<bool>{true, false, true, true}));
}

TEST(Bh, MonotoneInFdr) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + rng.index(15));
    for (auto& v : p) v = std::pow(rng.uniform(), 2.0);
    const double f1 = rng.uniform() * 0.2, f2 = f1 + rng.uniform() * 0.2;
    const auto a = bh_adjust(p, f1), b = bh_adjust(p, f2);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (a.rejected[i]) {
        EXPECT_TRUE(b.rejected[i]);
      }
      EXPECT_GE(a.adjusted[i], p[i] - 1e-15);
      EXPECT_LE(a.adjusted[i], 1.0);
      EXPECT_EQ(a.rejected[i], a.adjusted[i] <= f1);
    }
  }
}

Eigen::MatrixXd two_by_two(Eigen::VectorXd& y) {
  // exposed: 30 yes / 20 no; unexposed: 15 yes / 35 no
  Eigen::MatrixXd X(100, 2);
  y.resize(100);
  int row = 0;
  auto add = [&](int n, double exposed, double outcome) {
    for (int i = 0; i < n; ++i, ++row) {
      X.row(row) << 1.0, exposed;
      y(row) = outcome;
    }
  };
  add(30, 1, 1);
  add(20, 1, 0);
  add(15, 0, 1);
  add(35, 0, 0);
  return X;
}

TEST(Logistic, TwoByTwoOddsRatio) {
  Eigen::VectorXd y;
  const Eigen::MatrixXd X = two_by_two(y);
  const LogisticFit fit = logistic(X, y, {"intercept", "exposed"});
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.odds_ratios(1), 3.5, 1e-6);
  EXPECT_NEAR(fit.odds_ratios(0), 15.0 / 35.0, 1e-6);
  EXPECT_LE(fit.loglik, 0.0);
  EXPECT_GE(fit.loglik, fit.loglik_null - 1e-8);
  const double n = 100.0;
  EXPECT_NEAR(fit.mcfadden_r2, 1.0 - fit.loglik / fit.loglik_null, 1e-12);
  EXPECT_NEAR(fit.coxsnell_r2, 1.0 - std::exp(2.0 / n * (fit.loglik_null - fit.loglik)), 1e-12);
  for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
    EXPECT_GE(fit.loglik_trace[i], fit.loglik_trace[i - 1] - 1e-12);
  }
}

TEST(Logistic, InterceptOnlyIsNullModel) {
  Eigen::VectorXd y(10);
  y << 1, 0, 0, 1, 0, 0, 0, 1, 0, 0;
  const LogisticFit fit = logistic(Eigen::MatrixXd::Ones(10, 1), y);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(1.0 / (1.0 + std::exp(-fit.beta(0))), 0.3, 1e-10);
  EXPECT_NEAR(fit.mcfadden_r2, 0.0, 1e-12);
}

TEST(Logistic, SeparationIsReportedNotThrown) {
  Eigen::MatrixXd X(8, 2);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    X.row(i) << 1.0, static_cast<double>(i);
    y(i) = i >= 4 ? 1.0 : 0.0;
  }
  LogisticFit fit;
  ASSERT_NO_THROW(fit = logistic(X, y));
  EXPECT_FALSE(fit.converged);
  EXPECT_FALSE(fit.diagnostic.empty());
  EXPECT_THROW(logistic(X, Eigen::VectorXd::Ones(8)), Error);
  Eigen::VectorXd bad = y;
  bad(0) = 0.5;
  EXPECT_THROW(logistic(X, bad), Error);
}

TEST(Logistic, LoglikNonDecreasingOnRandomData) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd X = random_design(rng, 200, 3);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
      const double eta = 0.3 + 0.8 * X(i, 1) - 0.5 * X(i, 2);
      y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    const LogisticFit fit = logistic(X, y);
    EXPECT_TRUE(fit.converged);
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
      EXPECT_GE(fit.loglik_trace[i], fit.loglik_trace[i - 1] - 1e-12);
    }
    for (Eigen::Index j = 0; j < fit.odds_ratios.size(); ++j) EXPECT_GT(fit.odds_ratios(j), 0.0);
  }
}

DesignMatrix category_design(const std::vector<int>& group, int groups) {
  DesignMatrix d;
  d.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(group.size()), groups);
  d.columns.push_back({"intercept", ColumnKind::Intercept});
  for (int g = 1; g < groups; ++g) d.columns.push_back({"g" + std::to_string(g), ColumnKind::Category});
  for (std::size_t i = 0; i < group.size(); ++i) {
    d.rows.push_back("r" + std::to_string(i));
    d.values(static_cast<Eigen::Index>(i), 0) = 1.0;
    if (group[i] > 0) d.values(static_cast<Eigen::Index>(i), group[i]) = 1.0;
  }
  return d;
}

AnnotationMatrix annotation_of(const std::vector<std::vector<std::uint8_t>>& cols, std::size_t n) {
  AnnotationMatrix z;
  z.values = BinaryMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < n; ++i) z.row_ids.push_back("r" + std::to_string(i));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    z.themes.push_back({static_cast<int>(k), "theme " + std::to_string(k), 1.0, true, std::nullopt});
    for (std::size_t i = 0; i < n; ++i) z.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cols[k][i];
  }
  return z;
}

TEST(ThemeR2, CategoryThemeSubsetThemeAndConstantTheme) {
  // 20 rows, three groups; theme 0 equals group 1, theme 1 is a strict subset
  // of group 2, theme 2 is constant.
  std::vector<int> group;
  for (int i = 0; i < 20; ++i) group.push_back(i % 3);
  std::vector<std::uint8_t> equal, subset, constant(20, 0);
  for (int i = 0; i < 20; ++i) {
    equal.push_back(group[static_cast<std::size_t>(i)] == 1);
    subset.push_back(group[static_cast<std::size_t>(i)] == 2 && i < 10);
  }
  const auto D = category_design(group, 3);
  const auto table = theme_r2_table(annotation_of({equal, subset, constant}, 20), D);
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_NEAR(table.rows[0].r2, 1.0, 1e-12);
  // Variance decomposition by hand: R^2 = between-group SS / total SS.
  double mean = 0;
  for (auto v : subset) mean += v;
  mean /= 20.0;
  double tss = 0, between = 0;
  for (int g = 0; g < 3; ++g) {
    double gm = 0;
    int gn = 0;
    for (int i = 0; i < 20; ++i) {
      if (group[static_cast<std::size_t>(i)] == g) {
        gm += subset[static_cast<std::size_t>(i)];
        ++gn;
      }
    }
    gm /= gn;
    between += gn * (gm - mean) * (gm - mean);
  }
  for (auto v : subset) tss += (v - mean) * (v - mean);
  EXPECT_GT(table.rows[1].r2, 0.0);
  EXPECT_LT(table.rows[1].r2, 1.0);
  EXPECT_NEAR(table.rows[1].r2, between / tss, 1e-12);
  EXPECT_TRUE(table.rows[2].constant);
  EXPECT_EQ(table.rows[2].r2, 0.0);
  EXPECT_EQ(table.rows[2].mcfadden_r2, 0.0);
  ASSERT_EQ(table.medians.size(), 4u);
  EXPECT_EQ(table.medians[0].first, "r2");
  EXPECT_NEAR(table.medians[0].second, (1.0 + between / tss) / 2.0, 1e-12);
}

TEST(ThemeR2, IndependentThemeExplainsAlmostNothing) {
  Rng rng(14);
  std::vector<int> group;
  std::vector<std::uint8_t> theme;
  for (int i = 0; i < 2000; ++i) {
    group.push_back(static_cast<int>(rng.index(4)));
    theme.push_back(rng.uniform() < 0.3);
  }
  const auto table = theme_r2_table(annotation_of({theme}, 2000), category_design(group, 4));
  EXPECT_LT(table.rows[0].r2, 0.02);
  EXPECT_LT(table.rows[0].mcfadden_r2, 0.02);
}

TEST(ThemeR2, UnrequestedMetricsAreNaN) {
  std::vector<int> group = {0, 1, 0, 1, 0, 1, 0, 1};
  const auto table = theme_r2_table(annotation_of({{1, 1, 0, 1, 0, 0, 1, 0}}, 8), category_design(group, 2),
                                    R2Metrics{true, false, false, false});
  EXPECT_FALSE(std::isnan(table.rows[0].r2));
  EXPECT_TRUE(std::isnan(table.rows[0].adj_r2));
  EXPECT_TRUE(std::isnan(table.rows[0].coxsnell_r2));
  EXPECT_EQ(table.medians.size(), 1u);
}

// Corpus with one race category driving a planted theme effect.
Corpus outcome_corpus(Rng& rng, std::size_t n, double effect, AnnotationMatrix& z) {
  std::vector<Response> rs;
  z = AnnotationMatrix{};
  z.values = BinaryMatrix::Zero(static_cast<Eigen::Index>(n), 2);
  z.themes = {{0, "planted", 1.0, true, std::nullopt}, {1, "unrelated", 1.0, true, std::nullopt}};
  for (std::size_t i = 0; i < n; ++i) {
    Response r;
    r.id = "r" + std::to_string(i);
    const bool asian = rng.uniform() < 0.3;
    r.categories[Axis::Race] = {asian ? "Asian" : "White"};
    const bool t0 = rng.uniform() < 0.4, t1 = rng.uniform() < 0.5;
    z.values(static_cast<Eigen::Index>(i), 0) = t0;
    z.values(static_cast<Eigen::Index>(i), 1) = t1;
    r.outcomes["y"] = effect * t0 + 0.3 * asian + rng.normal();
    z.row_ids.push_back(r.id);
    rs.push_back(r);
  }
  return Corpus(rs);
}

TEST(PerThemeRegressions, RecoversPlantedEffect) {
  Rng rng(15);
  AnnotationMatrix z;
  const Corpus c = outcome_corpus(rng, 1500, 0.8, z);
  const auto effects = per_theme_outcome_regressions(c, Axis::Race, z, "y", false);
  ASSERT_EQ(effects.size(), 2u);
  EXPECT_TRUE(effects[0].estimated);
  EXPECT_LT(effects[0].ci_low, 0.8);
  EXPECT_GT(effects[0].ci_high, 0.8);
  EXPECT_NEAR(effects[0].ci_high - effects[0].gamma, 1.96 * effects[0].hc3_se, 1e-12);
  EXPECT_EQ(effects[0].n, 1500u);
}

TEST(PerThemeRegressions, NullThemeCoverageNearNominal) {
  Rng rng(16);
  int covered = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    AnnotationMatrix z;
    const Corpus c = outcome_corpus(rng, 200, 0.0, z);
    const auto effects = per_theme_outcome_regressions(c, Axis::Race, z, "y", true);
    covered += effects[1].ci_low <= 0.0 && 0.0 <= effects[1].ci_high;
  }
  // 95% nominal; binomial sd at 400 reps is about 1.1 points.
  EXPECT_GT(covered, static_cast<int>(0.91 * reps));
  EXPECT_LT(covered, static_cast<int>(0.99 * reps));
}

TEST(PerThemeRegressions, ZeroVarianceThemeDropped) {
  Rng rng(17);
  AnnotationMatrix z;
  const Corpus c = outcome_corpus(rng, 100, 0.5, z);
  z.values.col(1).setZero();
  const auto effects = per_theme_outcome_regressions(c, Axis::Race, z, "y", true);
  EXPECT_TRUE(effects[0].estimated);
  EXPECT_FALSE(effects[1].estimated);
  EXPECT_FALSE(effects[1].diagnostic.empty());
}

TEST(OutcomeColumn, SkipsMissingAndStandardizes) {
  std::vector<Response> rs(5);
  for (int i = 0; i < 5; ++i) {
    rs[static_cast<std::size_t>(i)].id = "r" + std::to_string(i);
    rs[static_cast<std::size_t>(i)].categories[Axis::Race] = {"White"};
    if (i != 2) rs[static_cast<std::size_t>(i)].outcomes["y"] = i;
  }
  const auto col = outcome_column(Corpus(rs), "y", true);
  EXPECT_EQ(col.rows, (std::vector<std::size_t>{0, 1, 3, 4}));
  EXPECT_NEAR(col.values.mean(), 0.0, 1e-12);
  const auto raw = outcome_column(Corpus(rs), "y", false);
  EXPECT_EQ(raw.values(2), 3.0);
}

TEST(SpecialFunctions, KnownValues) {
  EXPECT_NEAR(reg_inc_beta(0.5, 1, 1), 0.5, 1e-15);
  EXPECT_EQ(reg_inc_beta(0.0, 2, 3), 0.0);
  EXPECT_EQ(reg_inc_beta(1.0, 2, 3), 1.0);
  // I_x(a, 1) = x^a and I_x(1, b) = 1 - (1 - x)^b.
  for (double x : {0.1, 0.37, 0.8}) {
    EXPECT_NEAR(reg_inc_beta(x, 3.5, 1), std::pow(x, 3.5), 1e-13);
    EXPECT_NEAR(reg_inc_beta(x, 1, 4.2), 1.0 - std::pow(1.0 - x, 4.2), 1e-13);
    EXPECT_NEAR(reg_inc_beta(x, 2.5, 7) + reg_inc_beta(1.0 - x, 7, 2.5), 1.0, 1e-13);
  }
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-14);
  EXPECT_NEAR(normal_two_sided_p(1.959963984540054), 0.05, 1e-13);
  // F(2, d2) has the closed form 1 - (1 + 2x/d2)^(-d2/2).
  for (double x : {0.2, 1.0, 3.0}) {
    EXPECT_NEAR(f_cdf(x, 2, 7), 1.0 - std::pow(1.0 + 2.0 * x / 7.0, -3.5), 1e-13);
    EXPECT_NEAR(f_cdf(x, 3, 9) + f_sf(x, 3, 9), 1.0, 1e-14);
  }
  EXPECT_NEAR(t_cdf(0.0, 5), 0.5, 1e-15);
  EXPECT_NEAR(t_cdf(1.0, 1), 0.75, 1e-14);  // Cauchy
  EXPECT_THROW(reg_inc_beta(1.5, 1, 1), Error);
  EXPECT_THROW(reg_inc_beta(0.5, 0, 1), Error);
  EXPECT_THROW(f_cdf(-1.0, 1, 1), Error);
}

TEST(Median, EvenOddAndEmpty) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

}  // namespace
}  // namespace iyow
