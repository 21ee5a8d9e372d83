#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>

#include "iyow/error.hpp"
#include "iyow/prompts.hpp"
#include "iyow/themes.hpp"
#include "iyow/util.hpp"
#include "support/fakes.hpp"

namespace iyow {
namespace {

// Chat whose reply is a function of the annotated TEXT.
class FunctionChat final : public ChatProvider {
 public:
  explicit FunctionChat(std::function<std::string(const std::string&)> reply) : reply_(std::move(reply)) {}
  std::vector<std::string> complete(const CompletionRequest& request) override {
    const std::string marker = "TEXT: \"";
    const auto from = request.prompt.rfind(marker) + marker.size();
    const std::string text = request.prompt.substr(from, request.prompt.find('"', from) - from);
    return std::vector<std::string>(static_cast<std::size_t>(request.n_samples), reply_(text));
  }

 private:
  std::function<std::string(const std::string&)> reply_;
};

ActivationMatrix column_acts(const std::vector<double>& col) {
  ActivationMatrix a;
  a.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(col.size()), 1);
  for (std::size_t i = 0; i < col.size(); ++i) {
    a.values(static_cast<Eigen::Index>(i), 0) = col[i];
    a.row_ids.push_back("r" + std::to_string(i));
  }
  return a;
}

TEST(Exemplars, TopRowsAndSeededZeros) {
  std::vector<double> col = {3, 2, 1};
  col.resize(30, 0.0);
  const auto acts = column_acts(col);
  const auto e = select_exemplars(acts, 0, 2, 10, 42);
  EXPECT_TRUE(e.interpretable);
  EXPECT_EQ(e.positives, (std::vector<std::size_t>{0, 1}));
  ASSERT_EQ(e.zeros.size(), 10u);
  for (auto r : e.zeros) EXPECT_EQ(col[r], 0.0);
  EXPECT_EQ(select_exemplars(acts, 0, 2, 10, 42).zeros, e.zeros);
  EXPECT_NE(select_exemplars(acts, 0, 2, 10, 43).zeros, e.zeros);

  EXPECT_FALSE(select_exemplars(column_acts(std::vector<double>(30, 0.0)), 0, 2, 10, 1).interpretable);
  EXPECT_THROW(select_exemplars(acts, 0, 2, 28, 1), Error);
  EXPECT_THROW(select_exemplars(acts, 1, 2, 10, 1), Error);
}

TEST(Exemplars, TiesKeepRowOrder) {
  const auto acts = column_acts({1, 5, 5, 0, 5, 0});
  EXPECT_EQ(top_active_rows(acts, 0, 3), (std::vector<std::size_t>{1, 2, 4}));
  EXPECT_EQ(top_active_rows(acts, 0, 10), (std::vector<std::size_t>{1, 2, 4, 0}));
  EXPECT_EQ(zero_rows(acts, 0), (std::vector<std::size_t>{3, 5}));
}

TEST(Prompts, ParseCandidate) {
  EXPECT_EQ(parse_candidate("- \"mentions family recipes\""), "mentions family recipes");
  EXPECT_EQ(parse_candidate("- \xE2\x80\x9Cmentions church\xE2\x80\x9D"), "mentions church");
  // Continuation of the prompt's open quote.
  EXPECT_EQ(parse_candidate("mentions church\""), "mentions church");
  EXPECT_FALSE(parse_candidate("no quotes at all").has_value());
  EXPECT_FALSE(parse_candidate("- \"\"").has_value());
}

TEST(Prompts, ParseYes) {
  EXPECT_TRUE(parse_yes("Yes. The TEXT mentions it."));
  EXPECT_TRUE(parse_yes("  yes"));
  EXPECT_FALSE(parse_yes("No. The TEXT expresses otherwise."));
  EXPECT_FALSE(parse_yes("Maybe"));
  EXPECT_FALSE(parse_yes(""));
}

TEST(Prompts, TemplatesCarryPlaceholdersAndSubstituteOnce) {
  EXPECT_NE(annotation_template().find("{hypothesis}"), std::string_view::npos);
  EXPECT_NE(annotation_template().find("{text}"), std::string_view::npos);
  EXPECT_NE(interpretation_template().find("{identity}"), std::string_view::npos);
  const std::string p = build_annotation_prompt("mentions {text}", "my {hypothesis}");
  EXPECT_NE(p.find("PROPERTY: \"mentions {text}\"\nTEXT: \"my {hypothesis}\""), std::string::npos);
  const std::string ip = build_interpretation_prompt(Axis::SexualOrientation, {"pos\none"}, {"neg"});
  EXPECT_NE(ip.find("describing their sexual orientation."), std::string::npos);
  EXPECT_NE(ip.find("- pos one"), std::string::npos);
}

TEST(Candidates, ScriptedRepliesVerbatim) {
  auto script = std::make_shared<ScriptedChatBackend>(
      std::vector<std::string>{"- \"mentions family recipes\"", "- \"b\"", "- \"c\""});
  CachingChat chat(script, nullptr, {});
  const auto r = generate_candidates(Axis::Race, {"p"}, {"z"}, chat);
  EXPECT_EQ(r.candidates, (std::vector<std::string>{"mentions family recipes", "b", "c"}));
  EXPECT_EQ(r.dropped, 0);
}

TEST(Candidates, UnparseableReplyRetriedOnceThenDropped) {
  auto script = std::make_shared<ScriptedChatBackend>(
      std::vector<std::string>{"- \"a\"", "no quotes", "- \"c\"", "still none"});
  CachingChat chat(script, nullptr, {});
  const auto r = generate_candidates(Axis::Race, {"p"}, {"z"}, chat);
  EXPECT_EQ(r.candidates, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(r.dropped, 1);

  auto retry_ok = std::make_shared<ScriptedChatBackend>(
      std::vector<std::string>{"- \"a\"", "no quotes", "- \"c\"", "- \"b\""});
  CachingChat chat2(retry_ok, nullptr, {});
  EXPECT_EQ(generate_candidates(Axis::Race, {"p"}, {"z"}, chat2).candidates,
            (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_THROW(generate_candidates(Axis::Race, {}, {"z"}, chat2), Error);
}

struct FidelityFixture {
  ActivationMatrix acts;
  std::vector<std::string> texts;
};

FidelityFixture fidelity_fixture() {
  std::vector<double> col;
  FidelityFixture f;
  for (int i = 0; i < 100; ++i) {
    col.push_back(1.0 + i);
    f.texts.push_back("pos " + std::to_string(i));
  }
  for (int i = 0; i < 120; ++i) {
    col.push_back(0.0);
    f.texts.push_back("neg " + std::to_string(i));
  }
  f.acts = column_acts(col);
  return f;
}

TEST(Fidelity, ConfusionConventions) {
  const auto f = fidelity_fixture();
  auto run = [&](std::function<bool(const std::string&)> label) {
    std::map<std::string, bool> labels;
    for (const auto& t : f.texts) labels[t] = label(t);
    testing::LabelChat chat(labels);
    return fidelity("theme", f.acts, 0, f.texts, chat, {100, 100, 5, {}});
  };
  const auto perfect = run([](const std::string& t) { return t.rfind("pos", 0) == 0; });
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.positives_used, 100u);
  EXPECT_EQ(perfect.negatives_used, 100u);
  const auto everything = run([](const std::string&) { return true; });
  EXPECT_EQ(everything.counts.tp, 100);
  EXPECT_EQ(everything.counts.fp, 100);
  EXPECT_NEAR(everything.f1, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(std::round(everything.f1 * 1e4) / 1e4, 0.6667);
  EXPECT_EQ(run([](const std::string&) { return false; }).f1, 0.0);
}

TEST(Fidelity, FewerPositivesThanRequested) {
  auto f = fidelity_fixture();
  for (Eigen::Index i = 40; i < 100; ++i) f.acts.values(i, 0) = 0.0;
  std::map<std::string, bool> labels;
  for (const auto& t : f.texts) labels[t] = true;
  testing::LabelChat chat(labels);
  const auto r = fidelity("theme", f.acts, 0, f.texts, chat, {100, 100, 5, {}});
  EXPECT_EQ(r.positives_used, 40u);
  EXPECT_EQ(r.negatives_used, 100u);
  EXPECT_EQ(r.counts.tp, 40);
}

TEST(F1, MatchesHandCounts) {
  EXPECT_EQ(f1_score({0, 0, 10, 10}), 0.0);
  EXPECT_DOUBLE_EQ(f1_score({6, 2, 4, 8}), 12.0 / 18.0);
  const auto c = confusion({1, 1, 0, 0, 1}, {1, 0, 1, 0, 1});
  EXPECT_EQ(c.tp, 2);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.fn, 1);
  EXPECT_EQ(c.tn, 1);
  EXPECT_THROW(confusion({1}, {1, 0}), Error);
}

TEST(SelectInterpretation, ArgmaxWithEarliestTie) {
  EXPECT_EQ(best_candidate({{"a", 0.4}, {"b", 0.8}, {"c", 0.6}}), 1u);
  EXPECT_EQ(best_candidate({{"a", 0.7}, {"b", 0.7}}), 0u);
  EXPECT_EQ(best_candidate({{"a", 0.3}}), 0u);
  EXPECT_THROW(best_candidate({}), Error);
  const Theme t = select_interpretation(4, {{"a", 0.4}, {"b", 0.8}});
  EXPECT_EQ(t.latent_index, 4);
  EXPECT_EQ(t.text, "b");
  EXPECT_EQ(t.fidelity, 0.8);
}

TEST(SelectInterpretation, InvariantUnderMonotoneRescaling) {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ScoredCandidate> c, scaled;
    const std::size_t n = 1 + rng.index(5);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = static_cast<double>(rng.index(5)) / 4.0;  // ties are common
      c.push_back({"c" + std::to_string(i), f});
      scaled.push_back({"c" + std::to_string(i), std::exp(3.0 * f) - 7.0});
    }
    EXPECT_EQ(best_candidate(c), best_candidate(scaled));
  }
}

TEST(FilterThemes, ThresholdAndStyleExclusion) {
  std::vector<Theme> themes = {
      {0, "mentions speaking a heritage language", 0.46, false, std::nullopt},
      {1, "mentions a specific national origin", 0.51, false, std::nullopt},
      {2, "uses very short descriptions", 0.69, false, std::nullopt},
      {3, "writes in all lowercase", 0.30, false, std::nullopt},
      {4, "exactly at threshold", 0.50, false, std::nullopt},
  };
  const auto r = filter_themes(themes, 0.50, {2, 3});
  ASSERT_EQ(r.themes.size(), 5u);
  EXPECT_EQ(r.themes[0].exclusion_reason, ExclusionReason::LowFidelity);
  EXPECT_FALSE(r.themes[0].retained);
  EXPECT_TRUE(r.themes[1].retained);
  EXPECT_FALSE(r.themes[1].exclusion_reason.has_value());
  EXPECT_EQ(r.themes[2].exclusion_reason, ExclusionReason::StyleOnly);
  // Style exclusion wins when both apply.
  EXPECT_EQ(r.themes[3].exclusion_reason, ExclusionReason::StyleOnly);
  EXPECT_TRUE(r.themes[4].retained);
  EXPECT_EQ(r.retained.size(), 2u);
  EXPECT_EQ(r.low_fidelity, 1u);
  EXPECT_EQ(r.style_only, 2u);
  for (const auto& t : r.themes) EXPECT_EQ(t.retained, t.fidelity >= 0.50 && !t.exclusion_reason.has_value());
}

TEST(AnnotateMatrix, ReplyParsing) {
  const std::vector<std::string> texts = {"alpha", "beta", "gamma"};
  FunctionChat chat([](const std::string& text) -> std::string {
    if (text == "alpha") return "Yes. The TEXT mentions it.";
    if (text == "beta") return "No. The TEXT expresses something else.";
    return "Maybe";
  });
  const std::vector<Theme> themes = {{0, "theme zero", 0.9, true, std::nullopt},
                                     {5, "theme five", 0.8, true, std::nullopt}};
  std::size_t last_done = 0;
  const auto m = annotate_matrix(themes, {"a", "b", "c"}, texts, chat, {"model", 3},
                                 [&](std::size_t done, std::size_t total) {
                                   EXPECT_EQ(total, 6u);
                                   last_done = std::max(last_done, done);
                                 });
  EXPECT_EQ(last_done, 6u);
  ASSERT_EQ(m.rows(), 3u);
  ASSERT_EQ(m.cols(), 2u);
  EXPECT_EQ(m.values(0, 0), 1);
  EXPECT_EQ(m.values(0, 1), 1);
  EXPECT_EQ(m.values(1, 0), 0);
  EXPECT_EQ(m.values(2, 1), 0);
  EXPECT_EQ(m.row_ids, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(m.themes[1].latent_index, 5);
  EXPECT_THROW(annotate_matrix({}, {"a"}, {"alpha"}, chat), Error);
  EXPECT_THROW(annotate_matrix(themes, {"a", "b"}, {"alpha"}, chat), Error);
}

TEST(Kappa, HandComputedTable) {
  std::vector<std::uint8_t> a, b;
  auto add = [&](int n, int x, int y) {
    for (int i = 0; i < n; ++i) {
      a.push_back(static_cast<std::uint8_t>(x));
      b.push_back(static_cast<std::uint8_t>(y));
    }
  };
  add(45, 1, 1);
  add(5, 1, 0);
  add(15, 0, 1);
  add(35, 0, 0);
  EXPECT_NEAR(cohens_kappa(a, b), 0.60, 1e-15);
}

TEST(Kappa, EdgeCases) {
  EXPECT_EQ(cohens_kappa({1, 0, 1, 0}, {1, 0, 1, 0}), 1.0);
  EXPECT_EQ(cohens_kappa({1, 1, 1}, {1, 1, 1}), 1.0);  // chance agreement 1, identical
  EXPECT_EQ(cohens_kappa({0, 0}, {0, 0}), 1.0);
  EXPECT_EQ(cohens_kappa({1, 1}, {0, 0}), 0.0);
  EXPECT_EQ(cohens_kappa({1, 0}, {0, 1}), -1.0);
  EXPECT_THROW(cohens_kappa({1, 0}, {1}), Error);
  EXPECT_THROW(cohens_kappa({}, {}), Error);
  EXPECT_THROW(cohens_kappa({2}, {1}), Error);
}

TEST(Kappa, IndependentRatersNearZero) {
  Rng rng(17);
  std::vector<std::uint8_t> a(10000), b(10000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform() < 0.5;
    b[i] = rng.uniform() < 0.5;
  }
  const double k = cohens_kappa(a, b);
  EXPECT_LT(std::abs(k), 0.05);
  EXPECT_GE(k, -1.0);
}

TEST(Agreement, ReportFields) {
  std::vector<std::uint8_t> human(1000, 0), model(1000, 0);
  for (int i = 0; i < 130; ++i) human[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < 131; ++i) model[static_cast<std::size_t>(i)] = 1;
  const auto r = agreement_report({model}, {human});
  EXPECT_NEAR(r.human_positive_rate, 13.0, 1e-12);
  EXPECT_NEAR(r.model_positive_rate, 13.1, 1e-12);
  EXPECT_NEAR(r.delta_pp, 0.1, 1e-12);
  ASSERT_EQ(r.kappa.size(), 1u);
  EXPECT_EQ(r.median_kappa, r.kappa[0]);

  const auto same = agreement_report({{1, 0, 1}, {0, 0, 1}}, {{1, 0, 1}, {0, 0, 1}});
  EXPECT_EQ(same.median_kappa, 1.0);
  EXPECT_EQ(same.delta_pp, 0.0);
  EXPECT_THROW(agreement_report({{1}}, {}), Error);
}

TEST(InterpretAll, EveryLatentGetsExactlyOneOutcome) {
  // Latent 0 fires on church texts, latent 1 never fires, latent 2 fires on
  // food texts and is style-excluded by config.
  std::vector<std::string> texts;
  ActivationMatrix acts;
  acts.values = Eigen::MatrixXd::Zero(60, 3);
  for (int i = 0; i < 60; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (i % 3 == 0) {
      texts.push_back("I go to church " + std::to_string(i));
      acts.values(row, 0) = 1.0 + i;
    } else if (i % 3 == 1) {
      texts.push_back("we love food " + std::to_string(i));
      acts.values(row, 2) = 2.0;
    } else {
      texts.push_back("nothing to say " + std::to_string(i));
    }
    acts.row_ids.push_back("r" + std::to_string(i));
  }
  const KeywordRules rules = {{"mentions church", {"church"}}, {"mentions food", {"food"}}};
  auto chat = mock_annotator(rules);
  InterpretationOptions opts;
  opts.n_pos = 5;
  opts.n_zero = 5;
  opts.fidelity.n_pos = 20;
  opts.fidelity.n_neg = 20;
  opts.style_exclusions = {2};
  opts.seed = 3;
  const auto r = interpret_all(Axis::Race, acts, texts, *chat, *chat, opts);
  ASSERT_EQ(r.latents.size(), 3u);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(r.latents[static_cast<std::size_t>(j)].latent_index, j);
  EXPECT_EQ(r.latents[0].status, LatentStatus::Retained);
  ASSERT_TRUE(r.latents[0].theme.has_value());
  EXPECT_EQ(r.latents[0].theme->text, "mentions church");
  EXPECT_EQ(r.latents[0].theme->fidelity, 1.0);
  EXPECT_EQ(r.latents[1].status, LatentStatus::Uninterpretable);
  EXPECT_FALSE(r.latents[1].theme.has_value());
  EXPECT_EQ(r.latents[2].status, LatentStatus::Excluded);
  EXPECT_EQ(r.latents[2].theme->exclusion_reason, ExclusionReason::StyleOnly);
  ASSERT_EQ(r.retained.size(), 1u);
  EXPECT_EQ(r.retained[0].latent_index, 0);
}

TEST(StyleHeuristic, FlagsWritingStyleThemes) {
  EXPECT_TRUE(looks_style_only("answers with one-word labels"));
  EXPECT_FALSE(looks_style_only("mentions religious faith or church"));
}

}  // namespace
}  // namespace iyow
