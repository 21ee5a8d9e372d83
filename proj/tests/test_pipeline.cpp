#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <map>
#include <sstream>

#include "iyow/error.hpp"
#include "iyow/pipeline.hpp"
#include "iyow/util.hpp"
#include "support/synthetic.hpp"

namespace iyow {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Small, quick variant of the synthetic survey run.
RunConfig small_run(const fs::path& dir, std::uint64_t seed = 5) {
  const auto survey = testing::make_survey(seed, 240);
  testing::write_survey(survey, seed, dir);
  json cfg = json::parse(testing::survey_config_json(seed));
  cfg["sae"]["default"]["epochs"] = 30;
  write_file_atomic(dir / "config.json", cfg.dump(2));
  return load_config(dir / "config.json");
}

// Relative path -> contents for every artifact outside .state.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel.find(".state/") != std::string::npos) continue;
    out[rel] = read_file(e.path());
  }
  return out;
}

std::map<Stage, StageStatus> statuses(const RunSummary& s) {
  std::map<Stage, StageStatus> out;
  for (const auto& r : s.stages) out[r.stage] = r.status;
  return out;
}

TEST(StageNames, ParseAndReject) {
  EXPECT_EQ(parse_stage_list("embed,train"), (std::vector<Stage>{Stage::Embed, Stage::Train}));
  // Listed order does not matter; stages always run in pipeline order.
  EXPECT_EQ(parse_stage_list("report, analyze"), (std::vector<Stage>{Stage::Analyze, Stage::Report}));
  EXPECT_EQ(parse_stage_list("train,train"), std::vector<Stage>{Stage::Train});
  EXPECT_THROW(parse_stage_list("embed,bake"), ConfigError);
  for (Stage s : kAllStages) EXPECT_EQ(parse_stage(to_string(s)), s);
}

TEST(Pipeline, MissingDependencyNamesFileAndProducer) {
  const auto dir = testing::scratch_dir("pipe-missing");
  const RunConfig cfg = small_run(dir);
  RunOptions opts;
  opts.stages = {Stage::Analyze};
  opts.mock_providers = true;
  opts.cache = std::make_shared<MemoryCache>();
  try {
    run_pipeline(cfg, opts);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    const std::string msg = e.what();
    EXPECT_EQ(e.stage(), "analyze");
    EXPECT_NE(msg.find("missing dependency"), std::string::npos) << msg;
    EXPECT_NE(msg.find("themes.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'interpret' stage"), std::string::npos) << msg;
  }
  fs::remove_all(dir);
}

TEST(Pipeline, DryRunWritesNothing) {
  const auto dir = testing::scratch_dir("pipe-dry");
  const RunConfig cfg = small_run(dir);
  std::ostringstream log;
  RunOptions opts;
  opts.dry_run = true;
  opts.mock_providers = true;
  opts.log = &log;
  const RunSummary s = run_pipeline(cfg, opts);
  EXPECT_FALSE(fs::exists(cfg.output_dir));
  EXPECT_FALSE(fs::exists(cfg.cache_dir));
  ASSERT_EQ(s.stages.size(), 6u);
  for (const auto& r : s.stages) EXPECT_EQ(r.status, StageStatus::Planned);
  EXPECT_EQ(s.provider_calls, 0u);
  EXPECT_NE(log.str().find("would run"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Pipeline, IdempotentAndResumable) {
  const auto dir = testing::scratch_dir("pipe-resume");
  const RunConfig cfg = small_run(dir);
  RunOptions opts;
  opts.mock_providers = true;
  opts.cache = std::make_shared<MemoryCache>();
  const RunSummary first = run_pipeline(cfg, opts);
  EXPECT_GT(first.provider_calls, 0u);
  for (const auto& r : first.stages) EXPECT_EQ(r.status, StageStatus::Ran);
  const auto root = axis_output_dir(cfg, Axis::Race);
  const auto before = snapshot(root);
  for (const char* f : {"embeddings.bin", "sae.model", "loss.csv", "themes.csv", "annotations.csv",
                        "stats/nested_f.csv", "stats/theme_r2.csv", "stats/theme_r2_medians.csv",
                        "report/summary.md"}) {
    EXPECT_TRUE(before.count(f)) << f;
  }

  // Unchanged inputs: every stage skipped, no bytes change.
  const RunSummary again = run_pipeline(cfg, opts);
  for (const auto& r : again.stages) EXPECT_EQ(r.status, StageStatus::Skipped) << to_string(r.stage);
  EXPECT_EQ(again.provider_calls, 0u);
  EXPECT_EQ(snapshot(root), before);

  // Deleting one stage's output regenerates that stage only; its
  // regenerated bytes match, so dependents stay up to date.
  fs::remove(root / "annotations.csv");
  const auto st = statuses(run_pipeline(cfg, opts));
  EXPECT_EQ(st.at(Stage::Embed), StageStatus::Skipped);
  EXPECT_EQ(st.at(Stage::Train), StageStatus::Skipped);
  EXPECT_EQ(st.at(Stage::Interpret), StageStatus::Skipped);
  EXPECT_EQ(st.at(Stage::Annotate), StageStatus::Ran);
  EXPECT_EQ(st.at(Stage::Analyze), StageStatus::Skipped);
  EXPECT_EQ(snapshot(root), before);

  // A tampered output is detected by its hash.
  write_file_atomic(root / "stats" / "nested_f.csv", "tampered");
  EXPECT_EQ(statuses(run_pipeline(cfg, opts)).at(Stage::Analyze), StageStatus::Ran);
  EXPECT_EQ(snapshot(root), before);
  fs::remove_all(dir);
}

TEST(Pipeline, SettingChangeRerunsOnlyAffectedStages) {
  const auto dir = testing::scratch_dir("pipe-settings");
  RunConfig cfg = small_run(dir);
  RunOptions opts;
  opts.mock_providers = true;
  opts.cache = std::make_shared<MemoryCache>();
  run_pipeline(cfg, opts);
  const auto svg = axis_output_dir(cfg, Axis::Race) / "report" / "theme_categories.svg";
  EXPECT_TRUE(fs::exists(svg));
  cfg.report.min_group_size = 1000;
  const auto st = statuses(run_pipeline(cfg, opts));
  EXPECT_EQ(st.at(Stage::Analyze), StageStatus::Skipped);
  EXPECT_EQ(st.at(Stage::Report), StageStatus::Ran);
  // Every category is now below the threshold, so no chart is drawn.
  EXPECT_FALSE(fs::exists(svg));
  fs::remove_all(dir);
}

TEST(Pipeline, UnknownAxisIsAConfigError) {
  const auto dir = testing::scratch_dir("pipe-axis");
  const RunConfig cfg = small_run(dir);
  RunOptions opts;
  opts.axis = Axis::Gender;
  opts.mock_providers = true;
  EXPECT_THROW(run_pipeline(cfg, opts), ConfigError);
  fs::remove_all(dir);
}

TEST(Pipeline, CorpusFailureIsAStageError) {
  const auto dir = testing::scratch_dir("pipe-corpus");
  RunConfig cfg = small_run(dir);
  cfg.corpus_path = dir / "does-not-exist.jsonl";
  RunOptions opts;
  opts.mock_providers = true;
  EXPECT_THROW(run_pipeline(cfg, opts), StageError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace iyow
