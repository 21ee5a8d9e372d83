#pragma once

// Staged, resumable pipeline: embed -> train -> interpret -> annotate ->
// analyze -> report, run independently per identity axis.
//
// Each stage writes a manifest under <out>/<axis>/.state/ recording the
// hashes of its inputs and outputs. A stage is skipped when its current
// input hashes equal the recorded ones and every recorded output is still
// present with the recorded hash.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iyow/cache.hpp"
#include "iyow/config.hpp"
#include "iyow/providers.hpp"

namespace iyow {

enum class Stage { Embed, Train, Interpret, Annotate, Analyze, Report };

inline constexpr Stage kAllStages[] = {Stage::Embed,    Stage::Train,   Stage::Interpret,
                                       Stage::Annotate, Stage::Analyze, Stage::Report};

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view s);
// Comma-separated stage names, deduplicated and returned in pipeline order;
// throws ConfigError on unknown names.
std::vector<Stage> parse_stage_list(std::string_view list);

struct ProviderSet {
  std::shared_ptr<CachingEmbedder> embedder;
  std::shared_ptr<CachingChat> interpreter;
  std::shared_ptr<CachingChat> annotator;  // may alias interpreter

  // Backend requests issued so far, retries included.
  std::size_t backend_calls() const;
};

// Mock providers derive their seed from the run seed.
ProviderSet make_providers(const RunConfig& config, bool mock, std::shared_ptr<Cache> cache);

struct RunOptions {
  std::vector<Stage> stages{std::begin(kAllStages), std::end(kAllStages)};
  std::optional<Axis> axis;  // restrict to one configured axis
  bool dry_run = false;
  bool mock_providers = false;
  std::ostream* log = nullptr;
  // Defaults to a DirectoryCache at config.cache_dir.
  std::shared_ptr<Cache> cache;
  // Replaces the providers built from the config.
  std::shared_ptr<ProviderSet> providers;
};

enum class StageStatus { Ran, Skipped, Planned };

std::string_view to_string(StageStatus status);

struct StageRecord {
  Axis axis = Axis::Race;
  Stage stage = Stage::Embed;
  StageStatus status = StageStatus::Ran;
  std::string detail;
};

struct RunSummary {
  std::vector<StageRecord> stages;
  std::size_t provider_calls = 0;
};

// Throws ConfigError for unusable options and StageError when a stage
// fails; artifacts written by earlier stages are left in place.
RunSummary run_pipeline(const RunConfig& config, const RunOptions& options);

std::filesystem::path axis_output_dir(const RunConfig& config, Axis axis);

// Output files of a stage relative to the axis directory. Optional outputs
// (adds_info_odds.csv, the SVG chart) are listed too.
std::vector<std::string> stage_outputs(Stage stage);

}  // namespace iyow
