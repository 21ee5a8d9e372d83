#pragma once

// Run configuration: one JSON file describing the corpus, providers, model
// settings and analyses. Relative paths resolve against the file's directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "iyow/corpus.hpp"
#include "iyow/providers.hpp"
#include "iyow/sae.hpp"

namespace iyow {

enum class TextSource { Self, Perceived };

struct EmbeddingSettings {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "text-embedding-3-large";
  std::string credential_env = "OPENAI_API_KEY";
  std::size_t dimension = 3072;
  std::size_t batch_size = 128;
};

struct ChatSettings {
  std::string base_url = "https://api.openai.com/v1";
  std::string credential_env = "OPENAI_API_KEY";
  std::string interpretation_model = "gpt-4o";
  std::string fidelity_model = "gpt-4o-mini";
  std::string annotation_model = "gpt-4.1-mini";
};

struct ProviderSettings {
  EmbeddingSettings embedding;
  ChatSettings chat;
  std::size_t max_in_flight = 8;
  RetryPolicy retry;
};

struct InterpretationSettings {
  int n_pos = 10;
  int n_zero = 10;
  int n_candidates = 3;
  double temperature = 0.7;
  int fidelity_n_pos = 100;
  int fidelity_n_neg = 100;
  double min_fidelity = 0.50;
};

struct StatsSettings {
  double fdr = 0.05;
  // Outcomes to analyze; empty means every configured outcome.
  std::vector<std::string> outcomes;
};

struct ReportSettings {
  std::size_t min_group_size = 10;
  bool svg = true;
};

struct MockSettings {
  std::size_t embedding_dimension = 64;
  KeywordRules keyword_rules;
};

struct RunConfig {
  std::filesystem::path config_path;
  std::filesystem::path corpus_path;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  std::vector<Axis> axes{std::begin(kAllAxes), std::end(kAllAxes)};
  TextSource text_source = TextSource::Self;
  std::vector<CategoryScheme> schemes;
  std::vector<OutcomeSpec> outcomes;
  ProviderSettings providers;
  SaeConfig sae_default;
  std::map<Axis, SaeConfig> sae_overrides;
  InterpretationSettings interpretation;
  std::map<Axis, std::set<int>> style_exclusions;
  StatsSettings stats;
  ReportSettings report;
  MockSettings mock;
  std::uint64_t seed = 0;

  // Effective SAE settings for an axis, seeded from the run seed.
  SaeConfig sae_for(Axis axis) const;
  std::vector<std::string> analyzed_outcomes() const;
  const OutcomeSpec* outcome_spec(std::string_view name) const;
};

// Throws ConfigError whose message starts with the offending key path,
// e.g. "sae.race.latent_dim: must be a positive integer".
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

std::string_view to_string(TextSource source);

}  // namespace iyow
