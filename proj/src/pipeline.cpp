#include "iyow/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>

#include "iyow/artifacts.hpp"
#include "iyow/error.hpp"
#include "iyow/report.hpp"
#include "iyow/sae.hpp"
#include "iyow/stats.hpp"
#include "iyow/themes.hpp"
#include "iyow/util.hpp"

namespace iyow {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Embed: return "embed";
    case Stage::Train: return "train";
    case Stage::Interpret: return "interpret";
    case Stage::Annotate: return "annotate";
    case Stage::Analyze: return "analyze";
    case Stage::Report: return "report";
  }
  return "";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::vector<Stage> parse_stage_list(std::string_view list) {
  std::set<Stage> chosen;
  for (const auto& part : split(list, ',')) {
    const std::string name = trim(part);
    if (name.empty()) continue;
    auto st = parse_stage(name);
    if (!st) {
      throw ConfigError("unknown stage '" + name + "' (expected embed, train, interpret, annotate, analyze, report)");
    }
    chosen.insert(*st);
  }
  if (chosen.empty()) throw ConfigError("no stages selected");
  return {chosen.begin(), chosen.end()};
}

std::string_view to_string(StageStatus status) {
  switch (status) {
    case StageStatus::Ran: return "ran";
    case StageStatus::Skipped: return "up to date";
    case StageStatus::Planned: return "would run";
  }
  return "";
}

std::size_t ProviderSet::backend_calls() const {
  std::size_t n = embedder ? embedder->backend_calls() : 0;
  if (interpreter) n += interpreter->backend_calls();
  if (annotator && annotator != interpreter) n += annotator->backend_calls();
  return n;
}

namespace {

std::uint64_t mock_seed(const RunConfig& c) { return derive_seed(c.seed, "mock-embedding"); }

}  // namespace

ProviderSet make_providers(const RunConfig& config, bool mock, std::shared_ptr<Cache> cache) {
  ProviderSet p;
  const auto& ps = config.providers;
  if (mock) {
    p.embedder = mock_embedder(mock_seed(config), config.mock.embedding_dimension, cache);
    p.interpreter = mock_annotator(config.mock.keyword_rules, cache);
    p.annotator = p.interpreter;
    return p;
  }
  EmbedderOptions eo;
  eo.model_id = ps.embedding.model;
  eo.dimension = ps.embedding.dimension;
  eo.batch_size = ps.embedding.batch_size;
  eo.max_in_flight = ps.max_in_flight;
  eo.retry = ps.retry;
  p.embedder = std::make_shared<CachingEmbedder>(
      make_http_embedding_backend({ps.embedding.base_url, ps.embedding.credential_env}), cache, eo);
  ChatOptions co;
  co.max_in_flight = ps.max_in_flight;
  co.retry = ps.retry;
  p.interpreter = std::make_shared<CachingChat>(make_http_chat_backend({ps.chat.base_url, ps.chat.credential_env}),
                                                cache, co);
  p.annotator = p.interpreter;
  return p;
}

fs::path axis_output_dir(const RunConfig& config, Axis axis) { return config.output_dir / std::string(to_string(axis)); }

std::vector<std::string> stage_outputs(Stage stage) {
  switch (stage) {
    case Stage::Embed: return {"embeddings.bin"};
    case Stage::Train: return {"sae.model", "loss.csv"};
    case Stage::Interpret: return {"themes.csv", "candidates.csv"};
    case Stage::Annotate: return {"annotations.csv"};
    case Stage::Analyze:
      return {"stats/nested_f.csv", "stats/theme_r2.csv", "stats/theme_r2_medians.csv", "stats/theme_coefficients.csv",
              "stats/adds_info_odds.csv"};
    case Stage::Report:
      return {"report/summary.md", "report/theme_category_counts.csv", "report/theme_categories.svg"};
  }
  return {};
}

namespace {

// Files a stage reads from earlier stages.
std::vector<std::string> stage_dependencies(Stage stage) {
  switch (stage) {
    case Stage::Embed: return {};
    case Stage::Train: return {"embeddings.bin"};
    case Stage::Interpret: return {"embeddings.bin", "sae.model"};
    case Stage::Annotate: return {"themes.csv"};
    case Stage::Analyze: return {"themes.csv", "annotations.csv"};
    case Stage::Report:
      return {"themes.csv", "annotations.csv", "stats/nested_f.csv", "stats/theme_r2_medians.csv"};
  }
  return {};
}

Stage producer_of(const std::string& file) {
  for (Stage s : kAllStages) {
    for (const auto& f : stage_outputs(s)) {
      if (f == file) return s;
    }
  }
  throw Error("no stage produces '" + file + "'");
}

json scheme_json(const CategoryScheme& s) {
  return {{"axis", to_string(s.axis)},
          {"labels", s.labels},
          {"multiselect", s.multiselect},
          {"reference", s.reference_label ? json(*s.reference_label) : json()}};
}

json outcome_json(const OutcomeSpec& o) {
  json scale = json::array();
  for (const auto& [a, c] : o.scale_map) scale.push_back({a, c});
  return {{"name", o.name}, {"scale", scale}, {"standardize", o.standardize}};
}

json sae_json(const SaeConfig& c) {
  return {{"latent_dim", c.latent_dim},     {"sparsity", c.sparsity},         {"epochs", c.epochs},
          {"batch_size", c.batch_size},     {"learning_rate", c.learning_rate}, {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},     {"adam_epsilon", c.adam_epsilon}, {"seed", c.seed},
          {"dead_latent_patience", c.dead_latent_patience}};
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct AxisData {
  Corpus corpus;
  std::vector<std::string> ids;
  std::vector<std::string> texts;
};

AxisData axis_data(const Corpus& all, Axis axis, TextSource source) {
  const Corpus pool = source == TextSource::Perceived ? filter_discordant(all, axis) : all;
  std::vector<std::size_t> rows;
  AxisData d;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Response& r = pool[i];
    const auto& texts = source == TextSource::Perceived ? r.perceived_texts : r.axis_texts;
    auto t = texts.find(axis);
    auto c = r.categories.find(axis);
    if (t == texts.end() || trim(t->second).empty() || c == r.categories.end() || c->second.empty()) continue;
    rows.push_back(i);
    d.ids.push_back(r.id);
    d.texts.push_back(t->second);
  }
  d.corpus = pool.subset(rows);
  return d;
}

using Files = std::map<std::string, std::string>;

struct StageResult {
  Files files;
  std::string detail;
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt), log_(opt.log ? *opt.log : null_) {
    null_.setstate(std::ios_base::badbit);
  }

  RunSummary run() {
    std::vector<Axis> axes = cfg_.axes;
    if (opt_.axis) {
      if (std::find(axes.begin(), axes.end(), *opt_.axis) == axes.end()) {
        throw ConfigError("axis '" + std::string(to_string(*opt_.axis)) + "' is not listed in the config");
      }
      axes = {*opt_.axis};
    }
    if (opt_.stages.empty()) throw ConfigError("no stages selected");
    load_corpus_once();
    if (opt_.providers) calls_before_ = opt_.providers->backend_calls();

    for (Axis axis : axes) {
      AxisData data = axis_data(corpus_, axis, cfg_.text_source);
      log_ << "[" << to_string(axis) << "] " << data.ids.size() << " responses with " << to_string(cfg_.text_source)
           << " text\n";
      std::set<std::string> pending;  // dry run: files an earlier planned stage would write
      for (Stage stage : kAllStages) {
        if (std::find(opt_.stages.begin(), opt_.stages.end(), stage) == opt_.stages.end()) continue;
        run_stage(axis, stage, data, pending);
      }
    }
    if (providers_) summary_.provider_calls = providers_->backend_calls() - calls_before_;
    return summary_;
  }

 private:
  void load_corpus_once() {
    try {
      corpus_ = load_corpus(cfg_.corpus_path, cfg_.schemes, cfg_.outcomes);
      json settings = {{"schemes", json::array()}, {"outcomes", json::array()}};
      for (const auto& s : cfg_.schemes) settings["schemes"].push_back(scheme_json(s));
      for (const auto& o : cfg_.outcomes) settings["outcomes"].push_back(outcome_json(o));
      corpus_hash_ = sha256_hex(sha256_file(cfg_.corpus_path) + settings.dump());
    } catch (const std::exception& e) {
      throw StageError("load", e.what());
    }
    log_ << "corpus: " << corpus_.size() << " responses loaded, " << corpus_.rejected().size() << " rejected\n";
    for (const auto& d : corpus_.rejected()) {
      log_ << "  rejected line " << d.line << (d.id.empty() ? "" : " (" + d.id + ")") << ": " << d.message << "\n";
    }
  }

  ProviderSet& providers() {
    if (!providers_) {
      if (opt_.providers) {
        providers_ = opt_.providers;
      } else {
        auto cache = opt_.cache ? opt_.cache : std::make_shared<DirectoryCache>(cfg_.cache_dir);
        providers_ = std::make_shared<ProviderSet>(make_providers(cfg_, opt_.mock_providers, cache));
      }
    }
    return *providers_;
  }

  json embedding_identity() const {
    if (opt_.mock_providers) return {{"kind", "mock"}, {"seed", mock_seed(cfg_)}, {"dimension", cfg_.mock.embedding_dimension}};
    const auto& e = cfg_.providers.embedding;
    return {{"kind", "http"}, {"base_url", e.base_url}, {"model", e.model}, {"dimension", e.dimension}};
  }

  json chat_identity() const {
    if (opt_.mock_providers) {
      json rules = json::array();
      for (const auto& [theme, words] : cfg_.mock.keyword_rules) rules.push_back({theme, words});
      return {{"kind", "mock"}, {"rules", rules}};
    }
    return {{"kind", "http"}, {"base_url", cfg_.providers.chat.base_url}};
  }

  json stage_settings(Stage stage, Axis axis) const {
    const std::string ax(to_string(axis));
    switch (stage) {
      case Stage::Embed:
        return {{"axis", ax}, {"text_source", to_string(cfg_.text_source)}, {"provider", embedding_identity()}};
      case Stage::Train: return {{"sae", sae_json(cfg_.sae_for(axis))}};
      case Stage::Interpret: {
        const auto& s = cfg_.interpretation;
        auto ex = cfg_.style_exclusions.find(axis);
        return {{"axis", ax},
                {"text_source", to_string(cfg_.text_source)},
                {"provider", chat_identity()},
                {"interpretation_model", cfg_.providers.chat.interpretation_model},
                {"fidelity_model", cfg_.providers.chat.fidelity_model},
                {"n_pos", s.n_pos},
                {"n_zero", s.n_zero},
                {"n_candidates", s.n_candidates},
                {"temperature", s.temperature},
                {"fidelity_n_pos", s.fidelity_n_pos},
                {"fidelity_n_neg", s.fidelity_n_neg},
                {"min_fidelity", s.min_fidelity},
                {"style_exclusions", ex == cfg_.style_exclusions.end() ? json::array() : json(ex->second)},
                {"seed", cfg_.seed}};
      }
      case Stage::Annotate:
        return {{"axis", ax},
                {"text_source", to_string(cfg_.text_source)},
                {"provider", chat_identity()},
                {"annotation_model", cfg_.providers.chat.annotation_model}};
      case Stage::Analyze: {
        json outcomes = json::array();
        for (const auto& name : cfg_.analyzed_outcomes()) outcomes.push_back(name);
        return {{"axis", ax}, {"fdr", cfg_.stats.fdr}, {"outcomes", outcomes}};
      }
      case Stage::Report:
        return {{"axis", ax}, {"min_group_size", cfg_.report.min_group_size}, {"svg", cfg_.report.svg}};
    }
    return {};
  }

  void run_stage(Axis axis, Stage stage, const AxisData& data, std::set<std::string>& pending) {
    const fs::path dir = axis_output_dir(cfg_, axis);
    const std::string tag = "[" + std::string(to_string(axis)) + "] " + std::string(to_string(stage));

    // Dependencies must exist (or, in a dry run, be planned by an earlier stage).
    bool deps_pending = false;
    for (const auto& dep : stage_dependencies(stage)) {
      if (fs::exists(dir / dep)) continue;
      if (opt_.dry_run && pending.count(dep)) {
        deps_pending = true;
        continue;
      }
      throw StageError(std::string(to_string(stage)),
                       "[" + std::string(to_string(axis)) + "] missing dependency '" + (dir / dep).string() +
                           "'; run the '" + std::string(to_string(producer_of(dep))) + "' stage first");
    }

    json inputs;
    if (!deps_pending) {
      inputs["corpus"] = corpus_hash_;
      inputs["settings"] = sha256_hex(stage_settings(stage, axis).dump());
      for (const auto& dep : stage_dependencies(stage)) inputs[dep] = sha256_file(dir / dep);
    }
    const fs::path manifest_path = dir / ".state" / (std::string(to_string(stage)) + ".json");
    const bool up_to_date = !deps_pending && manifest_current(manifest_path, inputs, dir);

    StageRecord rec{axis, stage, StageStatus::Skipped, ""};
    if (up_to_date) {
      log_ << tag << ": up to date\n";
      summary_.stages.push_back(rec);
      return;
    }
    if (opt_.dry_run) {
      rec.status = StageStatus::Planned;
      for (const auto& f : stage_outputs(stage)) pending.insert(f);
      log_ << tag << ": would run\n";
      summary_.stages.push_back(rec);
      return;
    }

    StageResult result;
    try {
      result = execute(stage, axis, data, dir);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(std::string(to_string(stage)), "[" + std::string(to_string(axis)) + "] " + e.what());
    }

    json outputs = json::object();
    for (const auto& [rel, contents] : result.files) {
      const fs::path p = dir / rel;
      fs::create_directories(p.parent_path());
      write_file_atomic(p, contents);
      outputs[rel] = sha256_hex(contents);
    }
    for (const auto& rel : stage_outputs(stage)) {
      if (!result.files.count(rel)) fs::remove(dir / rel);
    }
    json manifest = {{"stage", to_string(stage)},
                     {"inputs", inputs},
                     {"outputs", outputs},
                     {"completed_at", utc_timestamp()}};
    fs::create_directories(manifest_path.parent_path());
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");

    rec.status = StageStatus::Ran;
    rec.detail = result.detail;
    log_ << tag << ": ran" << (result.detail.empty() ? "" : " (" + result.detail + ")") << "\n";
    summary_.stages.push_back(rec);
  }

  static bool manifest_current(const fs::path& path, const json& inputs, const fs::path& dir) {
    if (!fs::exists(path)) return false;
    json m;
    try {
      m = json::parse(read_file(path));
    } catch (const std::exception&) {
      return false;
    }
    if (!m.contains("inputs") || m["inputs"] != inputs || !m.contains("outputs") || !m["outputs"].is_object()) {
      return false;
    }
    for (const auto& [rel, hash] : m["outputs"].items()) {
      const fs::path p = dir / rel;
      if (!fs::exists(p) || !hash.is_string() || sha256_file(p) != hash.get<std::string>()) return false;
    }
    return true;
  }

  StageResult execute(Stage stage, Axis axis, const AxisData& data, const fs::path& dir) {
    switch (stage) {
      case Stage::Embed: return embed(data);
      case Stage::Train: return train_stage(axis, dir);
      case Stage::Interpret: return interpret(axis, data, dir);
      case Stage::Annotate: return annotate(data, dir);
      case Stage::Analyze: return analyze(axis, data, dir);
      case Stage::Report: return report(axis, data, dir);
    }
    return {};
  }

  StageResult embed(const AxisData& data) {
    if (data.ids.empty()) throw Error("no responses with text on this axis");
    const auto vectors = providers().embedder->embed_batch(data.texts);
    artifacts::EmbeddingStore store;
    store.row_ids = data.ids;
    const auto d = static_cast<Eigen::Index>(vectors.front().values.size());
    store.values.resize(static_cast<Eigen::Index>(vectors.size()), d);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      store.values.row(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const Eigen::RowVectorXd>(vectors[i].values.data(), d);
    }
    return {{{"embeddings.bin", artifacts::serialize_embeddings(store)}},
            std::to_string(vectors.size()) + " texts, dimension " + std::to_string(d)};
  }

  static artifacts::EmbeddingStore load_store(const fs::path& dir, const AxisData& data) {
    auto store = artifacts::deserialize_embeddings(read_file(dir / "embeddings.bin"));
    if (store.row_ids != data.ids) {
      throw Error("embeddings.bin does not match the responses on this axis; rerun the embed stage");
    }
    return store;
  }

  StageResult train_stage(Axis axis, const fs::path& dir) {
    const auto store = artifacts::deserialize_embeddings(read_file(dir / "embeddings.bin"));
    const auto result = train(store.values, cfg_.sae_for(axis));
    return {{{"sae.model", serialize_model(result.model)}, {"loss.csv", loss_trace_csv(result.loss_trace)}},
            "final loss " + format_sig(result.loss_trace.back(), 4) + ", " +
                std::to_string(result.reinitialized_latents) + " latent reinitializations"};
  }

  StageResult interpret(Axis axis, const AxisData& data, const fs::path& dir) {
    const auto store = load_store(dir, data);
    const SaeModel model = load_model(dir / "sae.model");
    const ActivationMatrix acts = activations(model, store.values, store.row_ids);
    const auto& s = cfg_.interpretation;
    InterpretationOptions o;
    o.n_pos = s.n_pos;
    o.n_zero = s.n_zero;
    o.candidates.model_id = cfg_.providers.chat.interpretation_model;
    o.candidates.n_candidates = s.n_candidates;
    o.candidates.temperature = s.temperature;
    o.fidelity.n_pos = s.fidelity_n_pos;
    o.fidelity.n_neg = s.fidelity_n_neg;
    o.fidelity.annotator.model_id = cfg_.providers.chat.fidelity_model;
    o.fidelity.annotator.max_workers = cfg_.providers.max_in_flight;
    o.min_fidelity = s.min_fidelity;
    if (auto it = cfg_.style_exclusions.find(axis); it != cfg_.style_exclusions.end()) o.style_exclusions = it->second;
    o.seed = derive_seed(cfg_.seed, "interpret/" + std::string(to_string(axis)));
    auto& p = providers();
    const auto result = interpret_all(axis, acts, data.texts, *p.interpreter, *p.annotator, o);
    return {{{"themes.csv", artifacts::themes_csv(result)}, {"candidates.csv", artifacts::candidates_csv(result)}},
            std::to_string(result.retained.size()) + " of " + std::to_string(result.latents.size()) +
                " latents retained"};
  }

  static std::vector<Theme> load_retained(const fs::path& dir) {
    return artifacts::retained_themes(artifacts::parse_themes_csv(read_file(dir / "themes.csv")));
  }

  static AnnotationMatrix load_annotations(const fs::path& dir, const AxisData& data) {
    auto Z = artifacts::parse_annotations_csv(read_file(dir / "annotations.csv"), load_retained(dir));
    if (Z.row_ids != data.ids) {
      throw Error("annotations.csv does not match the responses on this axis; rerun the annotate stage");
    }
    return Z;
  }

  StageResult annotate(const AxisData& data, const fs::path& dir) {
    const auto themes = load_retained(dir);
    AnnotationMatrix Z;
    if (themes.empty()) {
      Z.row_ids = data.ids;
      Z.values = BinaryMatrix::Zero(static_cast<Eigen::Index>(data.ids.size()), 0);
    } else {
      AnnotatorOptions ao;
      ao.model_id = cfg_.providers.chat.annotation_model;
      ao.max_workers = cfg_.providers.max_in_flight;
      Z = annotate_matrix(themes, data.ids, data.texts, *providers().annotator, ao);
    }
    return {{{"annotations.csv", artifacts::annotations_csv(Z)}},
            std::to_string(Z.rows()) + " x " + std::to_string(Z.cols()) + " matrix"};
  }

  StageResult analyze(Axis axis, const AxisData& data, const fs::path& dir) {
    const AnnotationMatrix Z = load_annotations(dir, data);
    const Corpus& corpus = data.corpus;
    const std::string identity(to_string(axis));

    std::vector<artifacts::NestedFRow> nested;
    std::vector<std::pair<std::string, std::vector<ThemeEffect>>> effects;
    std::vector<double> pvals;
    std::vector<std::size_t> tested;
    for (const auto& name : cfg_.analyzed_outcomes()) {
      artifacts::NestedFRow row;
      row.identity = identity;
      row.outcome = name;
      const OutcomeSpec* spec = cfg_.outcome_spec(name);
      const bool standardize = spec ? spec->standardize : true;
      try {
        if (Z.cols() == 0) throw NumericError("no retained themes");
        const OutcomeColumn oc = outcome_column(corpus, name, standardize);
        const Corpus sub = corpus.subset(oc.rows);
        AnnotationMatrix Zs;
        Zs.themes = Z.themes;
        Zs.values.resize(static_cast<Eigen::Index>(oc.rows.size()), Z.values.cols());
        for (std::size_t i = 0; i < oc.rows.size(); ++i) {
          Zs.row_ids.push_back(Z.row_ids[oc.rows[i]]);
          Zs.values.row(static_cast<Eigen::Index>(i)) = Z.values.row(static_cast<Eigen::Index>(oc.rows[i]));
        }
        row.result = nested_f(design_matrix(sub, axis), design_matrix(sub, axis, &Zs), oc.values);
        effects.emplace_back(name, per_theme_outcome_regressions(corpus, axis, Z, name, standardize));
        pvals.push_back(row.result->p_value);
        tested.push_back(nested.size());
      } catch (const Error& e) {
        row.note = e.what();
        log_ << "[" << identity << "] analyze: outcome '" << name << "' not tested: " << e.what() << "\n";
      }
      nested.push_back(std::move(row));
    }
    // Benjamini-Hochberg across this axis's outcomes.
    const BhResult bh = bh_adjust(pvals, cfg_.stats.fdr);
    for (std::size_t k = 0; k < tested.size(); ++k) {
      nested[tested[k]].p_bh = bh.adjusted[k];
      nested[tested[k]].significant = bh.rejected[k];
    }

    const ThemeR2Table r2 = theme_r2_table(Z, design_matrix(corpus, axis));
    Files files{{"stats/nested_f.csv", artifacts::nested_f_csv(nested)},
                {"stats/theme_r2.csv", artifacts::theme_r2_csv(r2)},
                {"stats/theme_r2_medians.csv", artifacts::theme_r2_medians_csv(r2)},
                {"stats/theme_coefficients.csv", artifacts::theme_coefficients_csv(effects)}};
    if (auto fit = adds_info_regression(corpus, axis)) files["stats/adds_info_odds.csv"] = artifacts::adds_info_csv(*fit);
    std::size_t significant = 0;
    for (const auto& r : nested) significant += r.significant;
    return {std::move(files), std::to_string(tested.size()) + " outcomes tested, " + std::to_string(significant) +
                                  " significant at FDR " + format_sig(cfg_.stats.fdr, 3)};
  }

  StageResult report(Axis axis, const AxisData& data, const fs::path& dir) {
    SummaryInputs in;
    in.axis = axis;
    in.responses = data.ids.size();
    in.themes = artifacts::parse_themes_csv(read_file(dir / "themes.csv"));
    in.nested_f = artifacts::read_table(read_file(dir / "stats/nested_f.csv"), artifacts::kNestedFColumns, "nested_f.csv");
    in.r2_medians = artifacts::read_table(read_file(dir / "stats/theme_r2_medians.csv"),
                                          artifacts::kThemeR2MedianColumns, "theme_r2_medians.csv");
    const AnnotationMatrix Z = load_annotations(dir, data);
    if (Z.cols() == 0) in.r2_medians.clear();
    in.counts = theme_category_counts(data.corpus, axis, Z, cfg_.report.min_group_size);
    in.min_group_size = cfg_.report.min_group_size;
    Files files{{"report/theme_category_counts.csv", category_counts_csv(in.counts)}};
    if (cfg_.report.svg) {
      std::string svg = category_chart_svg(in.counts, axis);
      if (!svg.empty()) {
        files["report/theme_categories.svg"] = std::move(svg);
        in.chart_written = true;
      }
    }
    files["report/summary.md"] = summary_markdown(in);
    return {std::move(files), ""};
  }

  const RunConfig& cfg_;
  const RunOptions& opt_;
  std::ostream null_{nullptr};
  std::ostream& log_;
  Corpus corpus_;
  std::string corpus_hash_;
  std::shared_ptr<ProviderSet> providers_;
  std::size_t calls_before_ = 0;
  RunSummary summary_;
};

}  // namespace

RunSummary run_pipeline(const RunConfig& config, const RunOptions& options) { return Runner(config, options).run(); }

}  // namespace iyow
