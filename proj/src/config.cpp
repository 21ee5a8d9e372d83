#include "iyow/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "iyow/error.hpp"
#include "iyow/util.hpp"

namespace iyow {

using nlohmann::json;

std::string_view to_string(TextSource source) { return source == TextSource::Self ? "self" : "perceived"; }

SaeConfig RunConfig::sae_for(Axis axis) const {
  auto it = sae_overrides.find(axis);
  SaeConfig c = it == sae_overrides.end() ? sae_default : it->second;
  c.seed = derive_seed(seed, "sae/" + std::string(to_string(axis)));
  return c;
}

std::vector<std::string> RunConfig::analyzed_outcomes() const {
  if (!stats.outcomes.empty()) return stats.outcomes;
  std::vector<std::string> names;
  for (const auto& o : outcomes) names.push_back(o.name);
  return names;
}

const OutcomeSpec* RunConfig::outcome_spec(std::string_view name) const {
  for (const auto& o : outcomes) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError((path.empty() ? std::string("config") : path) + ": " + message);
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
  expect_object(j, path);
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(join(path, k), "unknown setting");
  }
}

std::string get_string(const json& j, const std::string& path, bool allow_empty = false) {
  if (!j.is_string()) fail(path, "must be a string");
  auto s = j.get<std::string>();
  if (!allow_empty && s.empty()) fail(path, "must not be empty");
  return s;
}

long long get_int(const json& j, const std::string& path, long long min) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  const auto v = j.get<long long>();
  if (v < min) fail(path, "must be at least " + std::to_string(min));
  return v;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "must be true or false");
  return j.get<bool>();
}

Axis get_axis(const json& j, const std::string& path) {
  const auto s = get_string(j, path);
  auto a = parse_axis(s);
  if (!a) fail(path, "unknown axis '" + s + "' (expected race, gender or sexual_orientation)");
  return *a;
}

std::filesystem::path get_path(const json& j, const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p = get_string(j, path);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

void read_sae(const json& j, const std::string& path, SaeConfig& c) {
  allow_keys(j, path, {"latent_dim", "sparsity", "epochs", "batch_size", "learning_rate", "adam_beta1",
                       "adam_beta2", "adam_epsilon", "dead_latent_patience"});
  if (j.contains("latent_dim")) c.latent_dim = static_cast<int>(get_int(j["latent_dim"], join(path, "latent_dim"), 1));
  if (j.contains("sparsity")) c.sparsity = static_cast<int>(get_int(j["sparsity"], join(path, "sparsity"), 1));
  if (j.contains("epochs")) c.epochs = static_cast<int>(get_int(j["epochs"], join(path, "epochs"), 1));
  if (j.contains("batch_size")) c.batch_size = static_cast<int>(get_int(j["batch_size"], join(path, "batch_size"), 1));
  if (j.contains("learning_rate")) c.learning_rate = get_number(j["learning_rate"], join(path, "learning_rate"));
  if (j.contains("adam_beta1")) c.adam_beta1 = get_number(j["adam_beta1"], join(path, "adam_beta1"));
  if (j.contains("adam_beta2")) c.adam_beta2 = get_number(j["adam_beta2"], join(path, "adam_beta2"));
  if (j.contains("adam_epsilon")) c.adam_epsilon = get_number(j["adam_epsilon"], join(path, "adam_epsilon"));
  if (j.contains("dead_latent_patience")) {
    c.dead_latent_patience = static_cast<int>(get_int(j["dead_latent_patience"], join(path, "dead_latent_patience"), 1));
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
}

CategoryScheme read_scheme(const json& j, const std::string& path) {
  allow_keys(j, path, {"axis", "labels", "multiselect", "reference"});
  if (!j.contains("axis")) fail(join(path, "axis"), "is required");
  if (!j.contains("labels")) fail(join(path, "labels"), "is required");
  CategoryScheme s;
  s.axis = get_axis(j["axis"], join(path, "axis"));
  if (!j["labels"].is_array() || j["labels"].empty()) fail(join(path, "labels"), "must be a nonempty array");
  for (std::size_t i = 0; i < j["labels"].size(); ++i) {
    s.labels.push_back(trim(get_string(j["labels"][i], join(path, "labels[" + std::to_string(i) + "]"))));
  }
  s.multiselect = j.contains("multiselect") ? get_bool(j["multiselect"], join(path, "multiselect")) : true;
  if (j.contains("reference") && !j["reference"].is_null()) {
    s.reference_label = trim(get_string(j["reference"], join(path, "reference")));
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return s;
}

OutcomeSpec read_outcome(const json& j, const std::string& path) {
  allow_keys(j, path, {"name", "scale", "standardize"});
  if (!j.contains("name")) fail(join(path, "name"), "is required");
  OutcomeSpec o;
  o.name = get_string(j["name"], join(path, "name"));
  if (j.contains("scale")) {
    const auto& scale = j["scale"];
    const std::string sp = join(path, "scale");
    if (!scale.is_array()) fail(sp, "must be an array of [answer, code] pairs");
    for (std::size_t i = 0; i < scale.size(); ++i) {
      const std::string ip = sp + "[" + std::to_string(i) + "]";
      if (!scale[i].is_array() || scale[i].size() != 2) fail(ip, "must be an [answer, code] pair");
      o.scale_map.emplace_back(trim(get_string(scale[i][0], ip + "[0]")), get_number(scale[i][1], ip + "[1]"));
    }
  }
  if (j.contains("standardize")) o.standardize = get_bool(j["standardize"], join(path, "standardize"));
  try {
    o.validate();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return o;
}

void read_providers(const json& j, ProviderSettings& p) {
  const std::string path = "providers";
  allow_keys(j, path, {"embedding", "chat", "max_in_flight", "retry"});
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    const std::string ep = join(path, "embedding");
    allow_keys(e, ep, {"base_url", "model", "credential_env", "dimension", "batch_size"});
    if (e.contains("base_url")) p.embedding.base_url = get_string(e["base_url"], join(ep, "base_url"));
    if (e.contains("model")) p.embedding.model = get_string(e["model"], join(ep, "model"));
    if (e.contains("credential_env")) p.embedding.credential_env = get_string(e["credential_env"], join(ep, "credential_env"), true);
    if (e.contains("dimension")) p.embedding.dimension = static_cast<std::size_t>(get_int(e["dimension"], join(ep, "dimension"), 1));
    if (e.contains("batch_size")) p.embedding.batch_size = static_cast<std::size_t>(get_int(e["batch_size"], join(ep, "batch_size"), 1));
  }
  if (j.contains("chat")) {
    const auto& c = j["chat"];
    const std::string cp = join(path, "chat");
    allow_keys(c, cp, {"base_url", "credential_env", "interpretation_model", "fidelity_model", "annotation_model"});
    if (c.contains("base_url")) p.chat.base_url = get_string(c["base_url"], join(cp, "base_url"));
    if (c.contains("credential_env")) p.chat.credential_env = get_string(c["credential_env"], join(cp, "credential_env"), true);
    if (c.contains("interpretation_model")) p.chat.interpretation_model = get_string(c["interpretation_model"], join(cp, "interpretation_model"));
    if (c.contains("fidelity_model")) p.chat.fidelity_model = get_string(c["fidelity_model"], join(cp, "fidelity_model"));
    if (c.contains("annotation_model")) p.chat.annotation_model = get_string(c["annotation_model"], join(cp, "annotation_model"));
  }
  if (j.contains("max_in_flight")) {
    p.max_in_flight = static_cast<std::size_t>(get_int(j["max_in_flight"], join(path, "max_in_flight"), 1));
  }
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    const std::string rp = join(path, "retry");
    allow_keys(r, rp, {"max_attempts", "base_delay_ms", "max_delay_ms"});
    if (r.contains("max_attempts")) p.retry.max_attempts = static_cast<int>(get_int(r["max_attempts"], join(rp, "max_attempts"), 1));
    if (r.contains("base_delay_ms")) p.retry.base_delay = std::chrono::milliseconds(get_int(r["base_delay_ms"], join(rp, "base_delay_ms"), 0));
    if (r.contains("max_delay_ms")) p.retry.max_delay = std::chrono::milliseconds(get_int(r["max_delay_ms"], join(rp, "max_delay_ms"), 0));
  }
}

void read_interpretation(const json& j, InterpretationSettings& s) {
  const std::string path = "interpretation";
  allow_keys(j, path, {"n_pos", "n_zero", "n_candidates", "temperature", "fidelity_n_pos", "fidelity_n_neg",
                       "min_fidelity"});
  if (j.contains("n_pos")) s.n_pos = static_cast<int>(get_int(j["n_pos"], join(path, "n_pos"), 1));
  if (j.contains("n_zero")) s.n_zero = static_cast<int>(get_int(j["n_zero"], join(path, "n_zero"), 1));
  if (j.contains("n_candidates")) s.n_candidates = static_cast<int>(get_int(j["n_candidates"], join(path, "n_candidates"), 1));
  if (j.contains("temperature")) {
    s.temperature = get_number(j["temperature"], join(path, "temperature"));
    if (s.temperature < 0.0 || s.temperature > 2.0) fail(join(path, "temperature"), "must lie in [0, 2]");
  }
  if (j.contains("fidelity_n_pos")) s.fidelity_n_pos = static_cast<int>(get_int(j["fidelity_n_pos"], join(path, "fidelity_n_pos"), 1));
  if (j.contains("fidelity_n_neg")) s.fidelity_n_neg = static_cast<int>(get_int(j["fidelity_n_neg"], join(path, "fidelity_n_neg"), 0));
  if (j.contains("min_fidelity")) {
    s.min_fidelity = get_number(j["min_fidelity"], join(path, "min_fidelity"));
    if (s.min_fidelity < 0.0 || s.min_fidelity > 1.0) fail(join(path, "min_fidelity"), "must lie in [0, 1]");
  }
}

KeywordRules read_keyword_rules(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array of {theme, keywords} objects");
  KeywordRules rules;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ip = path + "[" + std::to_string(i) + "]";
    allow_keys(j[i], ip, {"theme", "keywords"});
    if (!j[i].contains("theme") || !j[i].contains("keywords")) fail(ip, "needs 'theme' and 'keywords'");
    std::vector<std::string> words;
    if (!j[i]["keywords"].is_array()) fail(join(ip, "keywords"), "must be an array of strings");
    for (std::size_t k = 0; k < j[i]["keywords"].size(); ++k) {
      words.push_back(get_string(j[i]["keywords"][k], join(ip, "keywords[" + std::to_string(k) + "]")));
    }
    rules.emplace_back(get_string(j[i]["theme"], join(ip, "theme")), std::move(words));
  }
  return rules;
}

}  // namespace

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  allow_keys(j, "", {"corpus", "axes", "text_source", "schemes", "outcomes", "providers", "sae", "interpretation",
                     "style_exclusions", "stats", "report", "cache_dir", "output_dir", "seed", "mock"});

  RunConfig c;
  if (!j.contains("corpus")) fail("corpus", "is required");
  c.corpus_path = get_path(j["corpus"], "corpus", base_dir);
  c.output_dir = j.contains("output_dir") ? get_path(j["output_dir"], "output_dir", base_dir) : base_dir / "out";
  c.cache_dir = j.contains("cache_dir") ? get_path(j["cache_dir"], "cache_dir", base_dir) : base_dir / "cache";

  if (j.contains("axes")) {
    if (!j["axes"].is_array() || j["axes"].empty()) fail("axes", "must be a nonempty array");
    c.axes.clear();
    for (std::size_t i = 0; i < j["axes"].size(); ++i) {
      const Axis a = get_axis(j["axes"][i], "axes[" + std::to_string(i) + "]");
      if (std::find(c.axes.begin(), c.axes.end(), a) != c.axes.end()) {
        fail("axes[" + std::to_string(i) + "]", "repeats an axis");
      }
      c.axes.push_back(a);
    }
  }
  if (j.contains("text_source")) {
    const auto s = get_string(j["text_source"], "text_source");
    if (s == "self") c.text_source = TextSource::Self;
    else if (s == "perceived") c.text_source = TextSource::Perceived;
    else fail("text_source", "must be 'self' or 'perceived'");
  }
  if (j.contains("schemes")) {
    if (!j["schemes"].is_array()) fail("schemes", "must be an array");
    for (std::size_t i = 0; i < j["schemes"].size(); ++i) {
      auto s = read_scheme(j["schemes"][i], "schemes[" + std::to_string(i) + "]");
      for (const auto& prev : c.schemes) {
        if (prev.axis == s.axis) fail("schemes[" + std::to_string(i) + "]", "repeats the axis of an earlier scheme");
      }
      c.schemes.push_back(std::move(s));
    }
  }
  if (j.contains("outcomes")) {
    if (!j["outcomes"].is_array()) fail("outcomes", "must be an array");
    for (std::size_t i = 0; i < j["outcomes"].size(); ++i) {
      auto o = read_outcome(j["outcomes"][i], "outcomes[" + std::to_string(i) + "]");
      if (c.outcome_spec(o.name)) fail("outcomes[" + std::to_string(i) + "]", "repeats outcome '" + o.name + "'");
      c.outcomes.push_back(std::move(o));
    }
  }
  if (j.contains("providers")) read_providers(j["providers"], c.providers);
  if (j.contains("sae")) {
    const auto& s = j["sae"];
    expect_object(s, "sae");
    // The default is read first so per-axis blocks layer on top of it
    // regardless of key order in the file.
    if (s.contains("default")) read_sae(s["default"], "sae.default", c.sae_default);
    for (const auto& [key, value] : s.items()) {
      if (key == "default") continue;
      auto axis = parse_axis(key);
      if (!axis) fail(join("sae", key), "unknown setting (expected 'default' or an axis name)");
      SaeConfig per_axis = c.sae_default;
      read_sae(value, join("sae", key), per_axis);
      c.sae_overrides[*axis] = per_axis;
    }
  } else {
    c.sae_default.validate();
  }
  if (j.contains("interpretation")) read_interpretation(j["interpretation"], c.interpretation);
  if (j.contains("style_exclusions")) {
    const auto& s = j["style_exclusions"];
    expect_object(s, "style_exclusions");
    for (const auto& [key, value] : s.items()) {
      auto axis = parse_axis(key);
      if (!axis) fail(join("style_exclusions", key), "unknown axis");
      if (!value.is_array()) fail(join("style_exclusions", key), "must be an array of latent indices");
      for (std::size_t i = 0; i < value.size(); ++i) {
        c.style_exclusions[*axis].insert(static_cast<int>(
            get_int(value[i], join("style_exclusions", key) + "[" + std::to_string(i) + "]", 0)));
      }
    }
  }
  if (j.contains("stats")) {
    const auto& s = j["stats"];
    allow_keys(s, "stats", {"fdr", "outcomes"});
    if (s.contains("fdr")) {
      c.stats.fdr = get_number(s["fdr"], "stats.fdr");
      if (!(c.stats.fdr > 0.0 && c.stats.fdr <= 1.0)) fail("stats.fdr", "must lie in (0, 1]");
    }
    if (s.contains("outcomes")) {
      if (!s["outcomes"].is_array()) fail("stats.outcomes", "must be an array of outcome names");
      for (std::size_t i = 0; i < s["outcomes"].size(); ++i) {
        c.stats.outcomes.push_back(get_string(s["outcomes"][i], "stats.outcomes[" + std::to_string(i) + "]"));
      }
    }
  }
  if (j.contains("report")) {
    const auto& r = j["report"];
    allow_keys(r, "report", {"min_group_size", "svg"});
    if (r.contains("min_group_size")) {
      c.report.min_group_size = static_cast<std::size_t>(get_int(r["min_group_size"], "report.min_group_size", 0));
    }
    if (r.contains("svg")) c.report.svg = get_bool(r["svg"], "report.svg");
  }
  if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(get_int(j["seed"], "seed", 0));
  if (j.contains("mock")) {
    const auto& m = j["mock"];
    allow_keys(m, "mock", {"embedding_dimension", "keyword_rules"});
    if (m.contains("embedding_dimension")) {
      c.mock.embedding_dimension = static_cast<std::size_t>(get_int(m["embedding_dimension"], "mock.embedding_dimension", 1));
    }
    if (m.contains("keyword_rules")) c.mock.keyword_rules = read_keyword_rules(m["keyword_rules"], "mock.keyword_rules");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config '" + path.string() + "': " + e.what());
  }
  const auto abs = std::filesystem::absolute(path);
  RunConfig c = parse_config(text, abs.parent_path());
  c.config_path = abs;
  return c;
}

}  // namespace iyow
