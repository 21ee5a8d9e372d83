#include <cctype>
#include <cmath>

#include "iyow/error.hpp"
#include "iyow/providers.hpp"
#include "iyow/util.hpp"

namespace iyow {

namespace {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

class MockEmbeddingBackend final : public EmbeddingBackend {
 public:
  MockEmbeddingBackend(std::uint64_t seed, std::size_t dimension) : seed_(seed), dimension_(dimension) {
    if (dimension_ == 0) throw ProviderError("mock embedder dimension must be >= 1");
  }

  std::string kind() const override {
    return "mock-embedding/seed=" + std::to_string(seed_) + "/dim=" + std::to_string(dimension_);
  }

  std::vector<std::vector<double>> fetch(const std::string&, const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
  }

 private:
  void add_direction(std::vector<double>& acc, std::string_view label, double weight) const {
    Rng rng(derive_seed(seed_, label));
    const double scale = weight / std::sqrt(static_cast<double>(dimension_));
    for (double& a : acc) a += scale * rng.normal();
  }

  std::vector<double> embed(const std::string& text) const {
    std::vector<double> v(dimension_, 0.0);
    for (const auto& tok : tokenize(text)) add_direction(v, "token:" + tok, 1.0);
    add_direction(v, "text:" + text, 0.05);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (double& x : v) x /= norm;
    }
    return v;
  }

  std::uint64_t seed_;
  std::size_t dimension_;
};

std::string block_between(const std::string& prompt, std::string_view header) {
  const auto h = prompt.find(header);
  if (h == std::string::npos) return {};
  const std::string_view rule = "----------------";
  auto open = prompt.find(rule, h);
  if (open == std::string::npos) return {};
  open = prompt.find('\n', open);
  if (open == std::string::npos) return {};
  const auto close = prompt.find(rule, open + 1);
  if (close == std::string::npos) return {};
  return prompt.substr(open + 1, close - open - 1);
}

std::vector<std::string> sample_lines(const std::string& block) {
  std::vector<std::string> out;
  for (auto& line : split(block, '\n')) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.rfind("- ", 0) == 0) t = t.substr(2);
    out.push_back(std::move(t));
  }
  return out;
}

bool matches_rule(const std::vector<std::string>& keywords, std::string_view text) {
  const std::string lower = to_lower(text);
  for (const auto& k : keywords) {
    if (!k.empty() && lower.find(to_lower(k)) != std::string::npos) return true;
  }
  return false;
}

std::string interpretation_reply(const KeywordRules& rules, const std::string& prompt) {
  const auto positives = sample_lines(block_between(prompt, "POSITIVE SAMPLES:"));
  const auto negatives = sample_lines(block_between(prompt, "NEGATIVE SAMPLES:"));
  auto fraction = [](const std::vector<std::string>& samples, const std::vector<std::string>& keywords) {
    if (samples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& s : samples) hits += matches_rule(keywords, s) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
  };
  const std::string* best = nullptr;
  double best_score = 0.0;
  for (const auto& [theme, keywords] : rules) {
    const double score = fraction(positives, keywords) - fraction(negatives, keywords);
    if (score > best_score) {
      best_score = score;
      best = &theme;
    }
  }
  if (!best) return "- \"mentions no distinguishing feature\"";
  return "- \"" + *best + "\"";
}

std::string annotation_reply(const KeywordRules& rules, const std::string& prompt) {
  const std::string_view prop_marker = "PROPERTY: \"";
  const std::string_view text_marker = "TEXT: \"";
  const auto p = prompt.rfind(prop_marker);
  if (p == std::string::npos) throw ProviderError("mock annotator: prompt lacks a PROPERTY marker");
  const auto t = prompt.find(text_marker, p);
  if (t == std::string::npos) throw ProviderError("mock annotator: prompt lacks a TEXT marker");
  auto prop_end = prompt.find('\n', p);
  if (prop_end == std::string::npos || prop_end > t) prop_end = t;
  std::string property = trim(std::string_view(prompt).substr(p + prop_marker.size(), prop_end - p - prop_marker.size()));
  if (!property.empty() && property.back() == '"') property.pop_back();

  const auto text_start = t + text_marker.size();
  auto text_end = prompt.rfind("\"\nOutput:");
  if (text_end == std::string::npos || text_end < text_start) {
    text_end = prompt.rfind('"');
    if (text_end == std::string::npos || text_end < text_start) text_end = prompt.size();
  }
  const std::string_view text = std::string_view(prompt).substr(text_start, text_end - text_start);

  for (const auto& [theme, keywords] : rules) {
    if (theme == property) return matches_rule(keywords, text) ? "Yes." : "No.";
  }
  return "No.";
}

class KeywordChatBackend final : public ChatBackend {
 public:
  explicit KeywordChatBackend(KeywordRules rules) : rules_(std::move(rules)) {}
  std::string kind() const override {
    // Rules are part of the cache namespace so edited rules never hit stale replies.
    std::string k = "mock-keyword-chat/";
    for (const auto& [theme, keywords] : rules_) {
      k += theme + "=";
      for (const auto& w : keywords) k += w + "|";
      k += ";";
    }
    return "mock-keyword-chat/" + sha256_hex(k).substr(0, 16);
  }
  std::vector<std::string> fetch(const std::string&, const std::string& prompt, double, int n) override {
    const std::string reply = keyword_reply(rules_, prompt);
    return std::vector<std::string>(static_cast<std::size_t>(std::max(n, 0)), reply);
  }

 private:
  KeywordRules rules_;
};

}  // namespace

std::string keyword_reply(const KeywordRules& rules, const std::string& prompt) {
  if (prompt.find("POSITIVE SAMPLES:") != std::string::npos &&
      prompt.find("NEGATIVE SAMPLES:") != std::string::npos) {
    return interpretation_reply(rules, prompt);
  }
  if (prompt.find("PROPERTY") != std::string::npos || prompt.find("TEXT") != std::string::npos) {
    return annotation_reply(rules, prompt);
  }
  throw ProviderError("mock chat: prompt is neither an annotation nor an interpretation prompt");
}

std::shared_ptr<EmbeddingBackend> make_mock_embedding_backend(std::uint64_t seed, std::size_t dimension) {
  return std::make_shared<MockEmbeddingBackend>(seed, dimension);
}

std::shared_ptr<CachingEmbedder> mock_embedder(std::uint64_t seed, std::size_t dimension,
                                               std::shared_ptr<Cache> cache) {
  EmbedderOptions opts;
  opts.model_id = "mock";
  opts.dimension = dimension;
  opts.max_in_flight = 1;
  return std::make_shared<CachingEmbedder>(make_mock_embedding_backend(seed, dimension), std::move(cache), opts);
}

std::shared_ptr<ChatBackend> make_keyword_chat_backend(KeywordRules rules) {
  return std::make_shared<KeywordChatBackend>(std::move(rules));
}

std::shared_ptr<CachingChat> mock_annotator(KeywordRules rules, std::shared_ptr<Cache> cache) {
  ChatOptions opts;
  opts.retry.base_delay = std::chrono::milliseconds(0);
  return std::make_shared<CachingChat>(make_keyword_chat_backend(std::move(rules)), std::move(cache), opts);
}

std::vector<std::string> ScriptedChatBackend::fetch(const std::string&, const std::string& prompt, double, int n) {
  std::lock_guard lock(mutex_);
  prompts_.push_back(prompt);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    if (next_ >= replies_.size()) throw ProviderError("scripted chat: script exhausted");
    out.push_back(replies_[next_++]);
  }
  return out;
}

std::vector<std::string> ScriptedChatBackend::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

}  // namespace iyow
