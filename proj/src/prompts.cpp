#include "iyow/prompts.hpp"

#include "iyow/util.hpp"

namespace iyow {

namespace prompts::resources {
extern const std::string_view kInterpretation;
extern const std::string_view kAnnotation;
}  // namespace prompts::resources

namespace {

// The resource files end with a newline that is not part of the prompt.
std::string_view strip_final_newline(std::string_view s) {
  if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view interpretation_template() { return strip_final_newline(prompts::resources::kInterpretation); }
std::string_view annotation_template() { return strip_final_newline(prompts::resources::kAnnotation); }

std::string fill_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        const std::pair<std::string, std::string>* hit = nullptr;
        for (const auto& kv : values) {
          if (kv.first == name) hit = &kv;
        }
        if (hit) {
          out += hit->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string format_samples(const std::vector<std::string>& texts) {
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i) out += '\n';
    std::string line = replace_all(replace_all(texts[i], "\r\n", " "), "\n", " ");
    out += "- " + replace_all(line, "\r", " ");
  }
  return out;
}

std::string build_interpretation_prompt(Axis axis, const std::vector<std::string>& positives,
                                        const std::vector<std::string>& negatives) {
  return fill_template(interpretation_template(), {{"identity", std::string(display_name(axis))},
                                                   {"positive_texts", format_samples(positives)},
                                                   {"negative_texts", format_samples(negatives)}});
}

std::string build_annotation_prompt(std::string_view hypothesis, std::string_view text) {
  return fill_template(annotation_template(), {{"hypothesis", std::string(hypothesis)}, {"text", std::string(text)}});
}

namespace {

struct QuoteHit {
  std::size_t pos;
  std::size_t len;
};

std::vector<QuoteHit> find_quotes(std::string_view s) {
  static constexpr std::string_view kCurlyOpen = "\xE2\x80\x9C";   // U+201C
  static constexpr std::string_view kCurlyClose = "\xE2\x80\x9D";  // U+201D
  std::vector<QuoteHit> hits;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '"') {
      hits.push_back({i, 1});
      ++i;
    } else if (s.substr(i, 3) == kCurlyOpen || s.substr(i, 3) == kCurlyClose) {
      hits.push_back({i, 3});
      i += 3;
    } else {
      ++i;
    }
  }
  return hits;
}

std::string strip_bullet(std::string s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '-' || s.front() == '*')) s = trim(std::string_view(s).substr(1));
  return s;
}

}  // namespace

std::optional<std::string> parse_candidate(std::string_view reply) {
  const auto quotes = find_quotes(reply);
  std::string feature;
  if (quotes.size() >= 2) {
    const auto start = quotes[0].pos + quotes[0].len;
    feature = trim(reply.substr(start, quotes[1].pos - start));
  } else if (quotes.size() == 1) {
    feature = strip_bullet(std::string(reply.substr(0, quotes[0].pos)));
  }
  if (feature.empty()) return std::nullopt;
  return feature;
}

bool parse_yes(std::string_view reply) { return starts_with_ci(trim(reply), "yes"); }

}  // namespace iyow
