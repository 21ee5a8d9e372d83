#include "iyow/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "iyow/error.hpp"
#include "iyow/util.hpp"

namespace iyow {

using nlohmann::json;

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::Race: return "race";
    case Axis::Gender: return "gender";
    case Axis::SexualOrientation: return "sexual_orientation";
  }
  return "unknown";
}

std::string_view display_name(Axis axis) {
  switch (axis) {
    case Axis::Race: return "race";
    case Axis::Gender: return "gender";
    case Axis::SexualOrientation: return "sexual orientation";
  }
  return "unknown";
}

std::optional<Axis> parse_axis(std::string_view s) {
  for (Axis a : kAllAxes) {
    if (s == to_string(a) || s == display_name(a)) return a;
  }
  return std::nullopt;
}

std::string_view to_string(Similarity s) {
  switch (s) {
    case Similarity::MostlySame: return "Mostly the same";
    case Similarity::SomewhatSame: return "Somewhat the same and somewhat different";
    case Similarity::MostlyDifferent: return "Mostly different";
    case Similarity::CompletelyDifferent: return "Completely different";
    case Similarity::Unsure: return "Unsure";
  }
  return "Unsure";
}

std::optional<Similarity> parse_similarity(std::string_view s) {
  static const std::pair<std::string_view, Similarity> kNames[] = {
      {"MostlySame", Similarity::MostlySame},
      {"SomewhatSame", Similarity::SomewhatSame},
      {"MostlyDifferent", Similarity::MostlyDifferent},
      {"CompletelyDifferent", Similarity::CompletelyDifferent},
      {"Unsure", Similarity::Unsure},
  };
  const std::string t = trim(s);
  for (const auto& [name, value] : kNames) {
    if (t == name || t == to_string(value)) return value;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Category vocabularies.

namespace {

const std::vector<std::string> kRaceLabels = {
    "American Indian or Alaska Native",
    "Asian",
    "Black or African American",
    "Hispanic or Latino",
    "Middle Eastern or North African",
    "Native Hawaiian or Pacific Islander",
    "White",
    "Some Other Race",
};

const std::vector<std::string> kGenderCrossed = {
    "Cisgender Man",     "Cisgender Woman",   "Cisgender Other",      "Transgender Man",
    "Transgender Woman", "Transgender Other", "Prefer not to answer",
};

// Raw answers to the two gender questions.
const std::vector<std::string> kGenderIdentityAnswers = {"Man", "Woman", "Some other way",
                                                          "Gender: I prefer not to answer"};
const std::vector<std::string> kTransgenderAnswers = {
    "Transgender: Yes", "Transgender: No", "Transgender: I prefer not to answer"};

const std::vector<std::string> kSexualOrientationLabels = {
    "Asexual or aromantic",
    "Bisexual",
    "Demisexual",
    "Gay",
    "Lesbian",
    "Pansexual",
    "Queer",
    "Questioning",
    "Sexually fluid",
    "Straight or heterosexual",
    "Other sexual identity or orientation",
    "I prefer not to answer",
};

bool in(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string group_race(const std::set<std::string>& cats) {
  for (const auto& c : cats) {
    if (!in(kRaceLabels, c)) throw CorpusError("unknown race label: " + c);
  }
  static const std::string kHispanic = "Hispanic or Latino";
  if (cats.size() == 1) {
    const std::string& only = *cats.begin();
    return only == kHispanic ? "Hispanic and/or Latino" : only;
  }
  if (cats.size() == 2 && cats.count(kHispanic) && cats.count("White")) {
    return "Hispanic and/or Latino";
  }
  return "Two or More Races";
}

std::string group_gender(const std::set<std::string>& cats) {
  bool any_crossed = false;
  for (const auto& c : cats) {
    if (in(kGenderCrossed, c)) {
      any_crossed = true;
    } else if (!in(kGenderIdentityAnswers, c) && !in(kTransgenderAnswers, c)) {
      throw CorpusError("unknown gender label: " + c);
    }
  }
  if (any_crossed) {
    if (cats.size() != 1) {
      throw CorpusError("gender labels mix grouped categories with other answers");
    }
    return *cats.begin();
  }
  if (cats.count("Gender: I prefer not to answer") ||
      cats.count("Transgender: I prefer not to answer")) {
    return "Prefer not to answer";
  }
  std::vector<std::string> identities;
  for (const auto& c : cats) {
    if (in(kGenderIdentityAnswers, c)) identities.push_back(c);
  }
  const bool trans_yes = cats.count("Transgender: Yes") > 0;
  const bool trans_no = cats.count("Transgender: No") > 0;
  // An unanswered or contradictory question is treated as not answered.
  if (identities.empty() || trans_yes == trans_no) return "Prefer not to answer";
  std::string identity = "Other";
  if (identities.size() == 1) {
    if (identities[0] == "Man") identity = "Man";
    else if (identities[0] == "Woman") identity = "Woman";
  }
  return (trans_yes ? "Transgender " : "Cisgender ") + identity;
}

std::string group_sexual_orientation(const std::set<std::string>& cats) {
  std::set<std::string> grouped;
  for (const auto& c : cats) {
    if (!in(kSexualOrientationLabels, c)) {
      throw CorpusError("unknown sexual orientation label: " + c);
    }
    if (c == "Gay" || c == "Lesbian") grouped.insert("Gay or Lesbian");
    else if (c == "Bisexual" || c == "Pansexual") grouped.insert("Bisexual and/or Pansexual");
    else if (c == "Other sexual identity or orientation") grouped.insert("Other");
    else grouped.insert(c);
  }
  if (grouped.count("Queer")) {
    const bool other_minority = std::any_of(grouped.begin(), grouped.end(), [](const auto& g) {
      return g != "Queer" && g != "Straight or heterosexual" && g != "I prefer not to answer";
    });
    if (other_minority) grouped.erase("Queer");
  }
  if (grouped.size() == 1) return *grouped.begin();
  return "Multiple Identities";
}

}  // namespace

std::string group_mutually_exclusive(const std::set<std::string>& categories, Axis axis) {
  std::set<std::string> cats;
  for (const auto& c : categories) cats.insert(trim(c));
  if (cats.empty()) throw CorpusError("group_mutually_exclusive: empty category set");
  switch (axis) {
    case Axis::Race: return group_race(cats);
    case Axis::Gender: return group_gender(cats);
    case Axis::SexualOrientation: return group_sexual_orientation(cats);
  }
  throw CorpusError("unknown axis");
}

std::vector<std::string> grouping_vocabulary(Axis axis) {
  switch (axis) {
    case Axis::Race: return kRaceLabels;
    case Axis::Gender: {
      std::vector<std::string> v = kGenderIdentityAnswers;
      v.insert(v.end(), kTransgenderAnswers.begin(), kTransgenderAnswers.end());
      return v;
    }
    case Axis::SexualOrientation: return kSexualOrientationLabels;
  }
  return {};
}

std::vector<std::string> grouped_labels(Axis axis) {
  switch (axis) {
    case Axis::Race:
      return {"American Indian or Alaska Native",
              "Asian",
              "Black or African American",
              "Hispanic and/or Latino",
              "Middle Eastern or North African",
              "Native Hawaiian or Pacific Islander",
              "Some Other Race",
              "Two or More Races",
              "White"};
    case Axis::Gender: return kGenderCrossed;
    case Axis::SexualOrientation:
      return {"Asexual or aromantic", "Bisexual and/or Pansexual", "Demisexual",
              "Gay or Lesbian",       "I prefer not to answer",    "Multiple Identities",
              "Other",                "Queer",                     "Questioning",
              "Sexually fluid",       "Straight or heterosexual"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Schemes and outcomes.

void CategoryScheme::validate() const {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) throw ConfigError("category scheme for " + std::string(to_string(axis)) + " has an empty label");
    if (!seen.insert(l).second) {
      throw ConfigError("category scheme for " + std::string(to_string(axis)) +
                        " repeats label '" + l + "'");
    }
  }
  if (reference_label && !seen.count(*reference_label)) {
    throw ConfigError("reference label '" + *reference_label + "' is not in the " +
                      std::string(to_string(axis)) + " scheme");
  }
}

bool CategoryScheme::contains(std::string_view label) const { return in(labels, label); }

CategoryScheme default_scheme(Axis axis) {
  switch (axis) {
    case Axis::Race: return {Axis::Race, kRaceLabels, true, std::nullopt};
    case Axis::Gender: return {Axis::Gender, kGenderCrossed, false, std::string("Cisgender Man")};
    case Axis::SexualOrientation:
      return {Axis::SexualOrientation, kSexualOrientationLabels, true, std::nullopt};
  }
  throw CorpusError("unknown axis");
}

std::set<std::string> accepted_labels(const CategoryScheme& scheme) {
  std::set<std::string> out(scheme.labels.begin(), scheme.labels.end());
  if (!scheme.multiselect) {
    for (const auto& l : grouping_vocabulary(scheme.axis)) out.insert(l);
  }
  return out;
}

void OutcomeSpec::validate() const {
  if (name.empty()) throw ConfigError("outcome spec with empty name");
  for (std::size_t i = 1; i < scale_map.size(); ++i) {
    if (!(scale_map[i].second > scale_map[i - 1].second)) {
      throw ConfigError("outcome '" + name + "': scale codes must be strictly increasing");
    }
  }
  for (const auto& [answer, code] : scale_map) {
    if (!std::isfinite(code)) throw ConfigError("outcome '" + name + "': non-finite code for '" + answer + "'");
  }
}

std::optional<double> OutcomeSpec::code(std::string_view answer) const {
  const std::string t = trim(answer);
  for (const auto& [a, c] : scale_map) {
    if (a == t) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Corpus.

Corpus::Corpus(std::vector<Response> responses, std::vector<CategoryScheme> schemes,
               std::vector<LoadDiagnostic> rejected)
    : responses_(std::move(responses)), schemes_(std::move(schemes)), rejected_(std::move(rejected)) {
  std::unordered_set<std::string> ids;
  for (const auto& r : responses_) {
    if (r.id.empty()) throw CorpusError("response with empty id");
    if (!ids.insert(r.id).second) throw CorpusError("duplicate response id: " + r.id);
  }
  for (const auto& s : schemes_) s.validate();
}

CategoryScheme Corpus::scheme(Axis axis) const {
  for (const auto& s : schemes_) {
    if (s.axis == axis) return s;
  }
  return default_scheme(axis);
}

Corpus Corpus::subset(const std::vector<std::size_t>& rows) const {
  std::vector<Response> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(responses_.at(r));
  return Corpus(std::move(out), schemes_);
}

namespace {

struct RecordRejected {
  std::string message;
};

std::map<Axis, std::string> parse_text_map(const json& j, const char* field) {
  std::map<Axis, std::string> out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw CorpusError(std::string("field '") + field + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    auto axis = parse_axis(key);
    if (!axis) throw RecordRejected{"unknown identity axis '" + key + "' in '" + field + "'"};
    if (value.is_null()) continue;
    if (!value.is_string()) throw CorpusError(std::string("field '") + field + "." + key + "' must be a string");
    out[*axis] = value.get<std::string>();
  }
  return out;
}

Response parse_record(const json& j, const std::vector<CategoryScheme>& schemes,
                      const std::vector<OutcomeSpec>& outcome_specs) {
  if (!j.is_object()) throw CorpusError("record must be a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw CorpusError("record lacks a string 'id'");
  Response r;
  r.id = trim(j["id"].get<std::string>());
  if (r.id.empty()) throw CorpusError("record has an empty 'id'");

  r.axis_texts = parse_text_map(j.value("texts", json()), "texts");
  r.perceived_texts = parse_text_map(j.value("perceived", json()), "perceived");

  const json cats = j.value("categories", json::object());
  if (!cats.is_object()) throw CorpusError("field 'categories' must be an object");
  for (const auto& [key, value] : cats.items()) {
    auto axis = parse_axis(key);
    if (!axis) throw RecordRejected{"unknown identity axis '" + key + "' in 'categories'"};
    if (!value.is_array()) throw CorpusError("field 'categories." + key + "' must be an array");
    CategoryScheme scheme = default_scheme(*axis);
    for (const auto& s : schemes) {
      if (s.axis == *axis) scheme = s;
    }
    const auto accepted = accepted_labels(scheme);
    std::set<std::string> labels;
    for (const auto& l : value) {
      if (!l.is_string()) throw CorpusError("category labels must be strings");
      std::string label = trim(l.get<std::string>());
      if (!accepted.count(label)) {
        throw RecordRejected{"unknown " + std::string(to_string(*axis)) + " category '" + label + "'"};
      }
      labels.insert(std::move(label));
    }
    if (labels.empty()) throw RecordRejected{"empty category set for " + std::string(to_string(*axis))};
    r.categories[*axis] = std::move(labels);
  }

  const json sim = j.value("similarity", json::object());
  if (!sim.is_object()) throw CorpusError("field 'similarity' must be an object");
  for (const auto& [key, value] : sim.items()) {
    auto axis = parse_axis(key);
    if (!axis) throw RecordRejected{"unknown identity axis '" + key + "' in 'similarity'"};
    if (value.is_null()) continue;
    if (!value.is_string()) throw CorpusError("field 'similarity." + key + "' must be a string");
    auto s = parse_similarity(value.get<std::string>());
    if (!s) throw RecordRejected{"unknown similarity answer '" + value.get<std::string>() + "'"};
    r.similarity_answer[*axis] = *s;
  }

  const json outcomes = j.value("outcomes", json::object());
  if (!outcomes.is_object()) throw CorpusError("field 'outcomes' must be an object");
  for (const auto& [name, value] : outcomes.items()) {
    if (value.is_null()) continue;
    if (value.is_number()) {
      const double v = value.get<double>();
      if (!std::isfinite(v)) throw RecordRejected{"non-finite outcome '" + name + "'"};
      r.outcomes[name] = v;
    } else if (value.is_string()) {
      const OutcomeSpec* spec = nullptr;
      for (const auto& s : outcome_specs) {
        if (s.name == name) spec = &s;
      }
      if (!spec) throw RecordRejected{"outcome '" + name + "' has a text answer but no scale map"};
      auto code = spec->code(value.get<std::string>());
      if (!code) {
        throw RecordRejected{"outcome '" + name + "': answer '" + value.get<std::string>() +
                             "' is not on the scale"};
      }
      r.outcomes[name] = *code;
    } else {
      throw CorpusError("outcome '" + name + "' must be a number or string");
    }
  }

  const json adds = j.value("adds_info", json::object());
  if (!adds.is_object()) throw CorpusError("field 'adds_info' must be an object");
  for (const auto& [key, value] : adds.items()) {
    auto axis = parse_axis(key);
    if (!axis) throw RecordRejected{"unknown identity axis '" + key + "' in 'adds_info'"};
    if (value.is_null()) continue;
    if (!value.is_boolean()) throw CorpusError("field 'adds_info." + key + "' must be a boolean");
    r.says_freetext_adds_info[*axis] = value.get<bool>();
  }
  return r;
}

}  // namespace

Corpus parse_corpus(std::string_view text, const std::vector<CategoryScheme>& schemes,
                    const std::vector<OutcomeSpec>& outcome_specs) {
  for (const auto& s : schemes) s.validate();
  for (const auto& o : outcome_specs) o.validate();
  std::vector<Response> responses;
  std::vector<LoadDiagnostic> rejected;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    try {
      Response r = parse_record(j, schemes, outcome_specs);
      if (!ids.insert(r.id).second) {
        throw CorpusError("line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
      }
      responses.push_back(std::move(r));
    } catch (const RecordRejected& rej) {
      std::string id = j.is_object() && j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "";
      rejected.push_back({line_no, std::move(id), rej.message});
    } catch (const CorpusError& e) {
      const std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw CorpusError("line " + std::to_string(line_no) + ": " + msg);
    } catch (const json::exception& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return Corpus(std::move(responses), schemes, std::move(rejected));
}

Corpus load_corpus(const std::filesystem::path& path, const std::vector<CategoryScheme>& schemes,
                   const std::vector<OutcomeSpec>& outcome_specs) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw CorpusError(e.what());
  }
  return parse_corpus(text, schemes, outcome_specs);
}

Corpus filter_discordant(const Corpus& corpus, Axis axis) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Response& r = corpus[i];
    auto sim = r.similarity_answer.find(axis);
    if (sim == r.similarity_answer.end() || sim->second == Similarity::MostlySame) continue;
    auto text = r.perceived_texts.find(axis);
    if (text == r.perceived_texts.end() || trim(text->second).empty()) continue;
    keep.push_back(i);
  }
  return corpus.subset(keep);
}

Eigen::VectorXd zscore(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n < 2) throw NumericError("zscore needs at least two values");
  if (!values.allFinite()) throw NumericError("zscore input contains NaN or infinity");
  const double mean = values.mean();
  const double ss = (values.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw NumericError("constant outcome cannot be standardized");
  return (values.array() - mean) / sd;
}

namespace {

// Decodes one UTF-8 code point; invalid bytes decode as themselves.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 >= 0) {
      i += 2;
      return static_cast<char32_t>(((b0 & 0x1F) << 6) | c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      i += 3;
      return static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      i += 4;
      return static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3);
    }
  }
  ++i;
  return 0xFFFD;
}

bool is_unicode_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

}  // namespace

int word_count(std::string_view text) {
  int count = 0;
  bool in_word = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t c = next_code_point(text, i);
    if (is_unicode_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Design matrices.

std::string DesignColumn::qualified_name() const {
  switch (kind) {
    case ColumnKind::Intercept: return "intercept";
    case ColumnKind::Category: return "category:" + name;
    case ColumnKind::Theme: return "theme:" + name;
  }
  return name;
}

std::vector<std::string> DesignMatrix::qualified_names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.qualified_name());
  return out;
}

DesignMatrix DesignMatrix::select_rows(const std::vector<std::size_t>& keep) const {
  DesignMatrix out;
  out.columns = columns;
  out.values.resize(static_cast<Eigen::Index>(keep.size()), values.cols());
  out.rows.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.rows.push_back(rows.at(keep[i]));
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(keep[i]));
  }
  return out;
}

void DesignMatrix::append_column(DesignColumn column, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != n()) {
    throw CorpusError("design column '" + column.name + "' has " + std::to_string(v.size()) +
                      " rows, expected " + std::to_string(n()));
  }
  values.conservativeResize(Eigen::NoChange, values.cols() + 1);
  values.col(values.cols() - 1) = v;
  columns.push_back(std::move(column));
}

std::string exclusive_category(const Response& response, const CategoryScheme& scheme) {
  auto it = response.categories.find(scheme.axis);
  if (it == response.categories.end() || it->second.empty()) {
    throw CorpusError("response '" + response.id + "' has no " + std::string(to_string(scheme.axis)) +
                      " categories");
  }
  const auto& cats = it->second;
  if (cats.size() == 1 && scheme.contains(*cats.begin())) return *cats.begin();
  std::string grouped = group_mutually_exclusive(cats, scheme.axis);
  if (!scheme.contains(grouped)) {
    throw CorpusError("response '" + response.id + "': grouped category '" + grouped +
                      "' is not in the " + std::string(to_string(scheme.axis)) + " scheme");
  }
  return grouped;
}

DesignMatrix design_matrix(const Corpus& corpus, Axis axis, const AnnotationMatrix* annotation) {
  const CategoryScheme scheme = corpus.scheme(axis);
  const auto n = static_cast<Eigen::Index>(corpus.size());
  if (annotation && annotation->rows() != corpus.size()) {
    throw CorpusError("annotation has " + std::to_string(annotation->rows()) + " rows but corpus has " +
                      std::to_string(corpus.size()));
  }

  std::vector<std::string> labels;
  for (const auto& l : scheme.labels) {
    if (!scheme.multiselect && scheme.reference_label && l == *scheme.reference_label) continue;
    labels.push_back(l);
  }

  DesignMatrix dm;
  dm.values = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(1 + labels.size()));
  dm.columns.push_back({"intercept", ColumnKind::Intercept});
  for (const auto& l : labels) dm.columns.push_back({l, ColumnKind::Category});
  dm.rows.reserve(corpus.size());

  for (Eigen::Index i = 0; i < n; ++i) {
    const Response& r = corpus[static_cast<std::size_t>(i)];
    dm.rows.push_back(r.id);
    dm.values(i, 0) = 1.0;
    std::set<std::string> selected;
    if (scheme.multiselect) {
      auto it = r.categories.find(axis);
      if (it == r.categories.end() || it->second.empty()) {
        throw CorpusError("response '" + r.id + "' has no " + std::string(to_string(axis)) + " categories");
      }
      for (const auto& c : it->second) {
        if (!scheme.contains(c)) throw CorpusError("response '" + r.id + "': label '" + c + "' not in scheme");
        selected.insert(c);
      }
    } else {
      selected.insert(exclusive_category(r, scheme));
    }
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (selected.count(labels[j])) dm.values(i, static_cast<Eigen::Index>(j + 1)) = 1.0;
    }
  }

  if (annotation) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (annotation->row_ids[i] != corpus[i].id) {
        throw CorpusError("annotation row " + std::to_string(i) + " is '" + annotation->row_ids[i] +
                          "' but corpus row is '" + corpus[i].id + "'");
      }
    }
    for (std::size_t k = 0; k < annotation->cols(); ++k) {
      dm.append_column({std::to_string(annotation->themes[k].latent_index), ColumnKind::Theme},
                       annotation->values.col(static_cast<Eigen::Index>(k)).cast<double>());
    }
  }
  return dm;
}

}  // namespace iyow
