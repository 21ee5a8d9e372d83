#pragma once

// Survey corpus: responses, category schemes, outcomes and the design
// matrices built from them.

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iyow/annotation.hpp"

namespace iyow {

enum class Axis { Race, Gender, SexualOrientation };

inline constexpr Axis kAllAxes[] = {Axis::Race, Axis::Gender, Axis::SexualOrientation};

// "race", "gender", "sexual_orientation"
std::string_view to_string(Axis axis);
// "race", "gender", "sexual orientation"; used in prompt framing.
std::string_view display_name(Axis axis);
std::optional<Axis> parse_axis(std::string_view s);

enum class Similarity { MostlySame, SomewhatSame, MostlyDifferent, CompletelyDifferent, Unsure };

std::string_view to_string(Similarity s);
// Accepts both the survey wording ("Mostly the same") and the enum names.
std::optional<Similarity> parse_similarity(std::string_view s);

struct Response {
  std::string id;
  std::map<Axis, std::string> axis_texts;
  std::map<Axis, std::string> perceived_texts;
  std::map<Axis, std::set<std::string>> categories;
  std::map<Axis, Similarity> similarity_answer;
  std::map<std::string, double> outcomes;
  std::map<Axis, bool> says_freetext_adds_info;
};

struct CategoryScheme {
  Axis axis = Axis::Race;
  std::vector<std::string> labels;
  bool multiselect = true;
  std::optional<std::string> reference_label;

  void validate() const;
  bool contains(std::string_view label) const;
};

// Built-in schemes mirroring the survey instrument. Gender uses the seven
// cross-tabulated categories with "Cisgender Man" as reference.
CategoryScheme default_scheme(Axis axis);

// Labels accepted on input for an axis: scheme labels plus, for mutually
// exclusive schemes, the raw survey answers that group into them.
std::set<std::string> accepted_labels(const CategoryScheme& scheme);

struct OutcomeSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> scale_map;
  bool standardize = true;

  void validate() const;
  std::optional<double> code(std::string_view answer) const;
};

struct LoadDiagnostic {
  std::size_t line = 0;
  std::string id;
  std::string message;
};

class Corpus {
 public:
  Corpus() = default;
  // Throws CorpusError on duplicate or empty ids.
  Corpus(std::vector<Response> responses, std::vector<CategoryScheme> schemes = {},
         std::vector<LoadDiagnostic> rejected = {});

  const std::vector<Response>& responses() const { return responses_; }
  const std::vector<LoadDiagnostic>& rejected() const { return rejected_; }
  std::size_t size() const { return responses_.size(); }
  bool empty() const { return responses_.empty(); }
  const Response& operator[](std::size_t i) const { return responses_[i]; }

  // Configured scheme for the axis, or the built-in default.
  CategoryScheme scheme(Axis axis) const;
  const std::vector<CategoryScheme>& schemes() const { return schemes_; }

  // Same schemes, subset of responses in the given order.
  Corpus subset(const std::vector<std::size_t>& rows) const;

 private:
  std::vector<Response> responses_;
  std::vector<CategoryScheme> schemes_;
  std::vector<LoadDiagnostic> rejected_;
};

// Reads line-delimited JSON. Malformed lines and duplicate ids throw;
// records with unknown labels or answers are rejected with a diagnostic.
Corpus load_corpus(const std::filesystem::path& path, const std::vector<CategoryScheme>& schemes,
                   const std::vector<OutcomeSpec>& outcome_specs);
Corpus parse_corpus(std::string_view text, const std::vector<CategoryScheme>& schemes,
                    const std::vector<OutcomeSpec>& outcome_specs);

// Grouped label used for figures and category counts.
std::string group_mutually_exclusive(const std::set<std::string>& categories, Axis axis);
// Every label group_mutually_exclusive accepts for the axis in raw form.
std::vector<std::string> grouping_vocabulary(Axis axis);
// Every label group_mutually_exclusive can return for the axis.
std::vector<std::string> grouped_labels(Axis axis);

// Responses with an affirmatively discordant similarity answer and a
// nonempty perceived-identity text for the axis.
Corpus filter_discordant(const Corpus& corpus, Axis axis);

// Standardizes with the sample (n-1) standard deviation.
Eigen::VectorXd zscore(const Eigen::VectorXd& values);

int word_count(std::string_view text);

enum class ColumnKind { Intercept, Category, Theme };

struct DesignColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Category;
  // Provenance-qualified name: "intercept", "category:<label>", "theme:<latent>".
  std::string qualified_name() const;
};

struct DesignMatrix {
  std::vector<std::string> rows;
  std::vector<DesignColumn> columns;
  Eigen::MatrixXd values;

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(values.cols()); }
  std::vector<std::string> qualified_names() const;
  DesignMatrix select_rows(const std::vector<std::size_t>& rows) const;
  // Appends a 0/1 column; throws on length mismatch.
  void append_column(DesignColumn column, const Eigen::VectorXd& values);
};

// Intercept, one indicator per category label (minus the reference for
// mutually exclusive schemes), then one indicator per annotation theme.
DesignMatrix design_matrix(const Corpus& corpus, Axis axis,
                           const AnnotationMatrix* annotation = nullptr);

// Category label for a response on a mutually exclusive axis.
std::string exclusive_category(const Response& response, const CategoryScheme& scheme);

}  // namespace iyow
