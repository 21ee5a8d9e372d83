#pragma once

// Human-facing report: theme x category counts, a markdown summary and an
// optional SVG bar chart.

#include <string>
#include <vector>

#include "iyow/annotation.hpp"
#include "iyow/artifacts.hpp"
#include "iyow/corpus.hpp"

namespace iyow {

inline const std::vector<std::string> kCategoryCountColumns = {
    "latent_index", "theme", "category", "category_size", "theme_count", "share_of_theme", "rate_in_category"};

struct CategoryCount {
  int latent_index = 0;
  std::string theme;
  std::string category;
  std::size_t category_size = 0;
  std::size_t theme_count = 0;
  double share_of_theme = 0.0;    // of the theme's respondents in reported categories; NaN if none
  double rate_in_category = 0.0;  // of the category's respondents
};

struct CategoryCountTable {
  std::vector<std::string> categories;  // reported, in grouped-label order
  std::vector<std::pair<std::string, std::size_t>> omitted;  // below the size threshold
  std::vector<CategoryCount> rows;
};

// Respondents are grouped with group_mutually_exclusive. Categories with
// fewer than min_group_size respondents are omitted.
CategoryCountTable theme_category_counts(const Corpus& corpus, Axis axis, const AnnotationMatrix& Z,
                                         std::size_t min_group_size);

std::string category_counts_csv(const CategoryCountTable& table);
// Empty string when there is nothing to draw.
std::string category_chart_svg(const CategoryCountTable& table, Axis axis);

struct SummaryInputs {
  Axis axis = Axis::Race;
  std::size_t responses = 0;
  std::vector<artifacts::ThemeRow> themes;
  std::vector<std::vector<std::string>> nested_f;    // kNestedFColumns rows
  std::vector<std::vector<std::string>> r2_medians;  // metric, value rows
  CategoryCountTable counts;
  std::size_t min_group_size = 10;
  bool chart_written = false;
};

std::string summary_markdown(const SummaryInputs& in);

}  // namespace iyow
