#include "iyow/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "iyow/error.hpp"
#include "iyow/themes.hpp"
#include "iyow/util.hpp"

namespace iyow {

CategoryCountTable theme_category_counts(const Corpus& corpus, Axis axis, const AnnotationMatrix& Z,
                                         std::size_t min_group_size) {
  if (Z.rows() != corpus.size()) throw Error("category counts: annotation and corpus differ in size");
  std::vector<std::string> group(corpus.size());
  std::map<std::string, std::size_t> sizes;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (Z.row_ids[i] != corpus[i].id) throw Error("category counts: annotation rows are not aligned with the corpus");
    auto it = corpus[i].categories.find(axis);
    if (it == corpus[i].categories.end() || it->second.empty()) {
      throw CorpusError("response '" + corpus[i].id + "' has no " + std::string(to_string(axis)) + " categories");
    }
    group[i] = group_mutually_exclusive(it->second, axis);
    ++sizes[group[i]];
  }

  CategoryCountTable table;
  std::vector<std::string> order = grouped_labels(axis);
  for (const auto& [label, n] : sizes) {
    if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);
  }
  for (const auto& label : order) {
    auto it = sizes.find(label);
    if (it == sizes.end()) continue;
    if (it->second >= min_group_size) {
      table.categories.push_back(label);
    } else {
      table.omitted.emplace_back(label, it->second);
    }
  }

  for (std::size_t k = 0; k < Z.cols(); ++k) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!Z.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) continue;
      if (sizes.at(group[i]) < min_group_size) continue;
      ++counts[group[i]];
      ++total;
    }
    for (const auto& label : table.categories) {
      CategoryCount c;
      c.latent_index = Z.themes[k].latent_index;
      c.theme = Z.themes[k].text;
      c.category = label;
      c.category_size = sizes.at(label);
      c.theme_count = counts[label];
      c.share_of_theme = total ? static_cast<double>(c.theme_count) / static_cast<double>(total)
                               : std::numeric_limits<double>::quiet_NaN();
      c.rate_in_category = static_cast<double>(c.theme_count) / static_cast<double>(c.category_size);
      table.rows.push_back(std::move(c));
    }
  }
  return table;
}

std::string category_counts_csv(const CategoryCountTable& table) {
  std::string out = csv_row(kCategoryCountColumns);
  for (const auto& r : table.rows) {
    out += csv_row({std::to_string(r.latent_index), r.theme, r.category, std::to_string(r.category_size),
                    std::to_string(r.theme_count), artifacts::number_cell(r.share_of_theme),
                    artifacts::number_cell(r.rate_in_category)});
  }
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

}  // namespace

std::string category_chart_svg(const CategoryCountTable& table, Axis axis) {
  if (table.rows.empty() || table.categories.empty()) return {};
  // Rows are grouped by theme in category order; recover the theme list.
  std::vector<std::pair<int, std::string>> themes;
  for (const auto& r : table.rows) {
    if (themes.empty() || themes.back().first != r.latent_index) themes.emplace_back(r.latent_index, r.theme);
  }
  const int label_w = 420, bar_w = 360, row_h = 22, top = 40, legend_h = 20 * static_cast<int>(table.categories.size());
  const int width = label_w + bar_w + 40;
  const int height = top + row_h * static_cast<int>(themes.size()) + 30 + legend_h;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<text x=\"10\" y=\"20\" font-size=\"14\">Share of each theme's respondents by " +
         xml_escape(display_name(axis)) + " category</text>\n";
  std::size_t row = 0;
  for (std::size_t t = 0; t < themes.size(); ++t) {
    const int y = top + row_h * static_cast<int>(t);
    svg += "<text x=\"10\" y=\"" + std::to_string(y + 15) + "\">" + xml_escape(themes[t].second) + "</text>\n";
    double x = label_w;
    for (std::size_t c = 0; c < table.categories.size(); ++c, ++row) {
      const double share = table.rows[row].share_of_theme;
      if (!std::isfinite(share) || share <= 0.0) continue;
      const double w = share * bar_w;
      svg += "<rect x=\"" + fixed(x, 2) + "\" y=\"" + std::to_string(y + 3) + "\" width=\"" + fixed(w, 2) +
             "\" height=\"" + std::to_string(row_h - 6) + "\" fill=\"" + kPalette[c % std::size(kPalette)] +
             "\"/>\n";
      x += w;
    }
  }
  const int legend_top = top + row_h * static_cast<int>(themes.size()) + 20;
  for (std::size_t c = 0; c < table.categories.size(); ++c) {
    const int y = legend_top + 20 * static_cast<int>(c);
    svg += "<rect x=\"" + std::to_string(label_w) + "\" y=\"" + std::to_string(y) + "\" width=\"12\" height=\"12\" fill=\"" +
           kPalette[c % std::size(kPalette)] + "\"/>\n";
    svg += "<text x=\"" + std::to_string(label_w + 18) + "\" y=\"" + std::to_string(y + 10) + "\">" +
           xml_escape(table.categories[c]) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

std::string sig_cell(const std::string& s) {
  if (s.empty() || s == artifacts::kMissing) return s.empty() ? "" : "n/a";
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return format_sig(v, 3);
  } catch (const std::exception&) {
  }
  return s;
}

std::string md_escape(const std::string& s) { return replace_all(s, "|", "\\|"); }

}  // namespace

std::string summary_markdown(const SummaryInputs& in) {
  std::string md = "# Free-text themes: " + std::string(display_name(in.axis)) + "\n\n";
  md += "Responses analyzed: " + std::to_string(in.responses) + "\n\n";

  std::size_t retained = 0, low = 0, style = 0, uninterpretable = 0;
  for (const auto& t : in.themes) {
    if (t.retained) ++retained;
    else if (t.exclusion_reason == "LowFidelity") ++low;
    else if (t.exclusion_reason == "StyleOnly") ++style;
    else ++uninterpretable;
  }
  md += "## Themes\n\n";
  md += "Latents: " + std::to_string(in.themes.size()) + "; retained: " + std::to_string(retained) +
        "; low fidelity: " + std::to_string(low) + "; style only: " + std::to_string(style) +
        "; uninterpretable: " + std::to_string(uninterpretable) + "\n\n";
  if (retained == 0) {
    md += "No themes were retained, so there is no annotation to chart.\n\n";
  } else {
    md += "| latent | theme | fidelity |\n|---:|---|---:|\n";
    for (const auto& t : in.themes) {
      if (!t.retained) continue;
      md += "| " + std::to_string(t.latent_index) + " | " + md_escape(t.text) + " | " +
            (t.fidelity ? format_sig(*t.fidelity, 3) : "") + " |\n";
    }
    md += "\n";
  }
  std::vector<const artifacts::ThemeRow*> style_like;
  for (const auto& t : in.themes) {
    if (t.retained && looks_style_only(t.text)) style_like.push_back(&t);
  }
  if (!style_like.empty()) {
    md += "Retained themes that read like writing style (review and list in `style_exclusions` if appropriate):\n\n";
    for (const auto* t : style_like) md += "- latent " + std::to_string(t->latent_index) + ": " + t->text + "\n";
    md += "\n";
  }

  md += "## Nested F-tests (categories vs. categories + themes)\n\n";
  if (in.nested_f.empty()) {
    md += "No outcomes were analyzed.\n\n";
  } else {
    md += "| outcome | adj. R² base | adj. R² full | ratio | F | p | p (BH) | significant |\n";
    md += "|---|---:|---:|---:|---:|---:|---:|---|\n";
    for (const auto& r : in.nested_f) {
      md += "| " + md_escape(r.at(1)) + " | " + sig_cell(r.at(2)) + " | " + sig_cell(r.at(3)) + " | " +
            sig_cell(r.at(4)) + " | " + sig_cell(r.at(5)) + " | " + sig_cell(r.at(6)) + " | " + sig_cell(r.at(7)) +
            " | " + r.at(8) + " |\n";
    }
    md += "\n";
  }

  md += "## Theme R² medians\n\n";
  if (in.r2_medians.empty()) {
    md += "No retained themes.\n\n";
  } else {
    md += "| metric | median |\n|---|---:|\n";
    for (const auto& r : in.r2_medians) md += "| " + r.at(0) + " | " + sig_cell(r.at(1)) + " |\n";
    md += "\n";
  }

  md += "## Categories\n\n";
  md += "Reported categories (at least " + std::to_string(in.min_group_size) + " respondents): ";
  for (std::size_t i = 0; i < in.counts.categories.size(); ++i) md += (i ? ", " : "") + in.counts.categories[i];
  md += in.counts.categories.empty() ? "none\n\n" : "\n\n";
  if (!in.counts.omitted.empty()) {
    md += "Omitted for size: ";
    for (std::size_t i = 0; i < in.counts.omitted.size(); ++i) {
      md += (i ? ", " : "") + in.counts.omitted[i].first + " (" + std::to_string(in.counts.omitted[i].second) + ")";
    }
    md += "\n\n";
  }
  if (in.chart_written) md += "Chart: `theme_categories.svg`; data: `theme_category_counts.csv`.\n";
  return md;
}

}  // namespace iyow
