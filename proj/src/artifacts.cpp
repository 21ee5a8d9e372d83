#include "iyow/artifacts.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "iyow/error.hpp"
#include "iyow/util.hpp"

namespace iyow::artifacts {

static_assert(std::endian::native == std::endian::little, "artifact files are little-endian");

std::string number_cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(kMissing); }

std::string number_cell(const std::optional<double>& v) { return v ? number_cell(*v) : std::string(kMissing); }

namespace {

std::string bool_cell(bool b) { return b ? "true" : "false"; }

bool parse_bool_cell(const std::string& s, std::string_view what) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(std::string(what) + ": expected true or false, got '" + s + "'");
}

int parse_int_cell(const std::string& s, std::string_view what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(std::string(what) + ": expected an integer, got '" + s + "'");
}

std::optional<double> parse_number_cell(const std::string& s, std::string_view what) {
  if (s.empty() || s == kMissing) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(std::string(what) + ": expected a number, got '" + s + "'");
}

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw Error("embeddings file is truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

constexpr char kEmbeddingMagic[8] = {'I', 'Y', 'O', 'W', 'E', 'M', 'B', '\0'};
constexpr std::uint32_t kEmbeddingVersion = 1;

}  // namespace

std::vector<std::vector<std::string>> read_table(std::string_view text, const std::vector<std::string>& columns,
                                                 std::string_view what) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw Error(std::string(what) + ": file is empty");
  if (rows.front() != columns) throw Error(std::string(what) + ": unexpected header");
  rows.erase(rows.begin());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != columns.size()) {
      throw Error(std::string(what) + ": row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                  " fields, expected " + std::to_string(columns.size()));
    }
  }
  return rows;
}

std::string serialize_embeddings(const EmbeddingStore& store) {
  if (static_cast<Eigen::Index>(store.row_ids.size()) != store.values.rows()) {
    throw Error("embedding store: row id count does not match the matrix");
  }
  std::string out(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  put(out, kEmbeddingVersion);
  put(out, static_cast<std::uint64_t>(store.values.rows()));
  put(out, static_cast<std::uint64_t>(store.values.cols()));
  for (const auto& id : store.row_ids) {
    put(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  for (Eigen::Index i = 0; i < store.values.rows(); ++i)
    for (Eigen::Index j = 0; j < store.values.cols(); ++j) put(out, store.values(i, j));
  return out;
}

EmbeddingStore deserialize_embeddings(std::string_view in) {
  if (in.size() < sizeof(kEmbeddingMagic) || std::memcmp(in.data(), kEmbeddingMagic, sizeof(kEmbeddingMagic)) != 0) {
    throw Error("not an embeddings file");
  }
  in.remove_prefix(sizeof(kEmbeddingMagic));
  const auto version = take<std::uint32_t>(in);
  if (version != kEmbeddingVersion) throw Error("unsupported embeddings layout version " + std::to_string(version));
  const auto n = take<std::uint64_t>(in);
  const auto d = take<std::uint64_t>(in);
  EmbeddingStore s;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = take<std::uint32_t>(in);
    if (in.size() < len) throw Error("embeddings file is truncated");
    s.row_ids.emplace_back(in.substr(0, len));
    in.remove_prefix(len);
  }
  s.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < s.values.rows(); ++i)
    for (Eigen::Index j = 0; j < s.values.cols(); ++j) s.values(i, j) = take<double>(in);
  if (!in.empty()) throw Error("embeddings file has trailing bytes");
  return s;
}

std::string themes_csv(const InterpretationResult& result) {
  std::string out = csv_row(kThemesColumns);
  for (const auto& rec : result.latents) {
    if (rec.status == LatentStatus::Uninterpretable || !rec.theme) {
      out += csv_row({std::to_string(rec.latent_index), "", "", "false", std::string(kUninterpretable)});
      continue;
    }
    const Theme& t = *rec.theme;
    out += csv_row({std::to_string(t.latent_index), t.text, number_cell(t.fidelity), bool_cell(t.retained),
                    t.exclusion_reason ? std::string(to_string(*t.exclusion_reason)) : ""});
  }
  return out;
}

std::vector<ThemeRow> parse_themes_csv(std::string_view text) {
  std::vector<ThemeRow> rows;
  for (const auto& f : read_table(text, kThemesColumns, "themes.csv")) {
    ThemeRow r;
    r.latent_index = parse_int_cell(f[0], "themes.csv latent_index");
    r.text = f[1];
    r.fidelity = parse_number_cell(f[2], "themes.csv fidelity");
    r.retained = parse_bool_cell(f[3], "themes.csv retained");
    r.exclusion_reason = f[4];
    if (!r.exclusion_reason.empty() && r.exclusion_reason != kUninterpretable &&
        !parse_exclusion_reason(r.exclusion_reason)) {
      throw Error("themes.csv: unknown exclusion reason '" + r.exclusion_reason + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Theme> retained_themes(const std::vector<ThemeRow>& rows) {
  std::vector<Theme> out;
  for (const auto& r : rows) {
    if (!r.retained) continue;
    Theme t;
    t.latent_index = r.latent_index;
    t.text = r.text;
    t.fidelity = r.fidelity.value_or(0.0);
    t.retained = true;
    out.push_back(std::move(t));
  }
  return out;
}

std::string candidates_csv(const InterpretationResult& result) {
  std::string out = csv_row(kCandidatesColumns);
  for (const auto& rec : result.latents) {
    if (rec.candidates.empty()) continue;
    const std::size_t best = best_candidate(rec.candidates);
    for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
      const auto& c = rec.candidate_fidelity[i].counts;
      out += csv_row({std::to_string(rec.latent_index), std::to_string(i), rec.candidates[i].text,
                      number_cell(rec.candidates[i].fidelity), std::to_string(c.tp), std::to_string(c.fp),
                      std::to_string(c.fn), std::to_string(c.tn), bool_cell(i == best)});
    }
  }
  return out;
}

std::string annotations_csv(const AnnotationMatrix& m) {
  m.validate();
  std::vector<std::string> header{"response_id"};
  for (const auto& t : m.themes) header.push_back("latent_" + std::to_string(t.latent_index));
  std::string out = csv_row(header);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row{m.row_ids[i]};
    for (std::size_t k = 0; k < m.cols(); ++k) {
      row.push_back(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) ? "1" : "0");
    }
    out += csv_row(row);
  }
  return out;
}

AnnotationMatrix parse_annotations_csv(std::string_view text, const std::vector<Theme>& themes) {
  std::vector<std::string> header{"response_id"};
  for (const auto& t : themes) header.push_back("latent_" + std::to_string(t.latent_index));
  const auto rows = read_table(text, header, "annotations.csv");
  AnnotationMatrix m;
  m.themes = themes;
  m.values = BinaryMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(themes.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.row_ids.push_back(rows[i][0]);
    for (std::size_t k = 0; k < themes.size(); ++k) {
      const auto& cell = rows[i][k + 1];
      if (cell != "0" && cell != "1") throw Error("annotations.csv: entry '" + cell + "' is not 0 or 1");
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cell == "1" ? 1 : 0;
    }
  }
  m.validate();
  return m;
}

std::string nested_f_csv(const std::vector<NestedFRow>& rows) {
  std::string out = csv_row(kNestedFColumns);
  for (const auto& r : rows) {
    if (!r.result) {
      out += csv_row({r.identity, r.outcome, std::string(kMissing), std::string(kMissing), std::string(kMissing),
                      std::string(kMissing), std::string(kMissing), std::string(kMissing), "false"});
      continue;
    }
    const auto& f = *r.result;
    out += csv_row({r.identity, r.outcome, number_cell(f.adj_r2_base), number_cell(f.adj_r2_full),
                    number_cell(f.ratio), number_cell(f.f_stat), number_cell(f.p_value), number_cell(r.p_bh),
                    bool_cell(r.significant)});
  }
  return out;
}

std::string theme_r2_csv(const ThemeR2Table& table) {
  std::string out = csv_row(kThemeR2Columns);
  for (const auto& r : table.rows) {
    out += csv_row({std::to_string(r.latent_index), r.theme, number_cell(r.r2), number_cell(r.adj_r2),
                    number_cell(r.mcfadden_r2), number_cell(r.coxsnell_r2), bool_cell(r.constant)});
  }
  return out;
}

std::string theme_r2_medians_csv(const ThemeR2Table& table) {
  std::string out = csv_row(kThemeR2MedianColumns);
  for (const auto& [metric, value] : table.medians) out += csv_row({metric, number_cell(value)});
  return out;
}

std::string theme_coefficients_csv(const std::vector<std::pair<std::string, std::vector<ThemeEffect>>>& by_outcome) {
  std::string out = csv_row(kThemeCoefficientColumns);
  for (const auto& [outcome, effects] : by_outcome) {
    for (const auto& e : effects) {
      const std::string na(kMissing);
      out += csv_row({outcome, std::to_string(e.latent_index), e.theme, bool_cell(e.estimated),
                      e.estimated ? number_cell(e.gamma) : na, e.estimated ? number_cell(e.hc3_se) : na,
                      e.estimated ? number_cell(e.ci_low) : na, e.estimated ? number_cell(e.ci_high) : na,
                      std::to_string(e.n), e.diagnostic});
    }
  }
  return out;
}

std::string adds_info_csv(const LogisticFit& fit) {
  std::string out = csv_row(kAddsInfoColumns);
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    out += csv_row({fit.names[j], number_cell(fit.beta[k]), number_cell(fit.se[k]), number_cell(fit.odds_ratios[k]),
                    number_cell(fit.p_values[k])});
  }
  return out;
}

}  // namespace iyow::artifacts
