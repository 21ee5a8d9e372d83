#pragma once

// On-disk formats of the per-axis artifacts and their column schemas.

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iyow/annotation.hpp"
#include "iyow/stats.hpp"
#include "iyow/themes.hpp"

namespace iyow::artifacts {

inline const std::vector<std::string> kThemesColumns = {"latent_index", "text", "fidelity", "retained",
                                                        "exclusion_reason"};
inline const std::vector<std::string> kCandidatesColumns = {"latent_index", "candidate_index", "text", "fidelity",
                                                            "tp", "fp", "fn", "tn", "selected"};
inline const std::vector<std::string> kNestedFColumns = {"identity", "outcome", "adj_r2_base", "adj_r2_full", "ratio",
                                                         "f", "p", "p_bh", "significant"};
inline const std::vector<std::string> kThemeR2Columns = {"latent_index", "theme", "r2", "adj_r2", "mcfadden_r2",
                                                         "coxsnell_r2", "constant_flag"};
inline const std::vector<std::string> kThemeR2MedianColumns = {"metric", "value"};
inline const std::vector<std::string> kThemeCoefficientColumns = {
    "outcome", "latent_index", "theme", "estimated", "gamma", "hc3_se", "ci_low", "ci_high", "n", "diagnostic"};
inline const std::vector<std::string> kAddsInfoColumns = {"term", "beta", "se", "odds_ratio", "p_value"};

// Written for latents that produced no theme.
inline constexpr std::string_view kUninterpretable = "Uninterpretable";
// Written for statistics that are undefined.
inline constexpr std::string_view kMissing = "NA";

// --- embeddings.bin ---------------------------------------------------------

struct EmbeddingStore {
  std::vector<std::string> row_ids;
  Eigen::MatrixXd values;  // N x d
};

std::string serialize_embeddings(const EmbeddingStore& store);
EmbeddingStore deserialize_embeddings(std::string_view bytes);

// --- themes.csv / candidates.csv -------------------------------------------

struct ThemeRow {
  int latent_index = 0;
  std::string text;
  std::optional<double> fidelity;
  bool retained = false;
  std::string exclusion_reason;  // empty, an ExclusionReason name, or kUninterpretable
};

std::string themes_csv(const InterpretationResult& result);
std::vector<ThemeRow> parse_themes_csv(std::string_view text);
std::vector<Theme> retained_themes(const std::vector<ThemeRow>& rows);
std::string candidates_csv(const InterpretationResult& result);

// --- annotations.csv --------------------------------------------------------

// Header: response_id, then one "latent_<index>" column per retained theme.
std::string annotations_csv(const AnnotationMatrix& m);
// Columns are matched to `themes` by latent index.
AnnotationMatrix parse_annotations_csv(std::string_view text, const std::vector<Theme>& themes);

// --- stats ------------------------------------------------------------------

struct NestedFRow {
  std::string identity;
  std::string outcome;
  std::optional<NestedFResult> result;  // empty when the test could not run
  std::optional<double> p_bh;
  bool significant = false;
  std::string note;
};

std::string nested_f_csv(const std::vector<NestedFRow>& rows);
std::string theme_r2_csv(const ThemeR2Table& table);
std::string theme_r2_medians_csv(const ThemeR2Table& table);
std::string theme_coefficients_csv(const std::vector<std::pair<std::string, std::vector<ThemeEffect>>>& by_outcome);
std::string adds_info_csv(const LogisticFit& fit);

// Number cell: shortest round-trip form, or kMissing when not finite.
std::string number_cell(double v);
std::string number_cell(const std::optional<double>& v);

// Parses a CSV file and checks its header against `columns`.
std::vector<std::vector<std::string>> read_table(std::string_view text, const std::vector<std::string>& columns,
                                                 std::string_view what);

}  // namespace iyow::artifacts
