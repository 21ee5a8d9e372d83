#pragma once

// From SAE latents to validated themes: exemplar selection, candidate
// generation, fidelity scoring, filtering, annotation and agreement.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iyow/annotation.hpp"
#include "iyow/corpus.hpp"
#include "iyow/providers.hpp"
#include "iyow/sae.hpp"

namespace iyow {

struct Exemplars {
  std::vector<std::size_t> positives;  // descending activation, ties by row order
  std::vector<std::size_t> zeros;      // seeded draw order
  // False when fewer than n_pos rows activate the latent.
  bool interpretable = true;
};

// Throws if interpretable and fewer than n_zero rows have zero activation.
Exemplars select_exemplars(const ActivationMatrix& acts, int latent, int n_pos, int n_zero, std::uint64_t seed);

// Rows with strictly positive activation on the latent, highest first (ties
// by row order), at most `limit` of them.
std::vector<std::size_t> top_active_rows(const ActivationMatrix& acts, int latent, std::size_t limit);
std::vector<std::size_t> zero_rows(const ActivationMatrix& acts, int latent);

struct CandidateOptions {
  std::string model_id = "gpt-4o";
  int n_candidates = 3;
  double temperature = 0.7;
};

struct CandidateResult {
  std::vector<std::string> candidates;  // parsed, in sample order
  std::vector<std::string> raw_replies;
  int dropped = 0;
};

// Requests n_candidates completions. An unparseable reply is retried once in
// a fresh sample slot and dropped if the retry also fails.
CandidateResult generate_candidates(Axis axis, const std::vector<std::string>& positives,
                                    const std::vector<std::string>& zeros, ChatProvider& chat,
                                    const CandidateOptions& options = {});

struct AnnotatorOptions {
  std::string model_id = "gpt-4.1-mini";
  std::size_t max_workers = 8;
};

// One annotation call at temperature 0.
bool annotate_one(ChatProvider& annotator, const std::string& model_id, const std::string& hypothesis,
                  const std::string& text);

struct Confusion {
  int tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(const std::vector<std::uint8_t>& predicted, const std::vector<std::uint8_t>& truth);
// 2tp / (2tp + fp + fn); 0 when nothing is predicted positive.
double f1_score(const Confusion& c);

struct FidelityOptions {
  int n_pos = 100;
  int n_neg = 100;
  std::uint64_t seed = 0;
  AnnotatorOptions annotator{"gpt-4o-mini", 8};
};

struct FidelityResult {
  double f1 = 0.0;
  Confusion counts;
  std::size_t positives_used = 0;
  std::size_t negatives_used = 0;
};

// `texts` are aligned with the rows of `acts`.
FidelityResult fidelity(const std::string& candidate, const ActivationMatrix& acts, int latent,
                        const std::vector<std::string>& texts, ChatProvider& annotator,
                        const FidelityOptions& options = {});

struct ScoredCandidate {
  std::string text;
  double fidelity = 0.0;
};

// Highest fidelity, ties to the earliest candidate. Throws on an empty list.
std::size_t best_candidate(const std::vector<ScoredCandidate>& candidates);
Theme select_interpretation(int latent_index, const std::vector<ScoredCandidate>& candidates);

struct FilterResult {
  std::vector<Theme> themes;    // input order, flags and reasons filled in
  std::vector<Theme> retained;  // subset of themes
  std::size_t low_fidelity = 0;
  std::size_t style_only = 0;
};

// Style exclusion takes precedence over low fidelity when both apply.
FilterResult filter_themes(std::vector<Theme> themes, double min_fidelity = 0.50,
                           const std::set<int>& style_exclusions = {});

using AnnotationProgress = std::function<void(std::size_t done, std::size_t total)>;

AnnotationMatrix annotate_matrix(const std::vector<Theme>& themes, const std::vector<std::string>& row_ids,
                                 const std::vector<std::string>& texts, ChatProvider& annotator,
                                 const AnnotatorOptions& options = {}, const AnnotationProgress& progress = {});

// Entries must be 0 or 1. When chance agreement is 1 the result is 1 for
// identical vectors and 0 otherwise.
double cohens_kappa(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

struct AgreementReport {
  std::vector<double> kappa;
  double median_kappa = 0.0;
  double human_positive_rate = 0.0;  // percent, pooled over themes
  double model_positive_rate = 0.0;
  double delta_pp = 0.0;             // model minus human
};

AgreementReport agreement_report(const std::vector<std::vector<std::uint8_t>>& model_labels,
                                 const std::vector<std::vector<std::uint8_t>>& human_labels);

// Theme texts that read like writing style rather than content. Surfaced in
// reports for a human to confirm; never excluded automatically.
bool looks_style_only(const std::string& theme_text);

// --- Whole-axis interpretation ----------------------------------------------

enum class LatentStatus { Retained, Excluded, Uninterpretable };

std::string_view to_string(LatentStatus status);

struct LatentRecord {
  int latent_index = 0;
  LatentStatus status = LatentStatus::Uninterpretable;
  std::optional<Theme> theme;
  std::vector<ScoredCandidate> candidates;
  std::vector<FidelityResult> candidate_fidelity;
  std::string note;
};

struct InterpretationOptions {
  int n_pos = 10;
  int n_zero = 10;
  CandidateOptions candidates;
  FidelityOptions fidelity;
  double min_fidelity = 0.50;
  std::set<int> style_exclusions;
  std::uint64_t seed = 0;
};

struct InterpretationResult {
  std::vector<LatentRecord> latents;  // one per latent, in index order
  std::vector<Theme> retained;
};

// Seeds for exemplar and fidelity sampling derive from options.seed and the
// latent index.
InterpretationResult interpret_all(Axis axis, const ActivationMatrix& acts, const std::vector<std::string>& texts,
                                   ChatProvider& chat, ChatProvider& annotator,
                                   const InterpretationOptions& options = {});

}  // namespace iyow
