#include "iyow/themes.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>

#include "iyow/error.hpp"
#include "iyow/prompts.hpp"
#include "iyow/util.hpp"

namespace iyow {

std::string_view to_string(ExclusionReason reason) {
  switch (reason) {
    case ExclusionReason::LowFidelity: return "LowFidelity";
    case ExclusionReason::StyleOnly: return "StyleOnly";
  }
  return "";
}

std::optional<ExclusionReason> parse_exclusion_reason(std::string_view s) {
  if (s == "LowFidelity") return ExclusionReason::LowFidelity;
  if (s == "StyleOnly") return ExclusionReason::StyleOnly;
  return std::nullopt;
}

void AnnotationMatrix::validate() const {
  if (row_ids.size() != rows()) {
    throw Error("annotation matrix has " + std::to_string(rows()) + " rows but " + std::to_string(row_ids.size()) +
                " row ids");
  }
  if (themes.size() != cols()) {
    throw Error("annotation matrix has " + std::to_string(cols()) + " columns but " +
                std::to_string(themes.size()) + " themes");
  }
  for (const auto& t : themes) {
    if (!t.retained) throw Error("annotation matrix column for latent " + std::to_string(t.latent_index) +
                                 " is not a retained theme");
  }
  if ((values.array() > 1).any()) throw Error("annotation matrix entries must be 0 or 1");
}

std::string_view to_string(LatentStatus status) {
  switch (status) {
    case LatentStatus::Retained: return "retained";
    case LatentStatus::Excluded: return "excluded";
    case LatentStatus::Uninterpretable: return "uninterpretable";
  }
  return "";
}

namespace {

void check_latent(const ActivationMatrix& acts, int latent) {
  if (latent < 0 || latent >= acts.values.cols()) {
    throw Error("latent index " + std::to_string(latent) + " out of range for " +
                std::to_string(acts.values.cols()) + " latents");
  }
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::vector<std::size_t> top_active_rows(const ActivationMatrix& acts, int latent, std::size_t limit) {
  check_latent(acts, latent);
  std::vector<std::size_t> rows;
  for (Eigen::Index i = 0; i < acts.values.rows(); ++i) {
    if (acts.values(i, latent) > 0.0) rows.push_back(static_cast<std::size_t>(i));
  }
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return acts.values(static_cast<Eigen::Index>(a), latent) > acts.values(static_cast<Eigen::Index>(b), latent);
  });
  if (rows.size() > limit) rows.resize(limit);
  return rows;
}

std::vector<std::size_t> zero_rows(const ActivationMatrix& acts, int latent) {
  check_latent(acts, latent);
  std::vector<std::size_t> rows;
  for (Eigen::Index i = 0; i < acts.values.rows(); ++i) {
    if (acts.values(i, latent) == 0.0) rows.push_back(static_cast<std::size_t>(i));
  }
  return rows;
}

Exemplars select_exemplars(const ActivationMatrix& acts, int latent, int n_pos, int n_zero, std::uint64_t seed) {
  if (n_pos < 1 || n_zero < 0) throw Error("select_exemplars needs n_pos >= 1 and n_zero >= 0");
  Exemplars ex;
  ex.positives = top_active_rows(acts, latent, static_cast<std::size_t>(n_pos));
  if (ex.positives.size() < static_cast<std::size_t>(n_pos)) {
    ex.interpretable = false;
    return ex;
  }
  const auto zeros = zero_rows(acts, latent);
  if (zeros.size() < static_cast<std::size_t>(n_zero)) {
    throw Error("latent " + std::to_string(latent) + " has " + std::to_string(zeros.size()) +
                " zero-activation rows, " + std::to_string(n_zero) + " required");
  }
  Rng rng(seed);
  for (std::size_t k : rng.sample(zeros.size(), static_cast<std::size_t>(n_zero))) ex.zeros.push_back(zeros[k]);
  return ex;
}

CandidateResult generate_candidates(Axis axis, const std::vector<std::string>& positives,
                                    const std::vector<std::string>& zeros, ChatProvider& chat,
                                    const CandidateOptions& options) {
  if (positives.empty() || zeros.empty()) throw Error("generate_candidates needs positive and zero exemplars");
  if (options.n_candidates < 1) throw Error("n_candidates must be positive");
  CompletionRequest req;
  req.model_id = options.model_id;
  req.prompt = build_interpretation_prompt(axis, positives, zeros);
  req.temperature = options.temperature;
  req.n_samples = options.n_candidates;
  req.first_sample = 0;
  const auto replies = chat.complete(req);

  CandidateResult out;
  for (int i = 0; i < options.n_candidates; ++i) {
    const std::string& reply = replies.at(static_cast<std::size_t>(i));
    out.raw_replies.push_back(reply);
    auto parsed = parse_candidate(reply);
    if (!parsed) {
      // Retry in a slot no first-round sample uses, so caching cannot replay the failure.
      CompletionRequest retry = req;
      retry.n_samples = 1;
      retry.first_sample = options.n_candidates + i;
      const auto again = chat.complete(retry);
      out.raw_replies.push_back(again.at(0));
      parsed = parse_candidate(again.at(0));
    }
    if (parsed) {
      out.candidates.push_back(std::move(*parsed));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

bool annotate_one(ChatProvider& annotator, const std::string& model_id, const std::string& hypothesis,
                  const std::string& text) {
  CompletionRequest req;
  req.model_id = model_id;
  req.prompt = build_annotation_prompt(hypothesis, text);
  req.temperature = 0.0;
  req.n_samples = 1;
  return parse_yes(annotator.complete(req).at(0));
}

Confusion confusion(const std::vector<std::uint8_t>& predicted, const std::vector<std::uint8_t>& truth) {
  if (predicted.size() != truth.size()) throw Error("confusion: label vectors differ in length");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] != 0, t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_score(const Confusion& c) {
  if (c.tp + c.fp == 0) return 0.0;
  return 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

FidelityResult fidelity(const std::string& candidate, const ActivationMatrix& acts, int latent,
                        const std::vector<std::string>& texts, ChatProvider& annotator,
                        const FidelityOptions& options) {
  if (trim(candidate).empty()) throw Error("fidelity needs a nonempty candidate");
  if (texts.size() != static_cast<std::size_t>(acts.values.rows())) {
    throw Error("fidelity: text count does not match activation rows");
  }
  if (options.n_pos < 1 || options.n_neg < 0) throw Error("fidelity needs n_pos >= 1 and n_neg >= 0");
  const auto positives = top_active_rows(acts, latent, static_cast<std::size_t>(options.n_pos));
  const auto zeros = zero_rows(acts, latent);
  Rng rng(options.seed);
  const auto picks = rng.sample(zeros.size(), std::min<std::size_t>(zeros.size(), static_cast<std::size_t>(options.n_neg)));

  std::vector<std::size_t> rows = positives;
  for (std::size_t k : picks) rows.push_back(zeros[k]);
  std::vector<std::uint8_t> truth(rows.size(), 0), predicted(rows.size(), 0);
  std::fill(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(positives.size()), 1);

  parallel_for(rows.size(), options.annotator.max_workers, [&](std::size_t i) {
    predicted[i] = annotate_one(annotator, options.annotator.model_id, candidate, texts[rows[i]]) ? 1 : 0;
  });

  FidelityResult r;
  r.counts = confusion(predicted, truth);
  r.f1 = f1_score(r.counts);
  r.positives_used = positives.size();
  r.negatives_used = picks.size();
  return r;
}

std::size_t best_candidate(const std::vector<ScoredCandidate>& candidates) {
  if (candidates.empty()) throw Error("select_interpretation needs at least one candidate");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].fidelity > candidates[best].fidelity) best = i;
  }
  return best;
}

Theme select_interpretation(int latent_index, const std::vector<ScoredCandidate>& candidates) {
  const auto& c = candidates[best_candidate(candidates)];
  Theme t;
  t.latent_index = latent_index;
  t.text = c.text;
  t.fidelity = c.fidelity;
  return t;
}

FilterResult filter_themes(std::vector<Theme> themes, double min_fidelity, const std::set<int>& style_exclusions) {
  FilterResult r;
  for (auto& t : themes) {
    t.retained = false;
    t.exclusion_reason.reset();
    if (style_exclusions.count(t.latent_index)) {
      t.exclusion_reason = ExclusionReason::StyleOnly;
      ++r.style_only;
    } else if (!(t.fidelity >= min_fidelity)) {
      t.exclusion_reason = ExclusionReason::LowFidelity;
      ++r.low_fidelity;
    } else {
      t.retained = true;
      r.retained.push_back(t);
    }
  }
  r.themes = std::move(themes);
  return r;
}

AnnotationMatrix annotate_matrix(const std::vector<Theme>& themes, const std::vector<std::string>& row_ids,
                                 const std::vector<std::string>& texts, ChatProvider& annotator,
                                 const AnnotatorOptions& options, const AnnotationProgress& progress) {
  if (themes.empty()) throw Error("annotate_matrix needs at least one theme");
  if (row_ids.size() != texts.size()) throw Error("annotate_matrix: row ids and texts differ in length");
  AnnotationMatrix m;
  m.row_ids = row_ids;
  m.themes = themes;
  for (auto& t : m.themes) t.retained = true;
  const std::size_t n = texts.size(), t = themes.size(), total = n * t;
  m.values = BinaryMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));

  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  // Each cell is written by exactly one task; completed calls stay in the
  // provider cache, so a rerun after a failure resumes where it stopped.
  parallel_for(total, options.max_workers, [&](std::size_t cell) {
    const std::size_t i = cell / t, k = cell % t;
    const bool yes = annotate_one(annotator, options.model_id, themes[k].text, texts[i]);
    m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = yes ? 1 : 0;
    const std::size_t d = ++done;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(d, total);
    }
  });
  return m;
}

double cohens_kappa(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) throw Error("cohens_kappa: rater vectors differ in length");
  if (a.empty()) throw Error("cohens_kappa needs at least one item");
  std::int64_t n = static_cast<std::int64_t>(a.size()), agree = 0, ca = 0, cb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 1 || b[i] > 1) throw Error("cohens_kappa: labels must be 0 or 1");
    agree += a[i] == b[i];
    ca += a[i];
    cb += b[i];
  }
  // Everything scaled by n^2 keeps the arithmetic exact for integer counts.
  const std::int64_t chance = ca * cb + (n - ca) * (n - cb);
  const std::int64_t total = n * n;
  if (chance == total) return agree == n ? 1.0 : 0.0;
  return static_cast<double>(n * agree - chance) / static_cast<double>(total - chance);
}

AgreementReport agreement_report(const std::vector<std::vector<std::uint8_t>>& model_labels,
                                 const std::vector<std::vector<std::uint8_t>>& human_labels) {
  if (model_labels.size() != human_labels.size()) throw Error("agreement_report: theme counts differ");
  if (model_labels.empty()) throw Error("agreement_report needs at least one theme");
  AgreementReport r;
  std::size_t cells = 0, model_pos = 0, human_pos = 0;
  for (std::size_t k = 0; k < model_labels.size(); ++k) {
    r.kappa.push_back(cohens_kappa(model_labels[k], human_labels[k]));
    cells += model_labels[k].size();
    for (auto v : model_labels[k]) model_pos += v;
    for (auto v : human_labels[k]) human_pos += v;
  }
  r.median_kappa = median_of(r.kappa);
  r.model_positive_rate = 100.0 * static_cast<double>(model_pos) / static_cast<double>(cells);
  r.human_positive_rate = 100.0 * static_cast<double>(human_pos) / static_cast<double>(cells);
  r.delta_pp = r.model_positive_rate - r.human_positive_rate;
  return r;
}

bool looks_style_only(const std::string& theme_text) {
  static const char* kMarkers[] = {"single-word", "single word", "one word", "one-word", "short description",
                                   "punctuation", "capitaliz", "formatting", "grammar", "spelling",
                                   "writes in", "uses a list", "uses lists", "response length"};
  for (const char* m : kMarkers) {
    if (contains_ci(theme_text, m)) return true;
  }
  return false;
}

InterpretationResult interpret_all(Axis axis, const ActivationMatrix& acts, const std::vector<std::string>& texts,
                                   ChatProvider& chat, ChatProvider& annotator,
                                   const InterpretationOptions& options) {
  if (texts.size() != static_cast<std::size_t>(acts.values.rows())) {
    throw Error("interpret_all: text count does not match activation rows");
  }
  InterpretationResult result;
  std::vector<Theme> scored;
  for (int j = 0; j < static_cast<int>(acts.values.cols()); ++j) {
    LatentRecord rec;
    rec.latent_index = j;
    const std::string tag = "latent=" + std::to_string(j);
    const auto ex = select_exemplars(acts, j, options.n_pos, options.n_zero,
                                     derive_seed(options.seed, "exemplars/" + tag));
    if (!ex.interpretable) {
      rec.note = "only " + std::to_string(ex.positives.size()) + " active rows";
      result.latents.push_back(std::move(rec));
      continue;
    }
    std::vector<std::string> pos_texts, zero_texts;
    for (auto i : ex.positives) pos_texts.push_back(texts[i]);
    for (auto i : ex.zeros) zero_texts.push_back(texts[i]);
    const auto cands = generate_candidates(axis, pos_texts, zero_texts, chat, options.candidates);
    if (cands.candidates.empty()) {
      rec.note = "no parseable candidate";
      result.latents.push_back(std::move(rec));
      continue;
    }
    FidelityOptions fopts = options.fidelity;
    fopts.seed = derive_seed(options.seed, "fidelity/" + tag);
    for (const auto& c : cands.candidates) {
      auto f = fidelity(c, acts, j, texts, annotator, fopts);
      rec.candidates.push_back({c, f.f1});
      rec.candidate_fidelity.push_back(f);
    }
    rec.theme = select_interpretation(j, rec.candidates);
    scored.push_back(*rec.theme);
    result.latents.push_back(std::move(rec));
  }

  auto filtered = filter_themes(scored, options.min_fidelity, options.style_exclusions);
  for (const auto& t : filtered.themes) {
    auto& rec = result.latents[static_cast<std::size_t>(t.latent_index)];
    rec.theme = t;
    rec.status = t.retained ? LatentStatus::Retained : LatentStatus::Excluded;
  }
  result.retained = std::move(filtered.retained);
  return result;
}

}  // namespace iyow
