#pragma once

// Prompt templates for interpretation and annotation, and parsing of the
// interpretation replies.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iyow/corpus.hpp"

namespace iyow {

// Verbatim templates; placeholders are {identity}, {positive_texts},
// {negative_texts}, {hypothesis} and {text}.
std::string_view interpretation_template();
std::string_view annotation_template();

// Single-pass substitution: text inserted for one placeholder is never
// rescanned. Unknown placeholders are left as written.
std::string fill_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values);

// One "- <text>" line per sample; line breaks inside a sample become spaces.
std::string format_samples(const std::vector<std::string>& texts);

std::string build_interpretation_prompt(Axis axis, const std::vector<std::string>& positives,
                                        const std::vector<std::string>& negatives);
std::string build_annotation_prompt(std::string_view hypothesis, std::string_view text);

// Extracts the quoted feature from a reply such as `- "mentions food"`.
// Straight and curly quotes both count. A reply holding a single closing
// quote is read as the continuation of the prompt's open quote.
std::optional<std::string> parse_candidate(std::string_view reply);

// True iff the trimmed reply starts with "yes", case-insensitive.
bool parse_yes(std::string_view reply);

}  // namespace iyow
