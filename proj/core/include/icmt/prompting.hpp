#pragma once

#include "icmt/corpus.hpp"
#include "icmt/selection.hpp"

#include <string>
#include <string_view>

namespace icmt {

enum class Separator { Labels, Equals };

struct PromptStyle {
    std::string instruction;
    std::string src_label;
    std::string tgt_label;
    Separator separator = Separator::Labels;

    /// "Translate English to French." with "English" / "French" labels.
    static PromptStyle for_languages(const LangPair& pair, Separator separator = Separator::Labels);
};

/// English name for an ISO 639-1 code; unknown codes are returned unchanged.
std::string language_name(std::string_view code);

/// Renders the single continuous input sequence.
///
/// Labels:  instruction line, one `<src>: <source> <tgt>: <target>` line per
///          example, then `<src>: <test> <tgt>:`.
/// Equals:  `<source> = <target>` per example, then `<test> =`.
/// Lines are joined by '\n' with no trailing newline. Throws ConfigError for
/// empty labels (Labels style) or an empty test source.
std::string render_prompt(const PromptStyle& style, const PromptSet& prompt_set,
                          std::string_view test_source);

/// Context/continuation pair for scoring the test source under the prompt:
/// the rendered prompt up to where the test source starts, and the source.
struct SourceScoringRequest {
    std::string context;
    std::string continuation;
};
SourceScoringRequest source_scoring_request(const PromptStyle& style, const PromptSet& prompt_set,
                                            std::string_view test_source);

struct ExtractedHypothesis {
    std::string text;
    bool empty = false;
};

/// Text up to the first newline (and, for Labels style, the first
/// `<src_label>:`), trimmed.
ExtractedHypothesis extract_hypothesis(std::string_view raw_generation, const PromptStyle& style);

} // namespace icmt
