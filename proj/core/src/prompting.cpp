#include "icmt/prompting.hpp"

#include "icmt/error.hpp"
#include "icmt/text.hpp"

#include <algorithm>

namespace icmt {

namespace {

void check_style(const PromptStyle& style)
{
    if (style.separator == Separator::Labels && (style.src_label.empty() || style.tgt_label.empty())) {
        throw ConfigError("label-style prompts need non-empty source and target labels");
    }
}

std::string render_prefix(const PromptStyle& style, const PromptSet& prompt_set)
{
    std::string out;
    if (style.separator == Separator::Labels) {
        out += style.instruction;
        out += '\n';
        for (const auto& ex : prompt_set.items) {
            out += style.src_label + ": " + ex.source + " " + style.tgt_label + ": " + ex.target + "\n";
        }
        out += style.src_label + ": ";
    } else {
        for (const auto& ex : prompt_set.items) {
            out += ex.source + " = " + ex.target + "\n";
        }
    }
    return out;
}

} // namespace

std::string language_name(std::string_view code)
{
    static constexpr std::pair<std::string_view, std::string_view> kNames[] = {
        {"en", "English"}, {"fr", "French"},  {"de", "German"},  {"pt", "Portuguese"},
        {"es", "Spanish"}, {"it", "Italian"}, {"nl", "Dutch"},   {"ru", "Russian"},
        {"zh", "Chinese"}, {"ja", "Japanese"}, {"ar", "Arabic"}, {"ko", "Korean"},
    };
    for (const auto& [c, name] : kNames) {
        if (c == code) {
            return std::string(name);
        }
    }
    return std::string(code);
}

PromptStyle PromptStyle::for_languages(const LangPair& pair, Separator separator)
{
    PromptStyle style;
    style.src_label = language_name(pair.source);
    style.tgt_label = language_name(pair.target);
    style.instruction = "Translate " + style.src_label + " to " + style.tgt_label + ".";
    style.separator = separator;
    return style;
}

std::string render_prompt(const PromptStyle& style, const PromptSet& prompt_set,
                          std::string_view test_source)
{
    check_style(style);
    if (text::trim(test_source).empty()) {
        throw ConfigError("cannot render a prompt for an empty test source");
    }
    auto out = render_prefix(style, prompt_set);
    out += test_source;
    if (style.separator == Separator::Labels) {
        out += " " + style.tgt_label + ":";
    } else {
        out += " =";
    }
    return out;
}

SourceScoringRequest source_scoring_request(const PromptStyle& style, const PromptSet& prompt_set,
                                            std::string_view test_source)
{
    check_style(style);
    return {render_prefix(style, prompt_set), std::string(test_source)};
}

ExtractedHypothesis extract_hypothesis(std::string_view raw_generation, const PromptStyle& style)
{
    auto cut = raw_generation.find('\n');
    if (style.separator == Separator::Labels && !style.src_label.empty()) {
        const auto marker = style.src_label + ":";
        cut = std::min(cut, raw_generation.find(marker));
    }
    const auto kept = text::trim(raw_generation.substr(0, cut));
    return {std::string(kept), kept.empty()};
}

} // namespace icmt
