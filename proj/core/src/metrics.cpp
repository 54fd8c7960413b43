#include "icmt/metrics.hpp"

#include "icmt/embeddings.hpp"
#include "icmt/error.hpp"
#include "icmt/text.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace icmt {

namespace {

std::unordered_set<std::string> token_types(std::string_view s)
{
    auto tokens = text::tokenize_whitespace(text::to_lower(s)).tokens;
    return {std::make_move_iterator(tokens.begin()), std::make_move_iterator(tokens.end())};
}

} // namespace

double coverage(std::span<const std::string> prompt_sources, std::string_view test_source)
{
    const auto test = token_types(test_source);
    if (test.empty()) {
        throw ConfigError("coverage: empty test source");
    }
    std::unordered_set<std::string> prompt;
    for (const auto& s : prompt_sources) {
        prompt.merge(token_types(s));
    }
    std::size_t covered = 0;
    for (const auto& t : test) {
        covered += prompt.count(t);
    }
    return static_cast<double>(covered) / static_cast<double>(test.size());
}

double mean_l2(std::span<const std::span<const float>> prompt_vectors, std::span<const float> test_vector)
{
    if (prompt_vectors.empty()) {
        throw ConfigError("mean_l2: no prompt vectors");
    }
    double sum = 0.0;
    for (const auto& v : prompt_vectors) {
        sum += l2_distance(v, test_vector);
    }
    return sum / static_cast<double>(prompt_vectors.size());
}

double conditional_perplexity(std::span<const double> token_logprobs)
{
    if (token_logprobs.empty()) {
        throw ConfigError("conditional_perplexity: no token log-probabilities");
    }
    double sum = 0.0;
    for (const auto lp : token_logprobs) {
        if (lp > 0.0 || std::isnan(lp)) {
            throw ConfigError("conditional_perplexity: log-probability " + std::to_string(lp) +
                              " is not <= 0");
        }
        sum += lp;
    }
    return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

double pearson_r(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size()) {
        throw ConfigError("pearson_r: length mismatch");
    }
    if (xs.size() < 2) {
        throw ConfigError("pearson_r: need at least two points");
    }
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw ConfigError("pearson_r: constant input");
    }
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

InterferenceReport interference(std::span<const double> zero_shot_sbleu,
                                 std::span<const double> prompted_sbleu, double tie_epsilon)
{
    if (zero_shot_sbleu.size() != prompted_sbleu.size()) {
        throw ConfigError("interference: length mismatch");
    }
    if (zero_shot_sbleu.empty()) {
        throw ConfigError("interference: no sentences");
    }
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (std::size_t i = 0; i < zero_shot_sbleu.size(); ++i) {
        const double delta = prompted_sbleu[i] - zero_shot_sbleu[i];
        if (delta > tie_epsilon) {
            ++pos;
        } else if (delta < -tie_epsilon) {
            ++neg;
        }
    }
    const auto n = static_cast<double>(zero_shot_sbleu.size());
    InterferenceReport r;
    r.positive = static_cast<double>(pos) / n;
    r.negative = static_cast<double>(neg) / n;
    r.no_change = static_cast<double>(zero_shot_sbleu.size() - pos - neg) / n;
    return r;
}

} // namespace icmt
