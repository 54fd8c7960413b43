#pragma once

#include "icmt/bleu.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace icmt {

/// Fraction of distinct lowercased test-source tokens that appear in the union
/// of the prompt sources (ROUGE-1 precision over token types). Throws
/// ConfigError for an empty test source.
double coverage(std::span<const std::string> prompt_sources, std::string_view test_source);

/// Mean Euclidean distance from each prompt vector to the test vector.
/// Throws DimensionError on a mismatch and ConfigError for no prompts.
double mean_l2(std::span<const std::span<const float>> prompt_vectors, std::span<const float> test_vector);

/// exp(-mean(logprobs)) over natural-log token probabilities. Throws
/// ConfigError on an empty list or a positive log-probability.
double conditional_perplexity(std::span<const double> token_logprobs);

/// Sample Pearson correlation. Throws ConfigError on length mismatch, fewer
/// than two points or a constant input.
double pearson_r(std::span<const double> xs, std::span<const double> ys);

struct InterferenceReport {
    double positive = 0.0;
    double negative = 0.0;
    double no_change = 0.0;
};

inline constexpr double kDefaultTieEpsilon = 1e-4;

/// Per-sentence change of the prompted score over the zero-shot score,
/// bucketed with a tie band of +-tie_epsilon BLEU points.
InterferenceReport interference(std::span<const double> zero_shot_sbleu,
                                 std::span<const double> prompted_sbleu,
                                 double tie_epsilon = kDefaultTieEpsilon);

} // namespace icmt
