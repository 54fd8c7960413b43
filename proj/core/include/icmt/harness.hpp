#pragma once

#include "icmt/bleu.hpp"
#include "icmt/bm25.hpp"
#include "icmt/corpus.hpp"
#include "icmt/embeddings.hpp"
#include "icmt/generation.hpp"
#include "icmt/prompting.hpp"
#include "icmt/report.hpp"
#include "icmt/selection.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace icmt {

enum class ExperimentKind { DomainCrosstable, DocLevel, BudgetMatched, ShuffleAblation, Interference };

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment(std::string_view name);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::DocLevel;
    /// Condition names (see known_conditions); empty selects the defaults.
    std::vector<std::string> conditions;
    std::size_t k = 5;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    /// Inclusive source word-count bounds applied to crosstable prompt banks.
    std::optional<std::pair<std::size_t, std::size_t>> length_filter;
    /// Mode and cost convention of the budgeted conditions; the budget amount
    /// itself is each test line's window budget.
    BudgetSpec budget;
    LangPair lang_pair;
    PromptStyle style = PromptStyle::for_languages(LangPair{});
    Bm25Params bm25;
    CoverageWeight coverage_weight = CoverageWeight::Idf;
    BleuConfig bleu;
    double tie_epsilon = kDefaultTieEpsilon;
    /// Also request log-probabilities of each test source given its prompt.
    bool score_perplexity = false;
    /// Overrides default_max_new_tokens when set.
    std::optional<std::size_t> max_new_tokens;
    /// Worker threads for selection, generation and scoring; 0 = hardware.
    std::size_t threads = 0;
    /// Extra manifest entries (data checksums, input paths).
    std::map<std::string, std::string> manifest;
};

/// Conditions accepted by an experiment, in their default order:
///   crosstable     random
///   doclevel       random-out nn-out bm25-out bm25s-out random-within window static shuffle
///   budget-match   window bm25-within-budget bm25s-within-budget nn-within-budget
///                  bm25-within bm25s-within nn-within
///   ablate-order   static random-within window shuffle
///   interference   zeroshot random-out bm25-out bm25s-out nn-out window
/// Every document-level experiment accepts any document-level condition.
std::vector<std::string> default_conditions(ExperimentKind kind);
std::vector<std::string> known_conditions(ExperimentKind kind);
/// Whether the condition needs an EmbeddingStore.
bool needs_embeddings(std::string_view condition);

/// Throws ConfigError for an inconsistent configuration.
void validate(const ExperimentConfig& cfg);

/// Inputs of the document-level experiments. `embeddings` must cover every
/// test and out-of-document id when an nn condition runs; when present it
/// also yields the mean L2 metric.
struct DocumentInputs {
    const DocumentSplit* split = nullptr;
    const EmbeddingStore* embeddings = nullptr;
};

/// Domain transfer runs: one random prompt set per (prompt domain, seed) used
/// for every sentence of every test domain. Cells hold corpus BLEU.
ExperimentReport run_domain_crosstable(const ExperimentConfig& cfg,
                                       const std::map<std::string, CorpusBank>& banks,
                                       const std::map<std::string, CorpusBank>& tests, Generator& generator);

/// Document-level strategies over every test line of every test document.
ExperimentReport run_document_experiment(const ExperimentConfig& cfg, const DocumentInputs& inputs,
                                         Generator& generator);

/// Within-document retrieval limited to each line's window budget, next to the
/// unbudgeted retrieval and the window itself.
ExperimentReport run_budget_matched(const ExperimentConfig& cfg, const DocumentInputs& inputs,
                                    Generator& generator);

/// Static, random-within, window and shuffled-window prompts.
ExperimentReport run_shuffle_ablation(const ExperimentConfig& cfg, const DocumentInputs& inputs,
                                      Generator& generator);

/// Zero-shot next to prompted conditions, with interference aggregates.
ExperimentReport run_interference(const ExperimentConfig& cfg, const DocumentInputs& inputs,
                                  Generator& generator);

/// Dispatches on cfg.experiment for the document-level kinds.
ExperimentReport run_document_kind(const ExperimentConfig& cfg, const DocumentInputs& inputs,
                                   Generator& generator);

/// Prompt selection without generation.
struct SelectionRecord {
    std::string condition;
    std::string doc_id;
    std::string test_id;
    std::uint64_t seed = 0;
    std::vector<std::string> prompt_ids;
    std::vector<double> scores;
    std::size_t budget_used = 0;
    double coverage = 0.0;
    std::optional<double> l2;
};

struct SelectionSummary {
    std::string condition;
    std::size_t rows = 0;
    /// Per sentence, then per document, then across documents.
    double coverage = 0.0;
    std::optional<double> l2;
    double mean_budget = 0.0;
};

struct SelectionProfile {
    std::vector<SelectionRecord> records;
    std::vector<SelectionSummary> summaries;
};

SelectionProfile profile_selection(const ExperimentConfig& cfg, const DocumentInputs& inputs);

std::string to_json_line(const SelectionRecord& record);
std::string to_json_line(const SelectionSummary& summary);

} // namespace icmt
