#pragma once

#include "icmt/bm25.hpp"
#include "icmt/corpus.hpp"
#include "icmt/embeddings.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace icmt {

enum class Strategy { Random, Bm25, Bm25S, Nn, Window, Static, Shuffle, ZeroShot };

std::string_view to_string(Strategy s) noexcept;
/// Accepts the lowercase labels produced by to_string ("bm25-s", "zeroshot", ...).
Strategy parse_strategy(std::string_view label);

/// An ordered prompt set. Item 0 is rendered first (leftmost).
struct PromptSet {
    std::vector<ParallelExample> items;
    Strategy strategy = Strategy::ZeroShot;
    /// Per-item selection scores (BM25 score, marginal gain, L2 distance);
    /// empty when the strategy has none.
    std::vector<double> scores;
    std::size_t budget_used = 0;
    std::optional<std::uint64_t> seed;

    std::vector<std::string> ids() const;
    std::vector<std::string> sources() const;
};

enum class BudgetMode {
    /// Only candidates that keep the total within budget are considered.
    Strict,
    /// The literal loop: add the global argmax while the total is below budget.
    Faithful,
};

enum class BudgetCost { SourceWords, SourceAndTargetWords };

struct BudgetSpec {
    std::size_t budget = 0;
    BudgetMode mode = BudgetMode::Strict;
    BudgetCost cost = BudgetCost::SourceWords;
};

/// Word cost of one example under the given cost convention.
std::size_t example_cost(const ParallelExample& ex, BudgetCost cost = BudgetCost::SourceWords);

/// Sum of source word counts.
std::size_t source_word_total(std::span<const ParallelExample> items);

/// k distinct examples drawn uniformly without replacement (partial
/// Fisher-Yates over the non-excluded rows in bank order), in draw order.
/// Throws EmptyBankError when fewer than k candidates remain.
PromptSet select_random(const CorpusBank& bank, std::size_t k, std::uint64_t seed,
                        const IdSet& exclude = {});

/// Top-k by BM25, most similar first. `index` must be built over `bank`.
PromptSet select_topk_similarity(const Bm25Index& index, const CorpusBank& bank,
                                 std::string_view test_source, std::size_t k,
                                 const IdSet& exclude = {});

/// Top-k by L2 distance to `query`, closest first. Every bank id must have a
/// row in `store`.
PromptSet select_topk_similarity(const EmbeddingStore& store, const CorpusBank& bank,
                                 std::span<const float> query, std::size_t k,
                                 const IdSet& exclude = {});

/// A set function over bank rows queried through marginal gains.
class MarginalUtility {
public:
    virtual ~MarginalUtility() = default;

    /// Rows whose gain may be non-zero; nullptr means every row.
    virtual const std::vector<std::size_t>* support() const = 0;
    /// Writes f({row} | selected) into gains[row] for every row in support().
    /// Rows outside the support keep gain 0.
    virtual void gains(std::span<double> out) const = 0;
    virtual void commit(std::size_t row) = 0;
};

/// Weighted coverage of the test sentence's terms (BM25-s).
class CoverageUtility final : public MarginalUtility {
public:
    CoverageUtility(const Bm25Index& index, std::string_view test_source,
                    CoverageWeight weight = CoverageWeight::Idf);

    const std::vector<std::size_t>* support() const override { return &state_.support(); }
    void gains(std::span<double> out) const override;
    void commit(std::size_t row) override { state_.add(row); }

private:
    CoverageState state_;
};

/// A fixed value per row: f(X) = sum of values. With BM25 scores this is
/// budgeted BM25; with embedding similarities it is budgeted nn.
class ModularUtility final : public MarginalUtility {
public:
    explicit ModularUtility(std::vector<double> values);

    /// BM25 score of each bank row against the test source.
    static ModularUtility from_bm25(const Bm25Index& index, std::string_view test_source);
    /// 1 / (1 + L2 distance) of each bank row to `query`.
    static ModularUtility from_embeddings(const EmbeddingStore& store, const CorpusBank& bank,
                                          std::span<const float> query);

    const std::vector<std::size_t>* support() const override { return &support_; }
    void gains(std::span<double> out) const override;
    void commit(std::size_t row) override;

private:
    std::vector<double> values_;
    std::vector<char> taken_;
    std::vector<std::size_t> support_;
};

struct GreedyOptions {
    /// Cardinality cap; nullopt = bounded by the budget alone.
    std::optional<std::size_t> max_items;
    /// No length budget; selection stops at max_items (which must then be set).
    bool unbounded_budget = false;
    IdSet exclude;
    Strategy strategy = Strategy::Bm25S;
};

/// Generalised greedy with a length budget: repeatedly adds the candidate with
/// the largest marginal gain (ties by ascending id). Costs are word counts.
/// Throws EmptyBankError on an empty bank.
PromptSet select_greedy_budget(const CorpusBank& bank, MarginalUtility& utility,
                               const BudgetSpec& budget, const GreedyOptions& options = {});

/// The k gold pairs preceding `test_position`, earliest first. A shortfall is
/// filled by select_random from `outdoc_bank` and placed before them.
PromptSet select_window(const CorpusBank& doc, std::size_t test_position, std::size_t k,
                        const CorpusBank& outdoc_bank, std::uint64_t seed);

/// k random lines from strictly before `test_position`; a shortfall is filled
/// like select_window.
PromptSet select_random_within(const CorpusBank& doc, std::size_t test_position, std::size_t k,
                               const CorpusBank& outdoc_bank, std::uint64_t seed);

/// The first k lines of the document (fewer if the document is shorter).
PromptSet select_static(const CorpusBank& doc, std::size_t k);

/// Seeded uniform permutation of the items (and their scores).
PromptSet shuffle_prompt_set(const PromptSet& ps, std::uint64_t seed);

/// budget_used of select_window with the same arguments.
std::size_t window_budget(const CorpusBank& doc, std::size_t test_position, std::size_t k,
                          const CorpusBank& outdoc_bank, std::uint64_t seed);

/// Lines of `doc` strictly before `position`, as a bank.
CorpusBank preceding_lines(const CorpusBank& doc, std::size_t position);

} // namespace icmt
