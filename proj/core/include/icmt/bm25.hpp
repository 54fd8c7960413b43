#pragma once

#include "icmt/corpus.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icmt {

using IdSet = std::set<std::string, std::less<>>;

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t row;
    std::uint32_t tf;
};

struct ScoredId {
    std::string id;
    double score;
};

/// Inverted index over the lowercased whitespace tokens of example sources.
/// Rows are aligned with the bank the index was built from.
class Bm25Index {
public:
    /// Lowercased whitespace tokens; the analyzer used for both sides.
    static std::vector<std::string> analyze(std::string_view text);

    std::size_t size() const noexcept { return ids_.size(); }
    const Bm25Params& params() const noexcept { return params_; }
    double average_length() const noexcept { return avg_length_; }
    std::size_t length(std::size_t row) const { return lengths_[row]; }
    std::size_t total_length() const noexcept { return total_length_; }
    const std::string& id(std::size_t row) const { return ids_[row]; }
    std::optional<std::size_t> row_of(std::string_view id) const;

    std::size_t vocabulary_size() const noexcept { return postings_.size(); }
    std::size_t document_frequency(std::string_view term) const;
    /// ln(1 + (N - df + 0.5) / (df + 0.5)); always non-negative.
    double idf(std::string_view term) const;
    std::span<const Posting> postings(std::string_view term) const;
    /// Term frequency of `term` in `row` (0 when absent).
    std::uint32_t term_frequency(std::string_view term, std::size_t row) const;

    /// Per-term BM25 contribution of one occurrence-count `tf` in `row`.
    double term_weight(double idf, std::uint32_t tf, std::size_t row) const;

    /// Distinct lowercased query terms in first-occurrence order.
    static std::vector<std::string> query_terms(std::span<const std::string> query_tokens);

    /// BM25 of every row for the query (dense, row-aligned).
    std::vector<double> score_all(std::span<const std::string> query_tokens) const;

private:
    friend Bm25Index build_bm25_index(const CorpusBank& bank, Bm25Params params);

    Bm25Params params_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> row_by_id_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> lengths_;
    std::size_t total_length_ = 0;
    double avg_length_ = 0.0;
};

/// Throws EmptyBankError on an empty bank.
Bm25Index build_bm25_index(const CorpusBank& bank, Bm25Params params = {});

/// Standard BM25 with set semantics on the query (each distinct term counted
/// once). Throws UnknownIdError.
double bm25_score(const Bm25Index& index, std::span<const std::string> query_tokens,
                  std::string_view example_id);

/// Positive-score rows by descending score, ties by ascending id.
std::vector<ScoredId> bm25_topk(const Bm25Index& index, std::span<const std::string> query_tokens,
                                std::size_t k, const IdSet& exclude = {});

/// How much a covered query term is worth.
///  - Idf: idf(t), independent of which example covers it.
///  - Bm25Term: the best BM25 term contribution among the covering examples.
/// Both give f(X) = sum_t max_{x in X} w(t, x), which is monotone submodular.
enum class CoverageWeight { Idf, Bm25Term };

/// Weighted coverage of the distinct query terms by the selected examples.
double coverage_utility(const Bm25Index& index, std::span<const std::string> query_tokens,
                        std::span<const std::string> selected_ids,
                        CoverageWeight weight = CoverageWeight::Idf);

/// Incremental form of coverage_utility for greedy selection.
class CoverageState {
public:
    CoverageState(const Bm25Index& index, std::span<const std::string> query_tokens,
                  CoverageWeight weight = CoverageWeight::Idf);

    /// f({row} | selected)
    double gain(std::size_t row) const;
    /// Adds f({row} | selected) into `gains[row]` for every row in support().
    /// `gains` must be zero on the support and sized to the index.
    void accumulate_gains(std::span<double> gains) const;
    void add(std::size_t row);
    /// f(selected), summed in query-term order.
    double value() const noexcept;
    /// Rows that share at least one query term; all other rows have zero gain.
    const std::vector<std::size_t>& support() const noexcept { return support_; }

private:
    struct TermEntry {
        double idf;
        double best;
        std::span<const Posting> postings;
    };
    double weight_of(const TermEntry& t, std::uint32_t tf, std::size_t row) const;

    const Bm25Index* index_;
    CoverageWeight weight_;
    std::vector<TermEntry> terms_;
    std::vector<std::size_t> support_;
};

} // namespace icmt
