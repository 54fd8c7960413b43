#include "icmt/bm25.hpp"

#include "icmt/error.hpp"
#include "icmt/text.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace icmt {

std::vector<std::string> Bm25Index::analyze(std::string_view text)
{
    return text::tokenize_whitespace(text::to_lower(text)).tokens;
}

std::vector<std::string> Bm25Index::query_terms(std::span<const std::string> query_tokens)
{
    std::vector<std::string> terms;
    std::unordered_set<std::string> seen;
    for (const auto& tok : query_tokens) {
        for (auto& t : analyze(tok)) {
            if (seen.insert(t).second) {
                terms.push_back(std::move(t));
            }
        }
    }
    return terms;
}

std::optional<std::size_t> Bm25Index::row_of(std::string_view id) const
{
    const auto it = row_by_id_.find(std::string(id));
    if (it == row_by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t Bm25Index::document_frequency(std::string_view term) const
{
    return postings(term).size();
}

double Bm25Index::idf(std::string_view term) const
{
    const auto n = static_cast<double>(size());
    const auto df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::span<const Posting> Bm25Index::postings(std::string_view term) const
{
    const auto it = postings_.find(std::string(term));
    if (it == postings_.end()) {
        return {};
    }
    return it->second;
}

std::uint32_t Bm25Index::term_frequency(std::string_view term, std::size_t row) const
{
    const auto list = postings(term);
    const auto it = std::lower_bound(list.begin(), list.end(), row,
                                     [](const Posting& p, std::size_t r) { return p.row < r; });
    return (it != list.end() && it->row == row) ? it->tf : 0;
}

double Bm25Index::term_weight(double idf, std::uint32_t tf, std::size_t row) const
{
    if (tf == 0) {
        return 0.0;
    }
    const double f = tf;
    const double norm = 1.0 - params_.b + params_.b * static_cast<double>(lengths_[row]) / avg_length_;
    return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

std::vector<double> Bm25Index::score_all(std::span<const std::string> query_tokens) const
{
    std::vector<double> scores(size(), 0.0);
    for (const auto& term : query_terms(query_tokens)) {
        const auto list = postings(term);
        if (list.empty()) {
            continue;
        }
        const double w = idf(term);
        for (const auto& p : list) {
            scores[p.row] += term_weight(w, p.tf, p.row);
        }
    }
    return scores;
}

Bm25Index build_bm25_index(const CorpusBank& bank, Bm25Params params)
{
    if (bank.empty()) {
        throw EmptyBankError("cannot build a BM25 index over an empty bank");
    }
    Bm25Index index;
    index.params_ = params;
    index.ids_.reserve(bank.size());
    index.lengths_.reserve(bank.size());
    for (std::size_t row = 0; row < bank.size(); ++row) {
        const auto& ex = bank[row];
        index.ids_.push_back(ex.id);
        index.row_by_id_.emplace(ex.id, row);

        const auto tokens = Bm25Index::analyze(ex.source);
        index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.total_length_ += tokens.size();

        std::unordered_map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens) {
            ++tf[t];
        }
        for (auto& [term, count] : tf) {
            index.postings_[term].push_back({static_cast<std::uint32_t>(row), count});
        }
    }
    index.avg_length_ = static_cast<double>(index.total_length_) / static_cast<double>(bank.size());
    return index;
}

double bm25_score(const Bm25Index& index, std::span<const std::string> query_tokens,
                  std::string_view example_id)
{
    const auto row = index.row_of(example_id);
    if (!row) {
        throw UnknownIdError("example '" + std::string(example_id) + "' is not in the index");
    }
    double score = 0.0;
    for (const auto& term : Bm25Index::query_terms(query_tokens)) {
        const auto tf = index.term_frequency(term, *row);
        if (tf) {
            score += index.term_weight(index.idf(term), tf, *row);
        }
    }
    return score;
}

std::vector<ScoredId> bm25_topk(const Bm25Index& index, std::span<const std::string> query_tokens,
                                std::size_t k, const IdSet& exclude)
{
    if (k == 0) {
        return {};
    }
    const auto scores = index.score_all(query_tokens);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < scores.size(); ++r) {
        if (scores[r] > 0.0 && !exclude.count(index.id(r))) {
            rows.push_back(r);
        }
    }
    const auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return index.id(a) < index.id(b);
    };
    const auto n = std::min(k, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n), rows.end(), better);
    std::vector<ScoredId> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({index.id(rows[i]), scores[rows[i]]});
    }
    return out;
}

double coverage_utility(const Bm25Index& index, std::span<const std::string> query_tokens,
                        std::span<const std::string> selected_ids, CoverageWeight weight)
{
    CoverageState state(index, query_tokens, weight);
    for (const auto& id : selected_ids) {
        const auto row = index.row_of(id);
        if (!row) {
            throw UnknownIdError("example '" + id + "' is not in the index");
        }
        state.add(*row);
    }
    return state.value();
}

CoverageState::CoverageState(const Bm25Index& index, std::span<const std::string> query_tokens,
                             CoverageWeight weight)
    : index_(&index), weight_(weight)
{
    std::vector<char> in_support(index.size(), 0);
    for (const auto& term : Bm25Index::query_terms(query_tokens)) {
        const auto list = index.postings(term);
        if (list.empty()) {
            continue;
        }
        terms_.push_back({index.idf(term), 0.0, list});
        for (const auto& p : list) {
            if (!in_support[p.row]) {
                in_support[p.row] = 1;
                support_.push_back(p.row);
            }
        }
    }
    std::sort(support_.begin(), support_.end());
}

double CoverageState::value() const noexcept
{
    double v = 0.0;
    for (const auto& t : terms_) {
        v += t.best;
    }
    return v;
}

double CoverageState::weight_of(const TermEntry& t, std::uint32_t tf, std::size_t row) const
{
    return weight_ == CoverageWeight::Idf ? t.idf : index_->term_weight(t.idf, tf, row);
}

namespace {

const Posting* find_posting(std::span<const Posting> list, std::size_t row)
{
    const auto it = std::lower_bound(list.begin(), list.end(), row,
                                     [](const Posting& p, std::size_t r) { return p.row < r; });
    return (it != list.end() && it->row == row) ? &*it : nullptr;
}

} // namespace

double CoverageState::gain(std::size_t row) const
{
    double g = 0.0;
    for (const auto& t : terms_) {
        if (const auto* p = find_posting(t.postings, row)) {
            const double w = weight_of(t, p->tf, row);
            if (w > t.best) {
                g += w - t.best;
            }
        }
    }
    return g;
}

void CoverageState::accumulate_gains(std::span<double> gains) const
{
    for (const auto& t : terms_) {
        if (weight_ == CoverageWeight::Idf) {
            if (t.best > 0.0) {
                continue;
            }
            for (const auto& p : t.postings) {
                gains[p.row] += t.idf;
            }
        } else {
            for (const auto& p : t.postings) {
                const double w = index_->term_weight(t.idf, p.tf, p.row);
                if (w > t.best) {
                    gains[p.row] += w - t.best;
                }
            }
        }
    }
}

void CoverageState::add(std::size_t row)
{
    for (auto& t : terms_) {
        if (const auto* p = find_posting(t.postings, row)) {
            t.best = std::max(t.best, weight_of(t, p->tf, row));
        }
    }
}

} // namespace icmt
