#include "icmt/selection.hpp"

#include "icmt/error.hpp"
#include "icmt/random.hpp"
#include "icmt/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace icmt {

namespace {

constexpr std::pair<Strategy, std::string_view> kStrategyLabels[] = {
    {Strategy::Random, "random"}, {Strategy::Bm25, "bm25"},       {Strategy::Bm25S, "bm25-s"},
    {Strategy::Nn, "nn"},         {Strategy::Window, "window"},   {Strategy::Static, "static"},
    {Strategy::Shuffle, "shuffle"}, {Strategy::ZeroShot, "zeroshot"},
};

constexpr double kGainTieTolerance = 1e-12;

void append(PromptSet& ps, const ParallelExample& ex)
{
    ps.budget_used += text::word_count(ex.source);
    ps.items.push_back(ex);
}

} // namespace

std::string_view to_string(Strategy s) noexcept
{
    for (const auto& [strategy, label] : kStrategyLabels) {
        if (strategy == s) {
            return label;
        }
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view label)
{
    for (const auto& [strategy, name] : kStrategyLabels) {
        if (name == label) {
            return strategy;
        }
    }
    if (label == "bm25s") {
        return Strategy::Bm25S;
    }
    throw ConfigError("unknown strategy '" + std::string(label) + "'");
}

std::vector<std::string> PromptSet::ids() const
{
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& ex : items) {
        out.push_back(ex.id);
    }
    return out;
}

std::vector<std::string> PromptSet::sources() const
{
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& ex : items) {
        out.push_back(ex.source);
    }
    return out;
}

std::size_t example_cost(const ParallelExample& ex, BudgetCost cost)
{
    auto n = text::word_count(ex.source);
    if (cost == BudgetCost::SourceAndTargetWords) {
        n += text::word_count(ex.target);
    }
    return n;
}

std::size_t source_word_total(std::span<const ParallelExample> items)
{
    std::size_t n = 0;
    for (const auto& ex : items) {
        n += text::word_count(ex.source);
    }
    return n;
}

PromptSet select_random(const CorpusBank& bank, std::size_t k, std::uint64_t seed,
                        const IdSet& exclude)
{
    std::vector<std::size_t> candidates;
    candidates.reserve(bank.size());
    for (std::size_t r = 0; r < bank.size(); ++r) {
        if (!exclude.count(bank[r].id)) {
            candidates.push_back(r);
        }
    }
    if (candidates.size() < k) {
        throw EmptyBankError("random selection needs " + std::to_string(k) + " candidates, bank has " +
                             std::to_string(candidates.size()));
    }
    PromptSet ps;
    ps.strategy = Strategy::Random;
    ps.seed = seed;
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
        append(ps, bank[candidates[i]]);
    }
    return ps;
}

PromptSet select_topk_similarity(const Bm25Index& index, const CorpusBank& bank,
                                 std::string_view test_source, std::size_t k, const IdSet& exclude)
{
    if (index.size() != bank.size()) {
        throw ConfigError("BM25 index was not built over this bank");
    }
    PromptSet ps;
    ps.strategy = Strategy::Bm25;
    const auto query = Bm25Index::analyze(test_source);
    for (const auto& hit : bm25_topk(index, query, k, exclude)) {
        append(ps, bank.at(hit.id));
        ps.scores.push_back(hit.score);
    }
    return ps;
}

PromptSet select_topk_similarity(const EmbeddingStore& store, const CorpusBank& bank,
                                 std::span<const float> query, std::size_t k, const IdSet& exclude)
{
    PromptSet ps;
    ps.strategy = Strategy::Nn;
    std::vector<std::size_t> rows;
    rows.reserve(bank.size());
    for (const auto& ex : bank.examples()) {
        const auto r = store.row_of(ex.id);
        if (!r) {
            throw UnknownIdError("no embedding for example '" + ex.id + "'");
        }
        rows.push_back(*r);
    }
    for (const auto& hit : nn_topk(store, query, k, exclude, rows)) {
        append(ps, bank.at(hit.id));
        ps.scores.push_back(hit.distance);
    }
    return ps;
}

CoverageUtility::CoverageUtility(const Bm25Index& index, std::string_view test_source,
                                 CoverageWeight weight)
    : state_(index, Bm25Index::analyze(test_source), weight)
{
}

void CoverageUtility::gains(std::span<double> out) const
{
    state_.accumulate_gains(out);
}

ModularUtility::ModularUtility(std::vector<double> values)
    : values_(std::move(values)), taken_(values_.size(), 0)
{
    for (std::size_t r = 0; r < values_.size(); ++r) {
        if (values_[r] < 0.0) {
            throw ConfigError("modular utility values must be non-negative");
        }
        if (values_[r] > 0.0) {
            support_.push_back(r);
        }
    }
}

ModularUtility ModularUtility::from_bm25(const Bm25Index& index, std::string_view test_source)
{
    return ModularUtility(index.score_all(Bm25Index::analyze(test_source)));
}

ModularUtility ModularUtility::from_embeddings(const EmbeddingStore& store, const CorpusBank& bank,
                                               std::span<const float> query)
{
    std::vector<double> values;
    values.reserve(bank.size());
    for (const auto& ex : bank.examples()) {
        values.push_back(1.0 / (1.0 + l2_distance(store.vector_of(ex.id), query)));
    }
    return ModularUtility(std::move(values));
}

void ModularUtility::gains(std::span<double> out) const
{
    for (const auto r : support_) {
        out[r] = taken_[r] ? 0.0 : values_[r];
    }
}

void ModularUtility::commit(std::size_t row)
{
    taken_[row] = 1;
}

PromptSet select_greedy_budget(const CorpusBank& bank, MarginalUtility& utility,
                               const BudgetSpec& budget, const GreedyOptions& options)
{
    if (bank.empty()) {
        throw EmptyBankError("greedy selection over an empty bank");
    }
    if (options.unbounded_budget && !options.max_items) {
        throw ConfigError("unbounded greedy selection needs a cardinality cap");
    }

    const auto n = bank.size();
    std::vector<char> taken(n, 0);
    std::vector<std::size_t> cost(n);
    std::vector<std::size_t> id_rank(n);
    const auto& by_id = bank.rows_by_id();
    for (std::size_t i = 0; i < n; ++i) {
        id_rank[by_id[i]] = i;
    }
    for (std::size_t r = 0; r < n; ++r) {
        cost[r] = example_cost(bank[r], budget.cost);
        if (options.exclude.count(bank[r].id)) {
            taken[r] = 1;
        }
    }

    PromptSet ps;
    ps.strategy = options.strategy;
    std::size_t used = 0;
    std::vector<double> gains(n, 0.0);

    const auto feasible = [&](std::size_t r) {
        if (taken[r]) {
            return false;
        }
        if (options.unbounded_budget || budget.mode == BudgetMode::Faithful) {
            return true;
        }
        return used + cost[r] <= budget.budget;
    };

    while (true) {
        if (options.max_items && ps.items.size() >= *options.max_items) {
            break;
        }
        if (!options.unbounded_budget && used >= budget.budget) {
            break;
        }

        const auto* support = utility.support();
        std::optional<std::size_t> best;
        const auto consider = [&](std::size_t r) {
            if (!feasible(r)) {
                return;
            }
            if (!best) {
                best = r;
                return;
            }
            const double a = gains[r];
            const double b = gains[*best];
            // Equal gains summed in different orders can differ in the last bits.
            const double tol = kGainTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
            if (a > b + tol || (std::abs(a - b) <= tol && id_rank[r] < id_rank[*best])) {
                best = r;
            }
        };

        if (support) {
            for (const auto r : *support) {
                gains[r] = 0.0;
            }
            utility.gains(gains);
            for (const auto r : *support) {
                consider(r);
            }
            // Every row outside the support has gain 0, so when nothing in the
            // support is positive the winner is the feasible row with the
            // smallest id.
            if (!best || gains[*best] <= kGainTieTolerance) {
                best.reset();
                for (const auto r : by_id) {
                    if (feasible(r)) {
                        best = r;
                        break;
                    }
                }
            }
        } else {
            std::fill(gains.begin(), gains.end(), 0.0);
            utility.gains(gains);
            for (const auto r : by_id) {
                consider(r);
            }
        }

        if (!best) {
            break;
        }
        const auto r = *best;
        const double gain = gains[r];
        utility.commit(r);
        taken[r] = 1;
        used += cost[r];
        append(ps, bank[r]);
        ps.scores.push_back(gain);
    }
    return ps;
}

CorpusBank preceding_lines(const CorpusBank& doc, std::size_t position)
{
    CorpusBank out;
    for (const auto& ex : doc.examples()) {
        if (ex.position < position) {
            out.add(ex);
        }
    }
    return out;
}

namespace {

const ParallelExample& line_at(const CorpusBank& doc, std::size_t position)
{
    const auto& doc_id = doc[0].doc_id;
    const auto* ex = doc.find(doc_id, position);
    if (!ex) {
        throw UnknownIdError("document '" + doc_id + "' has no line " + std::to_string(position));
    }
    return *ex;
}

void check_position(const CorpusBank& doc, std::size_t test_position)
{
    if (doc.empty()) {
        throw EmptyBankError("empty document");
    }
    line_at(doc, test_position);
}

PromptSet fill_then(const CorpusBank& outdoc_bank, std::size_t shortfall, std::uint64_t seed,
                    PromptSet in_doc, Strategy strategy)
{
    PromptSet ps;
    ps.strategy = strategy;
    ps.seed = seed;
    if (shortfall > 0) {
        for (const auto& ex : select_random(outdoc_bank, shortfall, seed).items) {
            append(ps, ex);
        }
    }
    for (const auto& ex : in_doc.items) {
        append(ps, ex);
    }
    return ps;
}

} // namespace

PromptSet select_window(const CorpusBank& doc, std::size_t test_position, std::size_t k,
                        const CorpusBank& outdoc_bank, std::uint64_t seed)
{
    check_position(doc, test_position);
    const auto available = std::min(k, test_position);
    PromptSet in_doc;
    for (std::size_t p = test_position - available; p < test_position; ++p) {
        in_doc.items.push_back(line_at(doc, p));
    }
    return fill_then(outdoc_bank, k - available, seed, std::move(in_doc), Strategy::Window);
}

PromptSet select_random_within(const CorpusBank& doc, std::size_t test_position, std::size_t k,
                               const CorpusBank& outdoc_bank, std::uint64_t seed)
{
    check_position(doc, test_position);
    const auto prior = preceding_lines(doc, test_position);
    const auto available = std::min(k, prior.size());
    PromptSet in_doc;
    if (available > 0) {
        in_doc = select_random(prior, available, mix64(seed));
    }
    return fill_then(outdoc_bank, k - available, seed, std::move(in_doc), Strategy::Random);
}

PromptSet select_static(const CorpusBank& doc, std::size_t k)
{
    if (doc.empty()) {
        throw EmptyBankError("static selection over an empty document");
    }
    PromptSet ps;
    ps.strategy = Strategy::Static;
    const auto& doc_id = doc[0].doc_id;
    for (std::size_t p = 0; p < k; ++p) {
        const auto* ex = doc.find(doc_id, p);
        if (!ex) {
            break;
        }
        append(ps, *ex);
    }
    return ps;
}

PromptSet shuffle_prompt_set(const PromptSet& ps, std::uint64_t seed)
{
    std::vector<std::size_t> perm(ps.items.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = perm.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    PromptSet out;
    out.strategy = Strategy::Shuffle;
    out.seed = seed;
    out.budget_used = ps.budget_used;
    for (const auto i : perm) {
        out.items.push_back(ps.items[i]);
        if (!ps.scores.empty()) {
            out.scores.push_back(ps.scores[i]);
        }
    }
    return out;
}

std::size_t window_budget(const CorpusBank& doc, std::size_t test_position, std::size_t k,
                          const CorpusBank& outdoc_bank, std::uint64_t seed)
{
    return select_window(doc, test_position, k, outdoc_bank, seed).budget_used;
}

} // namespace icmt
