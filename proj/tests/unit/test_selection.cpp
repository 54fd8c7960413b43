#include "helpers.hpp"

#include "icmt/error.hpp"
#include "icmt/random.hpp"
#include "icmt/selection.hpp"
#include "icmt/text.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace icmt;

namespace {

CorpusBank outdoc()
{
    return testing::document("out", {"o zero", "o one", "o two", "o three", "o four", "o five"});
}

CorpusBank ten_lines()
{
    std::vector<std::string> s;
    for (int i = 0; i < 10; ++i) {
        s.push_back("line " + std::to_string(i) + std::string(static_cast<std::size_t>(i), '!') + " x");
    }
    return testing::document("doc", s);
}

/// Greedy reference that recomputes f from scratch for every candidate.
struct GreedyOracle {
    const CorpusBank& bank;
    const Bm25Index& index;
    std::vector<std::string> query;

    double f(const std::vector<std::string>& ids) const { return coverage_utility(index, query, ids); }
};

double chi_square(const std::vector<double>& observed, double expected)
{
    double s = 0;
    for (double o : observed) {
        s += (o - expected) * (o - expected) / expected;
    }
    return s;
}

} // namespace

TEST_SUITE("selection")
{
    TEST_CASE("strategy labels round trip")
    {
        for (auto s : {Strategy::Random, Strategy::Bm25, Strategy::Bm25S, Strategy::Nn, Strategy::Window,
                       Strategy::Static, Strategy::Shuffle, Strategy::ZeroShot}) {
            CHECK(parse_strategy(to_string(s)) == s);
        }
        CHECK(parse_strategy("bm25s") == Strategy::Bm25S);
        CHECK_THROWS_AS(parse_strategy("mystery"), ConfigError);
    }

    TEST_CASE("seeded generator")
    {
        Rng a(5);
        Rng b(5);
        for (int i = 0; i < 100; ++i) {
            CHECK(a.next() == b.next());
        }
        // First output of mt19937_64 with the default seed is fixed by the standard.
        CHECK(Rng(5489).next() == 14514284786278117030ULL);
        Rng c(9);
        for (int i = 0; i < 1000; ++i) {
            CHECK(c.below(7) < 7);
        }
        CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
        CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
        CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    }

    TEST_CASE("random selection is deterministic and distinct")
    {
        std::mt19937_64 rng(1);
        const auto bank = testing::random_bank(rng, 10, 20);
        const auto a = select_random(bank, 5, 77);
        const auto b = select_random(bank, 5, 77);
        CHECK(a.ids() == b.ids());
        CHECK(a.seed == 77u);
        const auto ids = a.ids();
        CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 5);
        CHECK(a.budget_used == source_word_total(a.items));

        IdSet exclude;
        for (std::size_t i = 0; i + 2 < bank.size(); ++i) {
            exclude.insert(bank[i].id);
        }
        const auto c = select_random(bank, 2, 3, exclude);
        for (const auto& id : c.ids()) {
            CHECK(!exclude.count(id));
        }
        CHECK_THROWS_AS(select_random(bank, 3, 3, exclude), EmptyBankError);
        CHECK(select_random(bank, 0, 3).items.empty());
    }

    TEST_CASE("random selection is uniform")
    {
        const auto bank = testing::document("d", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
        std::vector<double> first(10, 0.0);
        std::vector<double> included(10, 0.0);
        const int draws = 100000;
        for (int s = 0; s < draws; ++s) {
            const auto ps = select_random(bank, 3, static_cast<std::uint64_t>(s));
            first[*bank.row_of(ps.items[0].id)] += 1;
            for (const auto& ex : ps.items) {
                included[*bank.row_of(ex.id)] += 1;
            }
        }
        // 9 degrees of freedom; 27.88 is the 0.999 quantile.
        CHECK(chi_square(first, draws / 10.0) < 27.88);
        CHECK(chi_square(included, draws * 0.3) < 27.88 * 3);
    }

    TEST_CASE("bm25 top-k selection")
    {
        const auto bank = testing::document("d", {"the red fish", "red red red", "blue", "a red fish swims"});
        const auto idx = build_bm25_index(bank);
        const auto ps = select_topk_similarity(idx, bank, "Red fish", 2);
        REQUIRE(ps.items.size() == 2);
        CHECK(ps.strategy == Strategy::Bm25);
        CHECK(ps.scores[0] >= ps.scores[1]);
        CHECK(select_topk_similarity(idx, bank, "fish", 5).items.size() == 2);
        CHECK_THROWS_AS(select_topk_similarity(idx, testing::document("z", {"x"}), "x", 1), ConfigError);
    }

    TEST_CASE("embedding top-k selection")
    {
        const auto bank = testing::document("d", {"a", "b", "c"});
        // "x" is closest but not in the bank.
        const EmbeddingStore store({"d:000000", "d:000001", "d:000002", "x"}, 1, {5, 1, 3, 0});
        const std::vector<float> q{0};
        const auto ps = select_topk_similarity(store, bank, q, 2);
        CHECK(ps.ids() == std::vector<std::string>{"d:000001", "d:000002"});
        CHECK(ps.strategy == Strategy::Nn);
        const EmbeddingStore partial({"d:000000"}, 1, {0});
        CHECK_THROWS_AS(select_topk_similarity(partial, bank, q, 1), UnknownIdError);
    }

    TEST_CASE("greedy trace matches a from-scratch reference")
    {
        std::mt19937_64 rng(101);
        for (int trial = 0; trial < 150; ++trial) {
            const auto bank = testing::random_bank(rng, 4, 12, 5, 6);
            const auto idx = build_bm25_index(bank);
            const auto q = testing::random_query(rng, 12, 8);
            const GreedyOracle oracle{bank, idx, q};
            const std::string qs = [&] {
                std::string s;
                for (const auto& t : q) {
                    s += t + " ";
                }
                return s;
            }();
            const auto mode = trial % 2 ? BudgetMode::Strict : BudgetMode::Faithful;
            const std::size_t budget = 4 + static_cast<std::size_t>(rng() % 20);
            CoverageUtility util(idx, qs);
            const auto ps = select_greedy_budget(bank, util, BudgetSpec{budget, mode});

            std::vector<std::string> chosen;
            std::size_t used = 0;
            for (std::size_t step = 0; step < ps.items.size(); ++step) {
                CHECK(used < budget);
                double best = -1;
                std::vector<std::pair<double, std::string>> cands;
                for (const auto& ex : bank.examples()) {
                    if (std::find(chosen.begin(), chosen.end(), ex.id) != chosen.end()) {
                        continue;
                    }
                    if (mode == BudgetMode::Strict && used + text::word_count(ex.source) > budget) {
                        continue;
                    }
                    auto with = chosen;
                    with.push_back(ex.id);
                    const double g = oracle.f(with) - oracle.f(chosen);
                    cands.emplace_back(g, ex.id);
                    best = std::max(best, g);
                }
                REQUIRE(!cands.empty());
                // Smallest id among the (numerically) best candidates.
                std::string expected;
                for (const auto& [g, id] : cands) {
                    if (g >= best - 1e-9 && (expected.empty() || id < expected)) {
                        expected = id;
                    }
                }
                const auto& got = ps.items[step].id;
                const auto it = std::find_if(cands.begin(), cands.end(), [&](auto& c) { return c.second == got; });
                REQUIRE(it != cands.end());
                CHECK(it->first >= best - 1e-9);
                CHECK(ps.scores[step] == doctest::Approx(it->first).epsilon(1e-9));
                CHECK(got == expected);
                chosen.push_back(got);
                used += text::word_count(ps.items[step].source);
            }
            CHECK(ps.budget_used == used);
            // The loop stops only when the budget is reached or nothing is feasible.
            if (mode == BudgetMode::Faithful) {
                CHECK((used >= budget || chosen.size() == bank.size()));
                if (!ps.items.empty()) {
                    CHECK(used - text::word_count(ps.items.back().source) < budget);
                }
            } else {
                CHECK(used <= budget);
                for (const auto& ex : bank.examples()) {
                    if (std::find(chosen.begin(), chosen.end(), ex.id) == chosen.end()) {
                        CHECK(used + text::word_count(ex.source) > budget);
                    }
                }
            }
        }
    }

    TEST_CASE("greedy with exact modular values")
    {
        const auto bank = testing::document("d", {"a b", "c", "d e f", "g", "h i"});
        // values: rows 1 and 3 tie; row 4 is zero.
        ModularUtility util({2.0, 3.0, 5.0, 3.0, 0.0});
        const auto ps = select_greedy_budget(bank, util, BudgetSpec{100, BudgetMode::Strict});
        CHECK(ps.ids() == std::vector<std::string>{"d:000002", "d:000001", "d:000003", "d:000000", "d:000004"});
        CHECK(ps.scores == std::vector<double>{5.0, 3.0, 3.0, 2.0, 0.0});

        ModularUtility util2({2.0, 3.0, 5.0, 3.0, 0.0});
        GreedyOptions opts;
        opts.max_items = 2;
        opts.unbounded_budget = true;
        CHECK(select_greedy_budget(bank, util2, BudgetSpec{}, opts).ids() ==
              std::vector<std::string>{"d:000002", "d:000001"});

        ModularUtility util3({2.0, 3.0, 5.0, 3.0, 0.0});
        GreedyOptions ex;
        ex.exclude = {"d:000002"};
        CHECK(select_greedy_budget(bank, util3, BudgetSpec{2, BudgetMode::Strict}, ex).ids() ==
              std::vector<std::string>{"d:000001", "d:000003"});

        ModularUtility util4({2.0, 3.0, 5.0, 3.0, 0.0});
        // Faithful: the argmax (3 words) overshoots a budget of 2.
        CHECK(select_greedy_budget(bank, util4, BudgetSpec{2, BudgetMode::Faithful}).ids() ==
              std::vector<std::string>{"d:000002"});
    }

    TEST_CASE("greedy edge cases")
    {
        const auto bank = testing::document("d", {"a b", "c"});
        ModularUtility u({1.0, 1.0});
        CHECK(select_greedy_budget(bank, u, BudgetSpec{0, BudgetMode::Strict}).items.empty());
        ModularUtility u2({1.0, 1.0});
        CHECK(select_greedy_budget(bank, u2, BudgetSpec{0, BudgetMode::Faithful}).items.empty());
        ModularUtility u3({1.0});
        CHECK_THROWS_AS(select_greedy_budget(CorpusBank{}, u3, BudgetSpec{5}), EmptyBankError);
        ModularUtility u4({1.0, 1.0});
        GreedyOptions bad;
        bad.unbounded_budget = true;
        CHECK_THROWS_AS(select_greedy_budget(bank, u4, BudgetSpec{5}, bad), ConfigError);
        CHECK_THROWS_AS(ModularUtility({-1.0}), ConfigError);

        // No query term overlaps: zero gains everywhere, smallest id first.
        const auto idx = build_bm25_index(bank);
        CoverageUtility cu(idx, "zzz");
        const auto ps = select_greedy_budget(bank, cu, BudgetSpec{1, BudgetMode::Strict});
        CHECK(ps.ids() == std::vector<std::string>{"d:000001"});
    }

    TEST_CASE("source-and-target cost convention")
    {
        const auto ex = testing::example("d", 0, "one two", "un deux trois");
        CHECK(example_cost(ex) == 2);
        CHECK(example_cost(ex, BudgetCost::SourceAndTargetWords) == 5);
    }

    TEST_CASE("window positions")
    {
        const auto doc = ten_lines();
        const auto out = outdoc();
        const auto w7 = select_window(doc, 7, 3, out, 1);
        CHECK(w7.ids() == std::vector<std::string>{"doc:000004", "doc:000005", "doc:000006"});
        CHECK(w7.strategy == Strategy::Window);

        const auto w2 = select_window(doc, 2, 3, out, 1);
        REQUIRE(w2.items.size() == 3);
        CHECK(w2.items[0].doc_id == "out");
        CHECK(w2.items[1].id == "doc:000000");
        CHECK(w2.items[2].id == "doc:000001");

        const auto w0 = select_window(doc, 0, 3, out, 1);
        REQUIRE(w0.items.size() == 3);
        for (const auto& ex : w0.items) {
            CHECK(ex.doc_id == "out");
        }
        CHECK(select_window(doc, 0, 3, out, 1).ids() == w0.ids());
        CHECK(window_budget(doc, 7, 3, out, 1) == w7.budget_used);
        CHECK(w7.budget_used == source_word_total(w7.items));
        CHECK_THROWS_AS(select_window(doc, 10, 3, out, 1), UnknownIdError);
        CHECK_THROWS_AS(select_window(CorpusBank{}, 0, 3, out, 1), EmptyBankError);
    }

    TEST_CASE("window slides by one line")
    {
        const auto doc = ten_lines();
        const auto out = outdoc();
        for (std::size_t k : {1, 3, 5}) {
            for (std::size_t p = k; p + 1 < doc.size(); ++p) {
                auto cur = select_window(doc, p, k, out, 9).ids();
                const auto next = select_window(doc, p + 1, k, out, 9).ids();
                cur.erase(cur.begin());
                cur.push_back(doc[p].id);
                CHECK(cur == next);
            }
        }
    }

    TEST_CASE("random within document")
    {
        const auto doc = ten_lines();
        const auto out = outdoc();
        for (std::uint64_t s = 0; s < 50; ++s) {
            const auto ps = select_random_within(doc, 6, 4, out, s);
            REQUIRE(ps.items.size() == 4);
            for (const auto& ex : ps.items) {
                CHECK(ex.doc_id == "doc");
                CHECK(ex.position < 6);
            }
        }
        const auto short_prior = select_random_within(doc, 2, 4, out, 3);
        REQUIRE(short_prior.items.size() == 4);
        CHECK(short_prior.items[0].doc_id == "out");
        CHECK(short_prior.items[1].doc_id == "out");
        CHECK(short_prior.items[2].doc_id == "doc");
        CHECK(short_prior.items[3].doc_id == "doc");
        CHECK(select_random_within(doc, 6, 4, out, 3).ids() == select_random_within(doc, 6, 4, out, 3).ids());
    }

    TEST_CASE("preceding lines")
    {
        const auto doc = ten_lines();
        const auto p = preceding_lines(doc, 4);
        REQUIRE(p.size() == 4);
        for (const auto& ex : p.examples()) {
            CHECK(ex.position < 4);
        }
        CHECK(preceding_lines(doc, 0).empty());
    }

    TEST_CASE("static prompts are the document head")
    {
        const auto doc = ten_lines();
        CHECK(select_static(doc, 3).ids() == std::vector<std::string>{"doc:000000", "doc:000001", "doc:000002"});
        CHECK(select_static(doc, 20).items.size() == 10);
        CHECK(select_static(doc, 3).strategy == Strategy::Static);
        CHECK_THROWS_AS(select_static(CorpusBank{}, 3), EmptyBankError);
    }

    TEST_CASE("shuffle preserves the multiset and is uniform")
    {
        const auto doc = ten_lines();
        const auto base = select_window(doc, 3, 3, outdoc(), 0);
        std::map<std::vector<std::string>, double> counts;
        const int draws = 10000;
        for (int s = 0; s < draws; ++s) {
            const auto sh = shuffle_prompt_set(base, static_cast<std::uint64_t>(s));
            CHECK(sh.budget_used == base.budget_used);
            auto sorted = sh.ids();
            std::sort(sorted.begin(), sorted.end());
            CHECK(sorted == base.ids());
            counts[sh.ids()] += 1;
        }
        REQUIRE(counts.size() == 6);
        std::vector<double> observed;
        for (const auto& [perm, c] : counts) {
            observed.push_back(c);
        }
        // 5 degrees of freedom; 20.52 is the 0.999 quantile.
        CHECK(chi_square(observed, draws / 6.0) < 20.52);

        PromptSet scored = base;
        scored.scores = {1, 2, 3};
        const auto sh = shuffle_prompt_set(scored, 4);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto orig = std::find(base.items.begin(), base.items.end(), sh.items[i]) - base.items.begin();
            CHECK(sh.scores[i] == scored.scores[static_cast<std::size_t>(orig)]);
        }
    }
}
