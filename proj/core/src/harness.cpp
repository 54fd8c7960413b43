#include "icmt/harness.hpp"

#include "icmt/error.hpp"
#include "icmt/hashing.hpp"
#include "icmt/metrics.hpp"
#include "icmt/random.hpp"
#include "icmt/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace icmt {

namespace {

const std::vector<std::string>& doc_level_conditions()
{
    static const std::vector<std::string> all{
        "zeroshot",       "random-out",         "nn-out",      "bm25-out",
        "bm25s-out",      "random-within",      "window",      "static",
        "shuffle",        "bm25-within",        "bm25s-within", "nn-within",
        "bm25-within-budget", "bm25s-within-budget", "nn-within-budget"};
    return all;
}

std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& body)
{
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const auto i = next.fetch_add(1);
                if (i >= n) {
                    return;
                }
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) {
                        error = std::current_exception();
                    }
                    failed = true;
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

/// Memoises completions by request hash; greedy decoding makes repeats redundant.
class CachingGenerator {
public:
    explicit CachingGenerator(Generator& inner) : inner_(inner) {}

    Completion generate(const GenerationRequest& request)
    {
        const auto key = prompt_hash(request.prompt);
        {
            std::lock_guard lock(mu_);
            if (const auto it = generated_.find(key); it != generated_.end()) {
                return it->second;
            }
        }
        auto c = inner_.generate(request);
        std::lock_guard lock(mu_);
        return generated_.try_emplace(key, std::move(c)).first->second;
    }

    std::vector<double> score(const ScoringRequest& request)
    {
        const auto key = scoring_hash(request.context, request.continuation);
        {
            std::lock_guard lock(mu_);
            if (const auto it = scored_.find(key); it != scored_.end()) {
                return it->second;
            }
        }
        auto s = inner_.score(request);
        std::lock_guard lock(mu_);
        return scored_.try_emplace(key, std::move(s)).first->second;
    }

private:
    Generator& inner_;
    std::mutex mu_;
    std::unordered_map<std::string, Completion> generated_;
    std::unordered_map<std::string, std::vector<double>> scored_;
};

std::size_t cost_of(const PromptSet& ps, BudgetCost cost)
{
    std::size_t total = 0;
    for (const auto& ex : ps.items) {
        total += example_cost(ex, cost);
    }
    return total;
}

struct DocTask {
    std::size_t condition;
    std::uint64_t seed;
    const CorpusBank* doc;
    const ParallelExample* test;
};

class DocumentRunner {
public:
    DocumentRunner(const ExperimentConfig& cfg, const DocumentInputs& inputs, std::vector<std::string> conditions)
        : cfg_(cfg), inputs_(inputs), conditions_(std::move(conditions))
    {
        if (!inputs_.split) {
            throw ConfigError("document experiment needs a document split");
        }
        if (inputs_.split->test_docs.empty()) {
            throw ConfigError("document split has no test documents");
        }
        for (const auto& c : conditions_) {
            if (needs_embeddings(c) && !inputs_.embeddings) {
                throw ConfigError("condition '" + c + "' needs embeddings");
            }
            if ((c == "bm25-out" || c == "bm25s-out") && !outdoc_index_) {
                outdoc_index_ = build_bm25_index(inputs_.split->outdoc_bank, cfg_.bm25);
            }
        }
        for (std::size_t ci = 0; ci < conditions_.size(); ++ci) {
            for (const auto seed : cfg_.seeds) {
                for (const auto& [doc_id, doc] : inputs_.split->test_docs) {
                    for (const auto& ex : doc.examples()) {
                        if (conditions_[ci] == "static" && ex.position < cfg_.k) {
                            continue;
                        }
                        tasks_.push_back({ci, seed, &doc, &ex});
                    }
                }
            }
        }
    }

    const std::vector<DocTask>& tasks() const noexcept { return tasks_; }
    const std::string& condition(const DocTask& t) const { return conditions_[t.condition]; }

    PromptSet select(const DocTask& t) const
    {
        const auto& cond = condition(t);
        const auto& test = *t.test;
        const auto& doc = *t.doc;
        const auto& outdoc = inputs_.split->outdoc_bank;
        const auto k = cfg_.k;
        const auto window_seed = derive_seed(t.seed, "window|" + test.id);

        if (cond == "zeroshot") {
            return PromptSet{};
        }
        if (cond == "random-out") {
            return select_random(outdoc, k, derive_seed(t.seed, "random-out|" + test.id));
        }
        if (cond == "bm25-out") {
            return select_topk_similarity(*outdoc_index_, outdoc, test.source, k);
        }
        if (cond == "bm25s-out") {
            CoverageUtility u(*outdoc_index_, test.source, cfg_.coverage_weight);
            GreedyOptions opt;
            opt.max_items = k;
            opt.unbounded_budget = true;
            return select_greedy_budget(outdoc, u, {}, opt);
        }
        if (cond == "nn-out") {
            return select_topk_similarity(*inputs_.embeddings, outdoc, inputs_.embeddings->vector_of(test.id), k);
        }
        if (cond == "random-within") {
            return select_random_within(doc, test.position, k, outdoc,
                                        derive_seed(t.seed, "random-within|" + test.id));
        }
        if (cond == "window") {
            return select_window(doc, test.position, k, outdoc, window_seed);
        }
        if (cond == "static") {
            return select_static(doc, k);
        }
        if (cond == "shuffle") {
            return shuffle_prompt_set(select_window(doc, test.position, k, outdoc, window_seed),
                                      derive_seed(t.seed, "shuffle|" + test.id));
        }

        // Within-document retrieval over the lines preceding the test line.
        const auto prior = preceding_lines(doc, test.position);
        const bool budgeted = cond.ends_with("-budget");
        const auto base = budgeted ? cond.substr(0, cond.size() - 7) : cond;
        PromptSet ps;
        ps.strategy = base == "bm25-within" ? Strategy::Bm25 : base == "bm25s-within" ? Strategy::Bm25S : Strategy::Nn;
        if (prior.empty()) {
            return ps;
        }

        if (!budgeted) {
            if (base == "bm25-within") {
                return select_topk_similarity(build_bm25_index(prior, cfg_.bm25), prior, test.source, k);
            }
            if (base == "nn-within") {
                return select_topk_similarity(*inputs_.embeddings, prior, inputs_.embeddings->vector_of(test.id), k);
            }
            const auto index = build_bm25_index(prior, cfg_.bm25);
            CoverageUtility u(index, test.source, cfg_.coverage_weight);
            GreedyOptions opt;
            opt.max_items = k;
            opt.unbounded_budget = true;
            return select_greedy_budget(prior, u, {}, opt);
        }

        BudgetSpec spec = cfg_.budget;
        spec.budget = cost_of(select_window(doc, test.position, k, outdoc, window_seed), spec.cost);
        GreedyOptions opt;
        opt.strategy = ps.strategy;
        if (base == "nn-within") {
            auto u = ModularUtility::from_embeddings(*inputs_.embeddings, prior,
                                                     inputs_.embeddings->vector_of(test.id));
            return select_greedy_budget(prior, u, spec, opt);
        }
        const auto index = build_bm25_index(prior, cfg_.bm25);
        if (base == "bm25-within") {
            auto u = ModularUtility::from_bm25(index, test.source);
            return select_greedy_budget(prior, u, spec, opt);
        }
        CoverageUtility u(index, test.source, cfg_.coverage_weight);
        return select_greedy_budget(prior, u, spec, opt);
    }

    std::optional<double> l2_of(const PromptSet& ps, const ParallelExample& test) const
    {
        if (!inputs_.embeddings || ps.items.empty()) {
            return std::nullopt;
        }
        const auto& store = *inputs_.embeddings;
        if (!store.row_of(test.id)) {
            return std::nullopt;
        }
        std::vector<std::span<const float>> vecs;
        for (const auto& ex : ps.items) {
            const auto r = store.row_of(ex.id);
            if (!r) {
                return std::nullopt;
            }
            vecs.push_back(store.row(*r));
        }
        return mean_l2(vecs, store.vector_of(test.id));
    }

private:
    const ExperimentConfig& cfg_;
    const DocumentInputs& inputs_;
    std::vector<std::string> conditions_;
    std::optional<Bm25Index> outdoc_index_;
    std::vector<DocTask> tasks_;
};

double prompt_coverage(const PromptSet& ps, const ParallelExample& test)
{
    return coverage(ps.sources(), test.source);
}

std::map<std::string, std::string> base_manifest(const ExperimentConfig& cfg,
                                                 const std::vector<std::string>& conditions,
                                                 const std::string& generator)
{
    std::map<std::string, std::string> m = cfg.manifest;
    m["experiment"] = std::string(to_string(cfg.experiment));
    m["conditions"] = join(conditions, ",");
    m["k"] = std::to_string(cfg.k);
    std::vector<std::string> seeds;
    for (const auto s : cfg.seeds) {
        seeds.push_back(std::to_string(s));
    }
    m["seeds"] = join(seeds, ",");
    m["length_filter"] = cfg.length_filter ? std::to_string(cfg.length_filter->first) + "-" +
                                                 std::to_string(cfg.length_filter->second)
                                           : "none";
    m["budget.mode"] = cfg.budget.mode == BudgetMode::Strict ? "strict" : "faithful";
    m["budget.cost"] = cfg.budget.cost == BudgetCost::SourceWords ? "source" : "source+target";
    m["budget.amount"] = "window budget of each test line";
    m["lang_pair"] = cfg.lang_pair.source + "-" + cfg.lang_pair.target;
    m["style.instruction"] = cfg.style.instruction;
    m["style.src_label"] = cfg.style.src_label;
    m["style.tgt_label"] = cfg.style.tgt_label;
    m["style.separator"] = cfg.style.separator == Separator::Labels ? "labels" : "equals";
    m["prompt.layout"] = "one line per example, single newline between lines, no blank lines, "
                         "no trailing newline";
    m["window.order"] = "out-of-document fills first, then in-document lines earliest first";
    m["bm25.k1"] = fmt_double(cfg.bm25.k1);
    m["bm25.b"] = fmt_double(cfg.bm25.b);
    m["coverage.weight"] = cfg.coverage_weight == CoverageWeight::Idf ? "idf" : "bm25-term";
    m["coverage.averaging"] = "sentence, then document, then across documents";
    m["bleu.signature"] = cfg.bleu.signature();
    m["bleu.document"] = "mean of per-document corpus BLEU, per seed; mean and population std over seeds";
    m["tie_epsilon"] = fmt_double(cfg.tie_epsilon);
    m["decoding"] = "greedy";
    m["stop"] = "\\n";
    m["max_new_tokens"] =
        cfg.max_new_tokens ? std::to_string(*cfg.max_new_tokens) : "floor(1.5 * source words) + 10";
    m["score_perplexity"] = cfg.score_perplexity ? "true" : "false";
    m["generator"] = generator;
    m["version"] = std::string(version());
    return m;
}

GenerationParams params_for(const ExperimentConfig& cfg, const ParallelExample& test)
{
    GenerationParams p;
    p.max_new_tokens = cfg.max_new_tokens ? *cfg.max_new_tokens : default_max_new_tokens(test.source);
    return p;
}

ReportRow evaluate(const ExperimentConfig& cfg, CachingGenerator& gen, const PromptSet& ps,
                   const ParallelExample& test)
{
    ReportRow row;
    row.test_id = test.id;
    row.doc_id = test.doc_id;
    row.reference = test.target;
    row.strategy = std::string(to_string(ps.strategy));
    row.num_prompts = ps.items.size();
    row.budget_used = ps.budget_used;
    row.prompt_ids = ps.ids();

    const auto prompt = render_prompt(cfg.style, ps, test.source);
    row.prompt_hash = prompt_hash(prompt);
    const auto completion = gen.generate({test.id, prompt, params_for(cfg, test)});
    row.hypothesis = extract_hypothesis(completion.text, cfg.style).text;
    row.sentence_bleu = sentence_bleu(row.hypothesis, row.reference, cfg.bleu);
    row.coverage = prompt_coverage(ps, test);

    if (cfg.score_perplexity) {
        const auto req = source_scoring_request(cfg.style, ps, test.source);
        const auto lps = gen.score({test.id, req.context, req.continuation});
        row.perplexity = conditional_perplexity(lps);
    }
    return row;
}

ExperimentReport run_documents(const ExperimentConfig& cfg, const DocumentInputs& inputs, Generator& generator)
{
    validate(cfg);
    const auto conditions = cfg.conditions.empty() ? default_conditions(cfg.experiment) : cfg.conditions;
    DocumentRunner runner(cfg, inputs, conditions);
    CachingGenerator gen(generator);

    const auto& tasks = runner.tasks();
    std::vector<ReportRow> rows(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
        const auto& t = tasks[i];
        const auto ps = runner.select(t);
        auto row = evaluate(cfg, gen, ps, *t.test);
        row.condition = runner.condition(t);
        row.seed = t.seed;
        row.l2 = runner.l2_of(ps, *t.test);
        rows[i] = std::move(row);
    });

    ExperimentReport report;
    report.experiment = std::string(to_string(cfg.experiment));
    report.manifest = base_manifest(cfg, conditions, generator.describe());
    const auto& split = *inputs.split;
    report.manifest["data.test_docs"] = std::to_string(split.test_docs.size());
    report.manifest["data.test_lines"] = std::to_string(split.test_line_count());
    report.manifest["data.outdoc_examples"] = std::to_string(split.outdoc_bank.size());
    report.manifest["data.discarded_tail_lines"] = std::to_string(split.discarded_tail_lines);
    if (inputs.embeddings) {
        report.manifest["embeddings.rows"] = std::to_string(inputs.embeddings->size());
        report.manifest["embeddings.dim"] = std::to_string(inputs.embeddings->dim());
    }
    report.rows = std::move(rows);
    aggregate(report, cfg.bleu, cfg.tie_epsilon);
    return report;
}

} // namespace

std::string_view to_string(ExperimentKind kind) noexcept
{
    switch (kind) {
    case ExperimentKind::DomainCrosstable:
        return "crosstable";
    case ExperimentKind::DocLevel:
        return "doclevel";
    case ExperimentKind::BudgetMatched:
        return "budget-match";
    case ExperimentKind::ShuffleAblation:
        return "ablate-order";
    case ExperimentKind::Interference:
        return "interference";
    }
    return "unknown";
}

ExperimentKind parse_experiment(std::string_view name)
{
    for (const auto k : {ExperimentKind::DomainCrosstable, ExperimentKind::DocLevel, ExperimentKind::BudgetMatched,
                         ExperimentKind::ShuffleAblation, ExperimentKind::Interference}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::vector<std::string> default_conditions(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::DomainCrosstable:
        return {"random"};
    case ExperimentKind::DocLevel:
        return {"random-out", "nn-out", "bm25-out", "bm25s-out", "random-within", "window", "static", "shuffle"};
    case ExperimentKind::BudgetMatched:
        return {"window",      "bm25-within-budget", "bm25s-within-budget", "nn-within-budget",
                "bm25-within", "bm25s-within",       "nn-within"};
    case ExperimentKind::ShuffleAblation:
        return {"static", "random-within", "window", "shuffle"};
    case ExperimentKind::Interference:
        return {"zeroshot", "random-out", "bm25-out", "bm25s-out", "nn-out", "window"};
    }
    return {};
}

std::vector<std::string> known_conditions(ExperimentKind kind)
{
    if (kind == ExperimentKind::DomainCrosstable) {
        return {"random"};
    }
    return doc_level_conditions();
}

bool needs_embeddings(std::string_view condition)
{
    return condition.starts_with("nn-");
}

void validate(const ExperimentConfig& cfg)
{
    if (cfg.seeds.empty()) {
        throw ConfigError("at least one seed is required");
    }
    if (cfg.length_filter && cfg.length_filter->first > cfg.length_filter->second) {
        throw ConfigError("length filter minimum exceeds maximum");
    }
    if (!(cfg.tie_epsilon >= 0.0)) {
        throw ConfigError("tie epsilon must be non-negative");
    }
    const auto known = known_conditions(cfg.experiment);
    std::vector<std::string> seen;
    for (const auto& c : cfg.conditions) {
        if (std::find(known.begin(), known.end(), c) == known.end()) {
            throw ConfigError("unknown condition '" + c + "' for experiment " +
                              std::string(to_string(cfg.experiment)));
        }
        if (std::find(seen.begin(), seen.end(), c) != seen.end()) {
            throw ConfigError("condition '" + c + "' listed twice");
        }
        seen.push_back(c);
    }
    if (cfg.style.separator == Separator::Labels && (cfg.style.src_label.empty() || cfg.style.tgt_label.empty())) {
        throw ConfigError("label separator needs non-empty labels");
    }
}

ExperimentReport run_domain_crosstable(const ExperimentConfig& cfg, const std::map<std::string, CorpusBank>& banks,
                                       const std::map<std::string, CorpusBank>& tests, Generator& generator)
{
    validate(cfg);
    if (banks.size() < 2) {
        throw ConfigError("crosstable needs at least two domains");
    }
    for (const auto& [domain, bank] : banks) {
        if (!tests.count(domain)) {
            throw ConfigError("no test set for domain " + domain);
        }
        if (bank.empty()) {
            throw ConfigError("empty prompt bank for domain " + domain);
        }
    }
    for (const auto& [domain, test] : tests) {
        if (!banks.count(domain)) {
            throw ConfigError("no prompt bank for domain " + domain);
        }
        if (test.empty()) {
            throw ConfigError("empty test set for domain " + domain);
        }
    }

    IdSet test_ids;
    for (const auto& [domain, test] : tests) {
        for (const auto& ex : test.examples()) {
            test_ids.insert(ex.id);
        }
    }

    struct Task {
        const std::string* prompt_domain;
        const PromptSet* prompts;
        std::uint64_t seed;
        const std::string* test_domain;
        const ParallelExample* test;
    };
    std::map<std::pair<std::string, std::uint64_t>, PromptSet> prompt_sets;
    for (const auto& [domain, bank] : banks) {
        const auto pool = cfg.length_filter
                              ? filter_by_source_length(bank, cfg.length_filter->first, cfg.length_filter->second)
                              : bank;
        for (const auto seed : cfg.seeds) {
            prompt_sets[{domain, seed}] = select_random(pool, cfg.k, derive_seed(seed, "crosstable|" + domain), test_ids);
        }
    }
    std::vector<Task> tasks;
    for (const auto& [pd, bank] : banks) {
        for (const auto& [td, test] : tests) {
            for (const auto seed : cfg.seeds) {
                const auto& ps = prompt_sets.at({pd, seed});
                for (const auto& ex : test.examples()) {
                    tasks.push_back({&pd, &ps, seed, &td, &ex});
                }
            }
        }
    }

    CachingGenerator gen(generator);
    std::vector<ReportRow> rows(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
        const auto& t = tasks[i];
        auto row = evaluate(cfg, gen, *t.prompts, *t.test);
        row.condition = *t.prompt_domain + "->" + *t.test_domain;
        row.prompt_domain = *t.prompt_domain;
        row.test_domain = *t.test_domain;
        row.seed = t.seed;
        rows[i] = std::move(row);
    });

    ExperimentReport report;
    report.experiment = std::string(to_string(ExperimentKind::DomainCrosstable));
    report.manifest = base_manifest(cfg, {"random"}, generator.describe());
    report.manifest["experiment"] = report.experiment;
    for (const auto& [domain, bank] : banks) {
        report.manifest["data.bank." + domain] = std::to_string(bank.size());
    }
    for (const auto& [domain, test] : tests) {
        report.manifest["data.test." + domain] = std::to_string(test.size());
    }
    report.rows = std::move(rows);
    aggregate(report, cfg.bleu, cfg.tie_epsilon);
    return report;
}

ExperimentReport run_document_experiment(const ExperimentConfig& cfg, const DocumentInputs& inputs,
                                         Generator& generator)
{
    auto c = cfg;
    c.experiment = ExperimentKind::DocLevel;
    return run_documents(c, inputs, generator);
}

ExperimentReport run_budget_matched(const ExperimentConfig& cfg, const DocumentInputs& inputs, Generator& generator)
{
    auto c = cfg;
    c.experiment = ExperimentKind::BudgetMatched;
    return run_documents(c, inputs, generator);
}

ExperimentReport run_shuffle_ablation(const ExperimentConfig& cfg, const DocumentInputs& inputs,
                                      Generator& generator)
{
    auto c = cfg;
    c.experiment = ExperimentKind::ShuffleAblation;
    return run_documents(c, inputs, generator);
}

ExperimentReport run_interference(const ExperimentConfig& cfg, const DocumentInputs& inputs, Generator& generator)
{
    auto c = cfg;
    c.experiment = ExperimentKind::Interference;
    if (!c.conditions.empty() &&
        std::find(c.conditions.begin(), c.conditions.end(), kZeroShotCondition) == c.conditions.end()) {
        c.conditions.insert(c.conditions.begin(), std::string(kZeroShotCondition));
    }
    return run_documents(c, inputs, generator);
}

ExperimentReport run_document_kind(const ExperimentConfig& cfg, const DocumentInputs& inputs, Generator& generator)
{
    switch (cfg.experiment) {
    case ExperimentKind::DocLevel:
        return run_document_experiment(cfg, inputs, generator);
    case ExperimentKind::BudgetMatched:
        return run_budget_matched(cfg, inputs, generator);
    case ExperimentKind::ShuffleAblation:
        return run_shuffle_ablation(cfg, inputs, generator);
    case ExperimentKind::Interference:
        return run_interference(cfg, inputs, generator);
    case ExperimentKind::DomainCrosstable:
        break;
    }
    throw ConfigError("crosstable is not a document-level experiment");
}

SelectionProfile profile_selection(const ExperimentConfig& cfg, const DocumentInputs& inputs)
{
    validate(cfg);
    const auto conditions = cfg.conditions.empty() ? default_conditions(cfg.experiment) : cfg.conditions;
    DocumentRunner runner(cfg, inputs, conditions);
    const auto& tasks = runner.tasks();

    SelectionProfile profile;
    profile.records.resize(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
        const auto& t = tasks[i];
        const auto ps = runner.select(t);
        auto& r = profile.records[i];
        r.condition = runner.condition(t);
        r.doc_id = t.test->doc_id;
        r.test_id = t.test->id;
        r.seed = t.seed;
        r.prompt_ids = ps.ids();
        r.scores = ps.scores;
        r.budget_used = ps.budget_used;
        r.coverage = prompt_coverage(ps, *t.test);
        r.l2 = runner.l2_of(ps, *t.test);
    });

    for (const auto& c : conditions) {
        std::vector<std::string> docs;
        std::unordered_map<std::string, std::vector<const SelectionRecord*>> by_doc;
        for (const auto& r : profile.records) {
            if (r.condition != c) {
                continue;
            }
            auto [it, inserted] = by_doc.try_emplace(r.doc_id);
            if (inserted) {
                docs.push_back(r.doc_id);
            }
            it->second.push_back(&r);
        }
        SelectionSummary s;
        s.condition = c;
        double cov_sum = 0.0;
        double l2_sum = 0.0;
        std::size_t l2_docs = 0;
        double budget = 0.0;
        for (const auto& d : docs) {
            const auto& rs = by_doc[d];
            double cov = 0.0;
            double l2 = 0.0;
            std::size_t l2_n = 0;
            for (const auto* r : rs) {
                cov += r->coverage;
                budget += static_cast<double>(r->budget_used);
                if (r->l2) {
                    l2 += *r->l2;
                    ++l2_n;
                }
            }
            cov_sum += cov / static_cast<double>(rs.size());
            if (l2_n) {
                l2_sum += l2 / static_cast<double>(l2_n);
                ++l2_docs;
            }
            s.rows += rs.size();
        }
        if (!docs.empty()) {
            s.coverage = cov_sum / static_cast<double>(docs.size());
            s.mean_budget = budget / static_cast<double>(s.rows);
        }
        if (l2_docs) {
            s.l2 = l2_sum / static_cast<double>(l2_docs);
        }
        profile.summaries.push_back(std::move(s));
    }
    return profile;
}

std::string to_json_line(const SelectionRecord& r)
{
    nlohmann::ordered_json j;
    j["type"] = "selection";
    j["condition"] = r.condition;
    j["doc_id"] = r.doc_id;
    j["test_id"] = r.test_id;
    j["seed"] = r.seed;
    j["prompt_ids"] = r.prompt_ids;
    j["scores"] = r.scores;
    j["budget_used"] = r.budget_used;
    j["coverage"] = r.coverage;
    j["l2"] = r.l2 ? nlohmann::ordered_json(*r.l2) : nlohmann::ordered_json();
    return j.dump();
}

std::string to_json_line(const SelectionSummary& s)
{
    nlohmann::ordered_json j;
    j["type"] = "selection_summary";
    j["condition"] = s.condition;
    j["rows"] = s.rows;
    j["coverage"] = s.coverage;
    j["l2"] = s.l2 ? nlohmann::ordered_json(*s.l2) : nlohmann::ordered_json();
    j["mean_budget"] = s.mean_budget;
    return j.dump();
}

} // namespace icmt
