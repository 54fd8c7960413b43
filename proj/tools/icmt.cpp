#include "icmt/bleu.hpp"
#include "icmt/corpus.hpp"
#include "icmt/embeddings.hpp"
#include "icmt/error.hpp"
#include "icmt/generation.hpp"
#include "icmt/harness.hpp"
#include "icmt/hashing.hpp"
#include "icmt/report.hpp"
#include "icmt/text.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitGeneration = 3;

struct GenOptions {
    std::string replay;
    std::string endpoint;
    std::string dump_requests;
    std::size_t max_in_flight = 4;
    std::size_t retries = 2;
    std::size_t timeout_ms = 120000;
};

struct CommonOptions {
    std::size_t k = 5;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<std::string> conditions;
    std::string src_lang = "en";
    std::string tgt_lang = "fr";
    std::string separator = "labels";
    std::optional<std::string> instruction;
    double k1 = 1.2;
    double b = 0.75;
    std::string coverage_weight = "idf";
    double tie_epsilon = icmt::kDefaultTieEpsilon;
    bool perplexity = false;
    std::optional<std::size_t> max_new_tokens;
    std::size_t threads = 0;
    std::string out;
    std::vector<std::string> report_formats{"jsonl", "csv", "md"};
};

struct DocOptions {
    std::string corpus;
    std::string format;
    std::string domain = "TED";
    std::size_t min_test_lines = 100;
    std::size_t max_eval_lines = 120;
    std::string embeddings;
    std::string embedding_ids;
    std::string budget_mode = "strict";
    std::string budget_cost = "source";
};

struct CrossOptions {
    std::vector<std::string> banks;
    std::vector<std::string> tests;
    std::string length_filter;
};

void add_common(CLI::App* app, CommonOptions& o)
{
    app->add_option("-k,--k", o.k, "Prompt examples per set")->capture_default_str();
    app->add_option("--seeds", o.seeds, "Run seeds")->delimiter(',')->capture_default_str();
    app->add_option("--conditions", o.conditions, "Conditions to run (default: all for the experiment)")
        ->delimiter(',');
    app->add_option("--src-lang", o.src_lang)->capture_default_str();
    app->add_option("--tgt-lang", o.tgt_lang)->capture_default_str();
    app->add_option("--separator", o.separator, "labels or equals")
        ->check(CLI::IsMember({"labels", "equals"}))
        ->capture_default_str();
    app->add_option("--instruction", o.instruction, "Instruction line (labels layout)");
    app->add_option("--k1", o.k1, "BM25 k1")->capture_default_str();
    app->add_option("--b", o.b, "BM25 b")->capture_default_str();
    app->add_option("--coverage-weight", o.coverage_weight, "idf or bm25-term")
        ->check(CLI::IsMember({"idf", "bm25-term"}))
        ->capture_default_str();
    app->add_option("--tie-epsilon", o.tie_epsilon, "No-change band in BLEU points")->capture_default_str();
    app->add_flag("--perplexity", o.perplexity, "Score test sources under each prompt");
    app->add_option("--max-new-tokens", o.max_new_tokens, "Override floor(1.5 * words) + 10");
    app->add_option("--threads", o.threads, "Worker threads (0 = hardware)")->capture_default_str();
}

void add_generation(CLI::App* app, GenOptions& g, CommonOptions& o)
{
    auto* replay = app->add_option("--replay", g.replay, "Replay JSONL of generation records");
    auto* endpoint = app->add_option("--endpoint", g.endpoint, "Generation service base URL");
    auto* dump = app->add_option("--dump-requests", g.dump_requests,
                                 "Write every generation/scoring request as JSONL and exit");
    replay->excludes(endpoint)->excludes(dump);
    endpoint->excludes(dump);
    app->add_option("--max-in-flight", g.max_in_flight, "Concurrent HTTP requests")->capture_default_str();
    app->add_option("--retries", g.retries, "Retries after a retryable HTTP failure")->capture_default_str();
    app->add_option("--timeout-ms", g.timeout_ms, "HTTP timeout")->capture_default_str();
    app->add_option("-o,--out", o.out, "Report path prefix (writes <out>.jsonl, <out>.md, <out>.<table>.csv)");
    app->add_option("--report-format", o.report_formats, "jsonl, csv, md")->delimiter(',')->capture_default_str();
}

void add_document(CLI::App* app, DocOptions& d)
{
    app->add_option("--corpus", d.corpus, "Parallel corpus with document ids")->required()->check(CLI::ExistingFile);
    app->add_option("--format", d.format, "tsv or jsonl (default: from extension)");
    app->add_option("--domain", d.domain)->capture_default_str();
    app->add_option("--min-test-lines", d.min_test_lines)->capture_default_str();
    app->add_option("--max-eval-lines", d.max_eval_lines)->capture_default_str();
    app->add_option("--embeddings", d.embeddings, "EMB1 vector file")->check(CLI::ExistingFile);
    app->add_option("--embedding-ids", d.embedding_ids, "Ids sidecar of --embeddings")->check(CLI::ExistingFile);
    app->add_option("--budget-mode", d.budget_mode, "strict or faithful")
        ->check(CLI::IsMember({"strict", "faithful"}))
        ->capture_default_str();
    app->add_option("--budget-cost", d.budget_cost, "source or source+target")
        ->check(CLI::IsMember({"source", "source+target"}))
        ->capture_default_str();
}

icmt::ExperimentConfig make_config(icmt::ExperimentKind kind, const CommonOptions& o)
{
    icmt::ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.conditions = o.conditions;
    cfg.k = o.k;
    cfg.seeds = o.seeds;
    cfg.lang_pair = {o.src_lang, o.tgt_lang};
    cfg.style = icmt::PromptStyle::for_languages(
        cfg.lang_pair, o.separator == "equals" ? icmt::Separator::Equals : icmt::Separator::Labels);
    if (o.instruction) {
        cfg.style.instruction = *o.instruction;
    }
    cfg.bm25 = {o.k1, o.b};
    cfg.coverage_weight = o.coverage_weight == "idf" ? icmt::CoverageWeight::Idf : icmt::CoverageWeight::Bm25Term;
    cfg.tie_epsilon = o.tie_epsilon;
    cfg.score_perplexity = o.perplexity;
    cfg.max_new_tokens = o.max_new_tokens;
    cfg.threads = o.threads;
    return cfg;
}

void apply_budget(icmt::ExperimentConfig& cfg, const DocOptions& d)
{
    cfg.budget.mode = d.budget_mode == "faithful" ? icmt::BudgetMode::Faithful : icmt::BudgetMode::Strict;
    cfg.budget.cost =
        d.budget_cost == "source" ? icmt::BudgetCost::SourceWords : icmt::BudgetCost::SourceAndTargetWords;
}

icmt::CorpusFormat format_of(const std::string& path, const std::string& explicit_format)
{
    if (explicit_format.empty()) {
        return icmt::format_from_extension(path);
    }
    const auto f = icmt::text::to_lower(explicit_format);
    if (f == "tsv") {
        return icmt::CorpusFormat::Tsv;
    }
    if (f == "jsonl") {
        return icmt::CorpusFormat::Jsonl;
    }
    throw icmt::ConfigError("unknown corpus format '" + explicit_format + "'");
}

void record_file(icmt::ExperimentConfig& cfg, const std::string& key, const std::string& path)
{
    cfg.manifest["data." + key] = std::filesystem::path(path).filename().string();
    cfg.manifest["data." + key + ".sha256"] = icmt::file_sha256(path);
}

struct GeneratorHandle {
    std::unique_ptr<icmt::Generator> generator;
    icmt::RequestRecorder* recorder = nullptr;
};

GeneratorHandle make_generator(const GenOptions& g)
{
    GeneratorHandle h;
    if (!g.dump_requests.empty()) {
        auto r = std::make_unique<icmt::RequestRecorder>();
        h.recorder = r.get();
        h.generator = std::move(r);
    } else if (!g.replay.empty()) {
        h.generator = std::make_unique<icmt::ReplayGenerator>(g.replay);
    } else if (!g.endpoint.empty()) {
        icmt::HttpOptions opt;
        opt.max_in_flight = g.max_in_flight;
        opt.max_retries = g.retries;
        opt.timeout = std::chrono::milliseconds(g.timeout_ms);
        h.generator = std::make_unique<icmt::HttpGenerator>(g.endpoint, opt);
    } else {
        throw icmt::ConfigError("one of --replay, --endpoint or --dump-requests is required");
    }
    return h;
}

void finish(const icmt::ExperimentReport& report, const GeneratorHandle& gen, const GenOptions& g,
            const CommonOptions& o)
{
    if (gen.recorder) {
        gen.recorder->write(g.dump_requests);
        std::cerr << "wrote " << gen.recorder->request_lines().size() << " requests to " << g.dump_requests << '\n';
        return;
    }
    if (!o.out.empty()) {
        for (const auto& f : o.report_formats) {
            const auto format = icmt::parse_report_format(f);
            std::string path = o.out;
            path += format == icmt::ReportFormat::Jsonl ? ".jsonl" : format == icmt::ReportFormat::Csv ? ".csv" : ".md";
            for (const auto& written : icmt::emit_report(report, path, format)) {
                std::cerr << "wrote " << written.string() << '\n';
            }
        }
    }
    std::cout << icmt::render_markdown(report);
}

struct DocumentData {
    icmt::DocumentSplit split;
    std::optional<icmt::EmbeddingStore> embeddings;
};

DocumentData load_document_data(icmt::ExperimentConfig& cfg, const DocOptions& d)
{
    const auto bank = icmt::load_parallel_corpus(d.corpus, format_of(d.corpus, d.format),
                                                 icmt::Domain::parse(d.domain), cfg.lang_pair);
    record_file(cfg, "corpus", d.corpus);
    cfg.manifest["split.min_test_lines"] = std::to_string(d.min_test_lines);
    cfg.manifest["split.max_eval_lines"] = std::to_string(d.max_eval_lines);
    DocumentData data{icmt::partition_ted(bank, d.min_test_lines, d.max_eval_lines), std::nullopt};
    if (!d.embeddings.empty() || !d.embedding_ids.empty()) {
        if (d.embeddings.empty() || d.embedding_ids.empty()) {
            throw icmt::ConfigError("--embeddings and --embedding-ids go together");
        }
        data.embeddings = icmt::load_embeddings(d.embeddings, d.embedding_ids);
        record_file(cfg, "embeddings", d.embeddings);
        record_file(cfg, "embedding_ids", d.embedding_ids);
    }
    return data;
}

std::pair<std::string, std::string> split_assignment(const std::string& s)
{
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
        throw icmt::ConfigError("expected DOMAIN=PATH, got '" + s + "'");
    }
    return {s.substr(0, eq), s.substr(eq + 1)};
}

std::vector<std::string> read_lines(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw icmt::ConfigError("cannot open " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

int run_score(const std::string& hyp_path, const std::string& ref_path, const std::string& docs_path,
              bool sentences)
{
    const auto hyps = read_lines(hyp_path);
    const auto refs = read_lines(ref_path);
    const icmt::BleuConfig cfg;
    std::cout << "signature: " << cfg.signature() << '\n';
    char buf[128];
    std::snprintf(buf, sizeof buf, "corpus_bleu: %.4f\n", icmt::corpus_bleu(hyps, refs, cfg));
    std::cout << buf;
    if (!docs_path.empty()) {
        const auto docs = read_lines(docs_path);
        if (docs.size() != hyps.size()) {
            throw icmt::ConfigError("--docs has " + std::to_string(docs.size()) + " lines, hypotheses have " +
                                    std::to_string(hyps.size()));
        }
        std::vector<std::string> order;
        std::map<std::string, icmt::DocumentTranslations> by_doc;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            auto [it, inserted] = by_doc.try_emplace(docs[i]);
            if (inserted) {
                order.push_back(docs[i]);
            }
            it->second.hypotheses.push_back(hyps[i]);
            it->second.references.push_back(refs[i]);
        }
        std::vector<icmt::DocumentTranslations> translations;
        for (const auto& d : order) {
            translations.push_back(by_doc[d]);
        }
        std::snprintf(buf, sizeof buf, "document_bleu_average: %.4f (%zu documents)\n",
                      icmt::document_bleu_average(translations, cfg), translations.size());
        std::cout << buf;
    }
    if (sentences) {
        for (std::size_t i = 0; i < hyps.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu\t%.4f\n", i, icmt::sentence_bleu(hyps[i], refs[i], cfg));
            std::cout << buf;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"In-context MT prompt selection and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(icmt::version()));

    CommonOptions common;
    GenOptions gen_opts;
    DocOptions doc_opts;
    CrossOptions cross;

    auto* crosstable = app.add_subcommand("crosstable", "Prompt-domain x test-domain BLEU table");
    add_common(crosstable, common);
    add_generation(crosstable, gen_opts, common);
    crosstable->add_option("--bank", cross.banks, "DOMAIN=PATH prompt bank (repeat per domain)")->required();
    crosstable->add_option("--test", cross.tests, "DOMAIN=PATH test set (repeat per domain)")->required();
    crosstable->add_option("--length-filter", cross.length_filter, "MIN-MAX source words for prompt banks");

    struct DocCommand {
        const char* name;
        const char* help;
        icmt::ExperimentKind kind;
        CLI::App* app = nullptr;
    };
    std::vector<DocCommand> doc_commands{
        {"doclevel", "Document-level strategies (out-of-document, within-document, window)",
         icmt::ExperimentKind::DocLevel},
        {"budget-match", "Within-document retrieval limited to the window budget", icmt::ExperimentKind::BudgetMatched},
        {"ablate-order", "Static, random, window and shuffled-window prompts", icmt::ExperimentKind::ShuffleAblation},
        {"interference", "Prompted vs zero-shot sentence BLEU", icmt::ExperimentKind::Interference},
    };
    for (auto& c : doc_commands) {
        c.app = app.add_subcommand(c.name, c.help);
        add_common(c.app, common);
        add_generation(c.app, gen_opts, common);
        add_document(c.app, doc_opts);
    }

    std::string select_experiment = "doclevel";
    std::string select_out;
    auto* select = app.add_subcommand("select", "Prompt selection only: prompt ids, coverage and L2");
    add_common(select, common);
    add_document(select, doc_opts);
    select->add_option("--experiment", select_experiment, "Condition defaults of this experiment")
        ->capture_default_str();
    select->add_option("-o,--out", select_out, "Selection JSONL");

    std::string hyp_path;
    std::string ref_path;
    std::string docs_path;
    bool sentences = false;
    auto* score = app.add_subcommand("score", "BLEU of a hypothesis file against a reference file");
    score->add_option("--hyp", hyp_path, "One hypothesis per line")->required()->check(CLI::ExistingFile);
    score->add_option("--ref", ref_path, "One reference per line")->required()->check(CLI::ExistingFile);
    score->add_option("--docs", docs_path, "Document id per line for the document-level average")
        ->check(CLI::ExistingFile);
    score->add_flag("--sentences", sentences, "Also print sentence BLEU per line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (score->parsed()) {
            return run_score(hyp_path, ref_path, docs_path, sentences);
        }

        if (crosstable->parsed()) {
            auto cfg = make_config(icmt::ExperimentKind::DomainCrosstable, common);
            if (!cross.length_filter.empty()) {
                std::size_t lo = 0;
                std::size_t hi = 0;
                char dash = 0;
                std::istringstream in(cross.length_filter);
                if (!(in >> lo >> dash >> hi) || dash != '-' || !in.eof()) {
                    throw icmt::ConfigError("--length-filter expects MIN-MAX, got '" + cross.length_filter + "'");
                }
                cfg.length_filter = std::pair{lo, hi};
            }
            std::map<std::string, icmt::CorpusBank> banks;
            std::map<std::string, icmt::CorpusBank> tests;
            for (const auto& [target, specs, key] :
                 {std::tuple{&banks, &cross.banks, "bank"}, std::tuple{&tests, &cross.tests, "test"}}) {
                for (const auto& spec : *specs) {
                    const auto [domain_name, path] = split_assignment(spec);
                    const auto domain = icmt::Domain::parse(domain_name);
                    (*target)[domain.label()] =
                        icmt::load_parallel_corpus(path, format_of(path, ""), domain, cfg.lang_pair);
                    record_file(cfg, std::string(key) + "." + domain.label(), path);
                }
            }
            auto gen = make_generator(gen_opts);
            const auto report = icmt::run_domain_crosstable(cfg, banks, tests, *gen.generator);
            finish(report, gen, gen_opts, common);
            return 0;
        }

        for (const auto& c : doc_commands) {
            if (!c.app->parsed()) {
                continue;
            }
            auto cfg = make_config(c.kind, common);
            apply_budget(cfg, doc_opts);
            const auto data = load_document_data(cfg, doc_opts);
            auto gen = make_generator(gen_opts);
            const icmt::DocumentInputs inputs{&data.split, data.embeddings ? &*data.embeddings : nullptr};
            const auto report = icmt::run_document_kind(cfg, inputs, *gen.generator);
            finish(report, gen, gen_opts, common);
            return 0;
        }

        if (select->parsed()) {
            auto cfg = make_config(icmt::parse_experiment(select_experiment), common);
            apply_budget(cfg, doc_opts);
            const auto data = load_document_data(cfg, doc_opts);
            const icmt::DocumentInputs inputs{&data.split, data.embeddings ? &*data.embeddings : nullptr};
            const auto profile = icmt::profile_selection(cfg, inputs);
            if (!select_out.empty()) {
                std::ofstream out(select_out, std::ios::binary | std::ios::trunc);
                if (!out) {
                    throw icmt::ConfigError("cannot write " + select_out);
                }
                for (const auto& r : profile.records) {
                    out << icmt::to_json_line(r) << '\n';
                }
                for (const auto& s : profile.summaries) {
                    out << icmt::to_json_line(s) << '\n';
                }
            }
            std::cout << "| Condition | Coverage | L2 | Budget | Rows |\n|---|---:|---:|---:|---:|\n";
            for (const auto& s : profile.summaries) {
                char buf[256];
                std::snprintf(buf, sizeof buf, "| %s | %.4f | %s | %.2f | %zu |\n", s.condition.c_str(), s.coverage,
                              s.l2 ? std::to_string(*s.l2).c_str() : "-", s.mean_budget, s.rows);
                std::cout << buf;
            }
            return 0;
        }
    } catch (const icmt::GenerationError& e) {
        std::cerr << "generation error: " << e.what() << '\n';
        return kExitGeneration;
    } catch (const icmt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
