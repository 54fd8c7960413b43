#include "icmt/report.hpp"

#include "icmt/error.hpp"
#include "icmt/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#ifndef ICMT_VERSION_STRING
#define ICMT_VERSION_STRING "0.0.0"
#endif

namespace icmt {

using ordered_json = nlohmann::ordered_json;

std::string_view version() noexcept { return ICMT_VERSION_STRING; }

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs)
{
    if (xs.empty()) {
        return {};
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

template <typename Key, typename T>
std::vector<T>& bucket_for(std::vector<Key>& order, std::unordered_map<Key, std::vector<T>>& groups, const Key& key)
{
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
        order.push_back(key);
    }
    return it->second;
}

/// Mean per document, then across documents, of the rows where `get` has a value.
template <typename Get>
std::optional<double> doc_average(const std::vector<const ReportRow*>& rows, Get get)
{
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<double>> by_doc;
    for (const auto* r : rows) {
        if (const std::optional<double> v = get(*r)) {
            bucket_for(order, by_doc, r->doc_id).push_back(*v);
        }
    }
    if (order.empty()) {
        return std::nullopt;
    }
    std::vector<double> doc_means;
    doc_means.reserve(order.size());
    for (const auto& d : order) {
        doc_means.push_back(mean_std(by_doc[d]).mean);
    }
    return mean_std(doc_means).mean;
}

} // namespace

std::size_t histogram_bucket(double sentence_bleu) noexcept
{
    if (!(sentence_bleu > 0.0)) {
        return 0;
    }
    const auto b = static_cast<std::size_t>(std::floor(sentence_bleu / kHistogramWidth));
    return std::min(b, kHistogramBuckets - 1);
}

void aggregate(ExperimentReport& report, const BleuConfig& bleu, double tie_epsilon)
{
    report.summaries.clear();
    report.cells.clear();
    report.interference.clear();
    report.histograms.clear();

    std::vector<std::string> conditions;
    std::unordered_map<std::string, std::vector<const ReportRow*>> by_condition;
    for (const auto& r : report.rows) {
        bucket_for(conditions, by_condition, r.condition).push_back(&r);
    }

    for (const auto& c : conditions) {
        const auto& rows = by_condition[c];
        ConditionSummary s;
        s.condition = c;
        s.strategy = rows.front()->strategy;
        s.rows = rows.size();

        std::vector<std::uint64_t> seeds;
        std::unordered_map<std::uint64_t, std::vector<const ReportRow*>> by_seed;
        for (const auto* r : rows) {
            bucket_for(seeds, by_seed, r->seed).push_back(r);
        }
        s.seeds = seeds.size();
        std::vector<double> seed_bleu;
        for (const auto seed : seeds) {
            std::vector<std::string> docs;
            std::unordered_map<std::string, std::vector<const ReportRow*>> by_doc;
            for (const auto* r : by_seed[seed]) {
                bucket_for(docs, by_doc, r->doc_id).push_back(r);
            }
            std::vector<DocumentTranslations> translations;
            for (const auto& d : docs) {
                auto& t = translations.emplace_back();
                for (const auto* r : by_doc[d]) {
                    t.hypotheses.push_back(r->hypothesis);
                    t.references.push_back(r->reference);
                }
            }
            seed_bleu.push_back(document_bleu_average(translations, bleu));
        }
        const auto bs = mean_std(seed_bleu);
        s.bleu_mean = bs.mean;
        s.bleu_std = bs.std;

        s.coverage = *doc_average(rows, [](const ReportRow& r) { return std::optional<double>(r.coverage); });
        s.l2 = doc_average(rows, [](const ReportRow& r) { return r.l2; });
        s.perplexity = doc_average(rows, [](const ReportRow& r) { return r.perplexity; });

        std::vector<double> ppl;
        std::vector<double> sb;
        double budget = 0.0;
        double prompts = 0.0;
        for (const auto* r : rows) {
            if (r->perplexity) {
                ppl.push_back(*r->perplexity);
                sb.push_back(r->sentence_bleu);
            }
            budget += static_cast<double>(r->budget_used);
            prompts += static_cast<double>(r->num_prompts);
        }
        if (ppl.size() >= 2) {
            try {
                s.perplexity_bleu_r = pearson_r(ppl, sb);
            } catch (const ConfigError&) {
                s.perplexity_bleu_r.reset();
            }
        }
        s.mean_budget = budget / static_cast<double>(rows.size());
        s.mean_prompts = prompts / static_cast<double>(rows.size());
        report.summaries.push_back(std::move(s));

        Histogram h{c, std::vector<std::size_t>(kHistogramBuckets, 0)};
        for (const auto* r : rows) {
            ++h.counts[histogram_bucket(r->sentence_bleu)];
        }
        report.histograms.push_back(std::move(h));
    }

    std::map<std::pair<std::string, std::string>, std::vector<const ReportRow*>> by_cell;
    for (const auto& r : report.rows) {
        if (!r.prompt_domain.empty() && !r.test_domain.empty()) {
            by_cell[{r.prompt_domain, r.test_domain}].push_back(&r);
        }
    }
    for (const auto& [key, rows] : by_cell) {
        std::vector<std::uint64_t> seeds;
        std::unordered_map<std::uint64_t, std::vector<const ReportRow*>> by_seed;
        for (const auto* r : rows) {
            bucket_for(seeds, by_seed, r->seed).push_back(r);
        }
        CrosstableCell cell{key.first, key.second, 0.0, 0.0, {}};
        for (const auto seed : seeds) {
            std::vector<std::string> hyps;
            std::vector<std::string> refs;
            for (const auto* r : by_seed[seed]) {
                hyps.push_back(r->hypothesis);
                refs.push_back(r->reference);
            }
            cell.per_seed.push_back(corpus_bleu(hyps, refs, bleu));
        }
        const auto ms = mean_std(cell.per_seed);
        cell.mean = ms.mean;
        cell.std = ms.std;
        report.cells.push_back(std::move(cell));
    }

    if (by_condition.count(std::string(kZeroShotCondition))) {
        std::map<std::pair<std::string, std::uint64_t>, double> zero;
        for (const auto* r : by_condition[std::string(kZeroShotCondition)]) {
            zero.emplace(std::pair{r->test_id, r->seed}, r->sentence_bleu);
        }
        for (const auto& c : conditions) {
            if (c == kZeroShotCondition) {
                continue;
            }
            std::vector<double> z;
            std::vector<double> p;
            for (const auto* r : by_condition[c]) {
                if (const auto it = zero.find({r->test_id, r->seed}); it != zero.end()) {
                    z.push_back(it->second);
                    p.push_back(r->sentence_bleu);
                }
            }
            if (!z.empty()) {
                report.interference.push_back(
                    {c, std::string(kZeroShotCondition), z.size(), icmt::interference(z, p, tie_epsilon)});
            }
        }
    }
}

ReportFormat parse_report_format(std::string_view name)
{
    const auto n = text::to_lower(name);
    if (n == "jsonl" || n == "json") {
        return ReportFormat::Jsonl;
    }
    if (n == "csv") {
        return ReportFormat::Csv;
    }
    if (n == "md" || n == "markdown") {
        return ReportFormat::Markdown;
    }
    throw ConfigError("unknown report format '" + std::string(name) + "' (expected jsonl, csv or md)");
}

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); }

ordered_json row_json(const ReportRow& r)
{
    ordered_json j;
    j["type"] = "row";
    j["condition"] = r.condition;
    j["strategy"] = r.strategy;
    j["prompt_domain"] = r.prompt_domain;
    j["test_domain"] = r.test_domain;
    j["doc_id"] = r.doc_id;
    j["test_id"] = r.test_id;
    j["seed"] = r.seed;
    j["prompt_hash"] = r.prompt_hash;
    j["hypothesis"] = r.hypothesis;
    j["reference"] = r.reference;
    j["sentence_bleu"] = r.sentence_bleu;
    j["coverage"] = r.coverage;
    j["l2"] = opt(r.l2);
    j["perplexity"] = opt(r.perplexity);
    j["num_prompts"] = r.num_prompts;
    j["budget_used"] = r.budget_used;
    j["prompt_ids"] = r.prompt_ids;
    return j;
}

ordered_json summary_json(const ConditionSummary& s)
{
    ordered_json j;
    j["type"] = "summary";
    j["condition"] = s.condition;
    j["strategy"] = s.strategy;
    j["rows"] = s.rows;
    j["seeds"] = s.seeds;
    j["bleu_mean"] = s.bleu_mean;
    j["bleu_std"] = s.bleu_std;
    j["coverage"] = s.coverage;
    j["l2"] = opt(s.l2);
    j["perplexity"] = opt(s.perplexity);
    j["perplexity_bleu_r"] = opt(s.perplexity_bleu_r);
    j["mean_budget"] = s.mean_budget;
    j["mean_prompts"] = s.mean_prompts;
    return j;
}

ordered_json cell_json(const CrosstableCell& c)
{
    ordered_json j;
    j["type"] = "cell";
    j["prompt_domain"] = c.prompt_domain;
    j["test_domain"] = c.test_domain;
    j["mean"] = c.mean;
    j["std"] = c.std;
    j["per_seed"] = c.per_seed;
    return j;
}

ordered_json interference_json(const InterferenceSummary& s)
{
    ordered_json j;
    j["type"] = "interference";
    j["condition"] = s.condition;
    j["baseline"] = s.baseline;
    j["pairs"] = s.pairs;
    j["positive"] = s.report.positive;
    j["negative"] = s.report.negative;
    j["no_change"] = s.report.no_change;
    return j;
}

ordered_json histogram_json(const Histogram& h)
{
    ordered_json j;
    j["type"] = "histogram";
    j["condition"] = h.condition;
    j["width"] = kHistogramWidth;
    j["counts"] = h.counts;
    return j;
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fixed(const std::optional<double>& v, int digits, std::string_view missing = "")
{
    return v ? fixed(*v, digits) : std::string(missing);
}

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string md_cell(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n') {
            out += ' ';
        } else {
            out += c;
        }
    }
    return out;
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

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw ConfigError("write failed for " + path.string());
    }
}

} // namespace

std::string render_jsonl(const ExperimentReport& report)
{
    std::string out;
    ordered_json m;
    m["type"] = "manifest";
    m["experiment"] = report.experiment;
    m["manifest"] = ordered_json::object();
    for (const auto& [k, v] : report.manifest) {
        m["manifest"][k] = v;
    }
    out += m.dump() + '\n';
    for (const auto& r : report.rows) {
        out += row_json(r).dump() + '\n';
    }
    for (const auto& s : report.summaries) {
        out += summary_json(s).dump() + '\n';
    }
    for (const auto& c : report.cells) {
        out += cell_json(c).dump() + '\n';
    }
    for (const auto& i : report.interference) {
        out += interference_json(i).dump() + '\n';
    }
    for (const auto& h : report.histograms) {
        out += histogram_json(h).dump() + '\n';
    }
    return out;
}

std::map<std::string, std::string> render_csv(const ExperimentReport& report)
{
    std::map<std::string, std::string> out;

    std::string rows = "condition,strategy,prompt_domain,test_domain,doc_id,test_id,seed,sentence_bleu,"
                       "coverage,l2,perplexity,num_prompts,budget_used,prompt_ids,hypothesis,reference\n";
    for (const auto& r : report.rows) {
        rows += join({csv_field(r.condition), csv_field(r.strategy), csv_field(r.prompt_domain),
                      csv_field(r.test_domain), csv_field(r.doc_id), csv_field(r.test_id),
                      std::to_string(r.seed), fixed(r.sentence_bleu, 4), fixed(r.coverage, 6),
                      fixed(r.l2, 6), fixed(r.perplexity, 6), std::to_string(r.num_prompts),
                      std::to_string(r.budget_used), csv_field(join(r.prompt_ids, ";")),
                      csv_field(r.hypothesis), csv_field(r.reference)},
                     ",") +
                '\n';
    }
    out["rows"] = std::move(rows);

    std::string summary = "condition,strategy,rows,seeds,bleu_mean,bleu_std,coverage,l2,perplexity,"
                          "perplexity_bleu_r,mean_budget,mean_prompts\n";
    for (const auto& s : report.summaries) {
        summary += join({csv_field(s.condition), csv_field(s.strategy), std::to_string(s.rows),
                         std::to_string(s.seeds), fixed(s.bleu_mean, 4), fixed(s.bleu_std, 4),
                         fixed(s.coverage, 6), fixed(s.l2, 6), fixed(s.perplexity, 6),
                         fixed(s.perplexity_bleu_r, 6), fixed(s.mean_budget, 4), fixed(s.mean_prompts, 4)},
                        ",") +
                   '\n';
    }
    out["summary"] = std::move(summary);

    std::string cells = "prompt_domain,test_domain,mean,std,seeds\n";
    for (const auto& c : report.cells) {
        cells += join({csv_field(c.prompt_domain), csv_field(c.test_domain), fixed(c.mean, 4),
                       fixed(c.std, 4), std::to_string(c.per_seed.size())},
                      ",") +
                 '\n';
    }
    out["crosstable"] = std::move(cells);

    std::string inter = "condition,baseline,pairs,positive,negative,no_change\n";
    for (const auto& i : report.interference) {
        inter += join({csv_field(i.condition), csv_field(i.baseline), std::to_string(i.pairs),
                       fixed(i.report.positive, 6), fixed(i.report.negative, 6), fixed(i.report.no_change, 6)},
                      ",") +
                 '\n';
    }
    out["interference"] = std::move(inter);

    std::string hist = "condition,bucket_lo,bucket_hi,count\n";
    for (const auto& h : report.histograms) {
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            hist += join({csv_field(h.condition), fixed(kHistogramWidth * static_cast<double>(b), 0),
                          fixed(kHistogramWidth * static_cast<double>(b + 1), 0), std::to_string(h.counts[b])},
                         ",") +
                    '\n';
        }
    }
    out["histogram"] = std::move(hist);
    return out;
}

std::string render_markdown(const ExperimentReport& report)
{
    std::ostringstream md;
    md << "# " << (report.experiment.empty() ? "experiment" : report.experiment) << "\n\n";

    md << "## Strategies\n\n"
       << "| Condition | Strategy | Doc BLEU | Std | Coverage | L2 | PPL | Budget | Prompts | Rows |\n"
       << "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& s : report.summaries) {
        md << "| " << md_cell(s.condition) << " | " << md_cell(s.strategy) << " | " << fixed(s.bleu_mean, 2)
           << " | " << fixed(s.bleu_std, 2) << " | " << fixed(s.coverage, 2) << " | " << fixed(s.l2, 2, "-")
           << " | " << fixed(s.perplexity, 2, "-") << " | " << fixed(s.mean_budget, 1) << " | "
           << fixed(s.mean_prompts, 1) << " | " << s.rows << " |\n";
    }

    std::vector<std::string> prompt_domains;
    std::vector<std::string> test_domains;
    std::map<std::pair<std::string, std::string>, const CrosstableCell*> grid;
    for (const auto& c : report.cells) {
        if (std::find(prompt_domains.begin(), prompt_domains.end(), c.prompt_domain) == prompt_domains.end()) {
            prompt_domains.push_back(c.prompt_domain);
        }
        if (std::find(test_domains.begin(), test_domains.end(), c.test_domain) == test_domains.end()) {
            test_domains.push_back(c.test_domain);
        }
        grid[{c.prompt_domain, c.test_domain}] = &c;
    }
    std::sort(prompt_domains.begin(), prompt_domains.end());
    std::sort(test_domains.begin(), test_domains.end());
    md << "\n## Crosstable\n\nBLEU, mean (std) over seeds. Rows: prompt domain. Columns: test domain.\n\n"
       << "| Prompt \\ Test |";
    for (const auto& t : test_domains) {
        md << ' ' << md_cell(t) << " |";
    }
    md << "\n|---|";
    for (std::size_t i = 0; i < test_domains.size(); ++i) {
        md << "---:|";
    }
    md << '\n';
    for (const auto& p : prompt_domains) {
        md << "| " << md_cell(p) << " |";
        for (const auto& t : test_domains) {
            const auto it = grid.find({p, t});
            if (it == grid.end()) {
                md << " - |";
            } else {
                md << ' ' << fixed(it->second->mean, 2) << " (" << fixed(it->second->std, 2) << ") |";
            }
        }
        md << '\n';
    }

    md << "\n## Interference\n\n"
       << "| Condition | Baseline | Positive | Negative | No change | Pairs |\n"
       << "|---|---|---:|---:|---:|---:|\n";
    for (const auto& i : report.interference) {
        md << "| " << md_cell(i.condition) << " | " << md_cell(i.baseline) << " | "
           << fixed(i.report.positive, 2) << " | " << fixed(i.report.negative, 2) << " | "
           << fixed(i.report.no_change, 2) << " | " << i.pairs << " |\n";
    }
    return md.str();
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& path, ReportFormat format)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    switch (format) {
    case ReportFormat::Jsonl:
        write_file(path, render_jsonl(report));
        return {path};
    case ReportFormat::Markdown:
        write_file(path, render_markdown(report));
        return {path};
    case ReportFormat::Csv: {
        std::vector<std::filesystem::path> written;
        const auto stem = path.parent_path() / path.stem();
        for (const auto& [name, content] : render_csv(report)) {
            auto p = stem;
            p += "." + name + ".csv";
            write_file(p, content);
            written.push_back(p);
        }
        return written;
    }
    }
    return {};
}

namespace {

std::optional<double> get_opt(const nlohmann::json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->get<double>();
}

bool near(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(b)); }

bool near(const std::optional<double>& a, const std::optional<double>& b)
{
    return a.has_value() == b.has_value() && (!a || near(*a, *b));
}

bool matches(const ConditionSummary& a, const ConditionSummary& b)
{
    return a.condition == b.condition && a.strategy == b.strategy && a.rows == b.rows && a.seeds == b.seeds &&
           near(a.bleu_mean, b.bleu_mean) && near(a.bleu_std, b.bleu_std) && near(a.coverage, b.coverage) &&
           near(a.l2, b.l2) && near(a.perplexity, b.perplexity) &&
           near(a.perplexity_bleu_r, b.perplexity_bleu_r) && near(a.mean_budget, b.mean_budget) &&
           near(a.mean_prompts, b.mean_prompts);
}

bool matches(const CrosstableCell& a, const CrosstableCell& b)
{
    if (a.prompt_domain != b.prompt_domain || a.test_domain != b.test_domain || !near(a.mean, b.mean) ||
        !near(a.std, b.std) || a.per_seed.size() != b.per_seed.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.per_seed.size(); ++i) {
        if (!near(a.per_seed[i], b.per_seed[i])) {
            return false;
        }
    }
    return true;
}

bool matches(const InterferenceSummary& a, const InterferenceSummary& b)
{
    return a.condition == b.condition && a.baseline == b.baseline && a.pairs == b.pairs &&
           near(a.report.positive, b.report.positive) && near(a.report.negative, b.report.negative) &&
           near(a.report.no_change, b.report.no_change);
}

bool matches(const Histogram& a, const Histogram& b) { return a == b; }

template <typename T>
void verify(const std::vector<T>& stored, const std::vector<T>& recomputed, const char* what)
{
    if (stored.size() != recomputed.size()) {
        throw ParseError(std::string("report has ") + std::to_string(stored.size()) + " " + what +
                             " aggregates, rows give " + std::to_string(recomputed.size()),
                         0);
    }
    for (std::size_t i = 0; i < stored.size(); ++i) {
        if (!matches(stored[i], recomputed[i])) {
            throw ParseError(std::string(what) + " aggregate " + std::to_string(i) +
                                 " does not match the value recomputed from rows",
                             0);
        }
    }
}

} // namespace

ExperimentReport parse_report_jsonl(std::string_view text)
{
    ExperimentReport report;
    ExperimentReport stored;
    bool have_manifest = false;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (type == "manifest") {
                report.experiment = j.at("experiment").get<std::string>();
                for (const auto& [k, v] : j.at("manifest").items()) {
                    report.manifest[k] = v.get<std::string>();
                }
                have_manifest = true;
            } else if (type == "row") {
                ReportRow r;
                r.condition = j.at("condition").get<std::string>();
                r.strategy = j.at("strategy").get<std::string>();
                r.prompt_domain = j.at("prompt_domain").get<std::string>();
                r.test_domain = j.at("test_domain").get<std::string>();
                r.doc_id = j.at("doc_id").get<std::string>();
                r.test_id = j.at("test_id").get<std::string>();
                r.seed = j.at("seed").get<std::uint64_t>();
                r.prompt_hash = j.at("prompt_hash").get<std::string>();
                r.hypothesis = j.at("hypothesis").get<std::string>();
                r.reference = j.at("reference").get<std::string>();
                r.sentence_bleu = j.at("sentence_bleu").get<double>();
                r.coverage = j.at("coverage").get<double>();
                r.l2 = get_opt(j, "l2");
                r.perplexity = get_opt(j, "perplexity");
                r.num_prompts = j.at("num_prompts").get<std::size_t>();
                r.budget_used = j.at("budget_used").get<std::size_t>();
                r.prompt_ids = j.at("prompt_ids").get<std::vector<std::string>>();
                report.rows.push_back(std::move(r));
            } else if (type == "summary") {
                ConditionSummary s;
                s.condition = j.at("condition").get<std::string>();
                s.strategy = j.at("strategy").get<std::string>();
                s.rows = j.at("rows").get<std::size_t>();
                s.seeds = j.at("seeds").get<std::size_t>();
                s.bleu_mean = j.at("bleu_mean").get<double>();
                s.bleu_std = j.at("bleu_std").get<double>();
                s.coverage = j.at("coverage").get<double>();
                s.l2 = get_opt(j, "l2");
                s.perplexity = get_opt(j, "perplexity");
                s.perplexity_bleu_r = get_opt(j, "perplexity_bleu_r");
                s.mean_budget = j.at("mean_budget").get<double>();
                s.mean_prompts = j.at("mean_prompts").get<double>();
                stored.summaries.push_back(std::move(s));
            } else if (type == "cell") {
                stored.cells.push_back({j.at("prompt_domain").get<std::string>(),
                                        j.at("test_domain").get<std::string>(), j.at("mean").get<double>(),
                                        j.at("std").get<double>(), j.at("per_seed").get<std::vector<double>>()});
            } else if (type == "interference") {
                stored.interference.push_back(
                    {j.at("condition").get<std::string>(), j.at("baseline").get<std::string>(),
                     j.at("pairs").get<std::size_t>(),
                     {j.at("positive").get<double>(), j.at("negative").get<double>(),
                      j.at("no_change").get<double>()}});
            } else if (type == "histogram") {
                stored.histograms.push_back(
                    {j.at("condition").get<std::string>(), j.at("counts").get<std::vector<std::size_t>>()});
            } else {
                throw ParseError("unknown report line type '" + type + "'", line_no);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad report line: ") + e.what(), line_no);
        }
    }
    if (!have_manifest) {
        throw ParseError("report has no manifest line", 0);
    }

    double tie_epsilon = kDefaultTieEpsilon;
    if (const auto it = report.manifest.find("tie_epsilon"); it != report.manifest.end()) {
        tie_epsilon = std::stod(it->second);
    }
    aggregate(report, BleuConfig{}, tie_epsilon);
    verify(stored.summaries, report.summaries, "summary");
    verify(stored.cells, report.cells, "crosstable");
    verify(stored.interference, report.interference, "interference");
    verify(stored.histograms, report.histograms, "histogram");
    return report;
}

ExperimentReport load_report(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open report " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_report_jsonl(ss.str());
}

} // namespace icmt
