#include "helpers.hpp"

#include "icmt/bleu.hpp"
#include "icmt/error.hpp"
#include "icmt/report.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace icmt;

namespace {

ReportRow row(std::string condition, std::string doc, std::string test_id, std::uint64_t seed, std::string hyp,
              std::string ref)
{
    ReportRow r;
    r.condition = condition;
    r.strategy = condition;
    r.doc_id = std::move(doc);
    r.test_id = std::move(test_id);
    r.seed = seed;
    r.prompt_hash = std::string(64, 'a');
    r.hypothesis = std::move(hyp);
    r.reference = std::move(ref);
    r.sentence_bleu = sentence_bleu(r.hypothesis, r.reference);
    r.coverage = 0.5;
    r.num_prompts = 2;
    r.budget_used = 10;
    r.prompt_ids = {"x", "y"};
    return r;
}

const std::vector<std::string> kRefs{
    "the quick brown fox jumps over the lazy dog", "she sells sea shells by the sea shore",
    "a journey of a thousand miles begins with a single step", "all that glitters is not gold at all"};
const std::vector<std::string> kHyps{
    "the quick brown fox jumped over a lazy dog", "she sells shells by the sea shore today",
    "a journey of thousand miles starts with one step", "all that glitters is gold"};

/// Two documents of two lines, three seeds, two conditions.
ExperimentReport sample()
{
    ExperimentReport rep;
    rep.experiment = "doclevel";
    rep.manifest = {{"k", "2"}, {"tie_epsilon", "0.0001"}};
    for (std::uint64_t seed : {1, 2, 3}) {
        for (std::size_t i = 0; i < 4; ++i) {
            const auto doc = i < 2 ? "d1" : "d2";
            const auto id = std::string(doc) + ":" + std::to_string(i);
            rep.rows.push_back(row("zeroshot", doc, id, seed, seed == 1 ? kHyps[i] : kRefs[(i + 1) % 4], kRefs[i]));
            auto r = row("window", doc, id, seed, seed == 3 ? kRefs[i] : kHyps[i], kRefs[i]);
            r.coverage = 0.25 * static_cast<double>(i);
            r.perplexity = 2.0 + static_cast<double>(i) + static_cast<double>(seed);
            rep.rows.push_back(r);
        }
    }
    aggregate(rep);
    return rep;
}

double doc_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs)
{
    const std::vector<DocumentTranslations> docs{{{hyps[0], hyps[1]}, {refs[0], refs[1]}},
                                                 {{hyps[2], hyps[3]}, {refs[2], refs[3]}}};
    return document_bleu_average(docs);
}

} // namespace

TEST_SUITE("report")
{
    TEST_CASE("format names")
    {
        CHECK(parse_report_format("jsonl") == ReportFormat::Jsonl);
        CHECK(parse_report_format("CSV") == ReportFormat::Csv);
        CHECK(parse_report_format("md") == ReportFormat::Markdown);
        CHECK_THROWS_AS(parse_report_format("xml"), ConfigError);
        CHECK(!version().empty());
    }

    TEST_CASE("histogram buckets")
    {
        CHECK(histogram_bucket(0.0) == 0);
        CHECK(histogram_bucket(4.999) == 0);
        CHECK(histogram_bucket(5.0) == 1);
        CHECK(histogram_bucket(99.99) == 19);
        CHECK(histogram_bucket(100.0) == 19);
    }

    TEST_CASE("summaries follow the document then seed averaging")
    {
        const auto rep = sample();
        REQUIRE(rep.summaries.size() == 2);
        const auto& w = rep.summaries[1];
        CHECK(w.condition == "window");
        CHECK(w.rows == 12);
        CHECK(w.seeds == 3);
        const double b12 = doc_bleu(kHyps, kRefs);
        const double b3 = doc_bleu(kRefs, kRefs);
        const double mean = (2 * b12 + b3) / 3;
        const double sd = std::sqrt((2 * (b12 - mean) * (b12 - mean) + (b3 - mean) * (b3 - mean)) / 3);
        CHECK(w.bleu_mean == doctest::Approx(mean));
        CHECK(w.bleu_std == doctest::Approx(sd));
        // d1 lines carry 0 and 0.25, d2 lines 0.5 and 0.75.
        CHECK(w.coverage == doctest::Approx(0.375));
        // Perplexity per document: d1 mean over seeds of (2.5 + seed), d2 (4.5 + seed).
        CHECK(*w.perplexity == doctest::Approx(5.5));
        CHECK(w.perplexity_bleu_r.has_value());
        CHECK(!rep.summaries[0].perplexity.has_value());
        CHECK(w.mean_budget == 10.0);
        CHECK(w.mean_prompts == 2.0);
    }

    TEST_CASE("histograms count every row")
    {
        const auto rep = sample();
        for (const auto& h : rep.histograms) {
            std::size_t total = 0;
            for (auto c : h.counts) {
                total += c;
            }
            CHECK(total == 12);
            CHECK(h.counts.size() == kHistogramBuckets);
        }
    }

    TEST_CASE("interference against zero-shot")
    {
        const auto rep = sample();
        REQUIRE(rep.interference.size() == 1);
        const auto& s = rep.interference[0];
        CHECK(s.condition == "window");
        CHECK(s.pairs == 12);
        std::vector<double> z;
        std::vector<double> p;
        for (std::size_t i = 0; i < rep.rows.size(); i += 2) {
            z.push_back(rep.rows[i].sentence_bleu);
            p.push_back(rep.rows[i + 1].sentence_bleu);
        }
        const auto expected = interference(z, p);
        CHECK(s.report.positive == expected.positive);
        CHECK(s.report.negative == expected.negative);
        CHECK(s.report.positive + s.report.negative + s.report.no_change == doctest::Approx(1.0));
    }

    TEST_CASE("crosstable cells hold corpus BLEU")
    {
        ExperimentReport rep;
        rep.experiment = "crosstable";
        for (std::uint64_t seed : {1, 2}) {
            for (std::size_t i = 0; i < 4; ++i) {
                auto r = row("MED->TED", "nodoc", "t" + std::to_string(i), seed, seed == 1 ? kHyps[i] : kRefs[i], kRefs[i]);
                r.prompt_domain = "MED";
                r.test_domain = "TED";
                rep.rows.push_back(r);
            }
        }
        aggregate(rep);
        REQUIRE(rep.cells.size() == 1);
        const double b1 = corpus_bleu(kHyps, kRefs);
        CHECK(rep.cells[0].per_seed[0] == doctest::Approx(b1));
        CHECK(rep.cells[0].per_seed[1] == doctest::Approx(100.0));
        CHECK(rep.cells[0].mean == doctest::Approx((b1 + 100.0) / 2));
        CHECK(rep.cells[0].std == doctest::Approx((100.0 - b1) / 2));
        const auto md = render_markdown(rep);
        CHECK(md.find("## Crosstable") != std::string::npos);
        CHECK(md.find("MED") != std::string::npos);
    }

    TEST_CASE("rendering is deterministic")
    {
        const auto a = sample();
        const auto b = sample();
        CHECK(render_jsonl(a) == render_jsonl(b));
        CHECK(render_csv(a) == render_csv(b));
        CHECK(render_markdown(a) == render_markdown(b));
        CHECK(render_markdown(a).find("## Strategies") != std::string::npos);
        CHECK(render_markdown(a).find("## Interference") != std::string::npos);
    }

    TEST_CASE("empty report renders headers only")
    {
        ExperimentReport rep;
        rep.experiment = "doclevel";
        aggregate(rep);
        const auto tables = render_csv(rep);
        for (const auto& name : {"rows", "summary", "crosstable", "interference", "histogram"}) {
            REQUIRE(tables.count(name));
            const auto& t = tables.at(name);
            CHECK(std::count(t.begin(), t.end(), '\n') == 1);
        }
        const auto parsed = parse_report_jsonl(render_jsonl(rep));
        CHECK(parsed.rows.empty());
    }

    TEST_CASE("JSONL round trip and tamper detection")
    {
        const auto rep = sample();
        const auto text = render_jsonl(rep);
        const auto back = parse_report_jsonl(text);
        CHECK(back.experiment == rep.experiment);
        CHECK(back.manifest == rep.manifest);
        CHECK(back.rows == rep.rows);
        CHECK(back.summaries == rep.summaries);
        CHECK(back.interference == rep.interference);
        CHECK(back.histograms == rep.histograms);

        // Change one stored summary value.
        auto tampered = text;
        const auto pos = tampered.find("\"bleu_mean\":");
        REQUIRE(pos != std::string::npos);
        tampered.insert(pos + 12, "1");
        CHECK_THROWS_AS(parse_report_jsonl(tampered), ParseError);

        // Change a hypothesis so the recomputed aggregate moves.
        auto edited = text;
        const auto h = edited.find(kHyps[0]);
        REQUIRE(h != std::string::npos);
        edited.replace(h, 3, "XYZ");
        CHECK_THROWS_AS(parse_report_jsonl(edited), ParseError);

        CHECK_THROWS_AS(parse_report_jsonl("{\"type\":\"row\"}\n"), ParseError);
        CHECK_THROWS_AS(parse_report_jsonl("{\"type\":\"mystery\"}\n"), ParseError);
        CHECK_THROWS_AS(parse_report_jsonl(""), ParseError);
    }

    TEST_CASE("emitting files")
    {
        const auto dir = testing::temp_dir("report_emit");
        const auto rep = sample();
        const auto jsonl = emit_report(rep, dir / "run.jsonl", ReportFormat::Jsonl);
        REQUIRE(jsonl.size() == 1);
        CHECK(load_report(jsonl[0]).rows == rep.rows);
        const auto csv = emit_report(rep, dir / "run", ReportFormat::Csv);
        CHECK(csv.size() == 5);
        CHECK(std::filesystem::exists(dir / "run.summary.csv"));
        std::ifstream in(dir / "run.rows.csv");
        std::size_t lines = 0;
        for (std::string l; std::getline(in, l);) {
            ++lines;
        }
        CHECK(lines == rep.rows.size() + 1);
        CHECK(emit_report(rep, dir / "run.md", ReportFormat::Markdown).size() == 1);
        CHECK(emit_report(rep, dir / "nested" / "x.jsonl", ReportFormat::Jsonl).size() == 1);
        testing::write_text(dir / "blocker", "");
        CHECK_THROWS_AS(emit_report(rep, dir / "blocker" / "x.jsonl", ReportFormat::Jsonl), ConfigError);
        CHECK_THROWS_AS(load_report(dir / "nothing.jsonl"), ConfigError);
    }
}
