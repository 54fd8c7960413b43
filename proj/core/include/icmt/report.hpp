#pragma once

#include "icmt/bleu.hpp"
#include "icmt/metrics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace icmt {

/// Library version, also written into run manifests.
std::string_view version() noexcept;

/// One (condition, seed, test sentence) evaluation.
struct ReportRow {
    std::string condition;
    std::string strategy;
    std::string prompt_domain;
    std::string test_domain;
    std::string doc_id;
    std::string test_id;
    std::uint64_t seed = 0;
    std::string prompt_hash;
    std::string hypothesis;
    std::string reference;
    double sentence_bleu = 0.0;
    double coverage = 0.0;
    std::optional<double> l2;
    std::optional<double> perplexity;
    std::size_t num_prompts = 0;
    std::size_t budget_used = 0;
    std::vector<std::string> prompt_ids;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Per-condition aggregate. BLEU is the document-level average (mean of
/// per-document corpus BLEU) computed per seed, then mean and population std
/// over seeds. Coverage, L2 and perplexity are averaged per sentence, then per
/// document, then across documents.
struct ConditionSummary {
    std::string condition;
    std::string strategy;
    std::size_t rows = 0;
    std::size_t seeds = 0;
    double bleu_mean = 0.0;
    double bleu_std = 0.0;
    double coverage = 0.0;
    std::optional<double> l2;
    std::optional<double> perplexity;
    /// Pearson r between perplexity and sentence BLEU over the rows.
    std::optional<double> perplexity_bleu_r;
    double mean_budget = 0.0;
    double mean_prompts = 0.0;

    friend bool operator==(const ConditionSummary&, const ConditionSummary&) = default;
};

/// Corpus BLEU of one (prompt domain, test domain) pair: mean and population
/// std over seeds.
struct CrosstableCell {
    std::string prompt_domain;
    std::string test_domain;
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> per_seed;

    friend bool operator==(const CrosstableCell&, const CrosstableCell&) = default;
};

/// Sentence-level comparison of a condition against the zero-shot rows with
/// the same test id and seed.
struct InterferenceSummary {
    std::string condition;
    std::string baseline;
    std::size_t pairs = 0;
    InterferenceReport report;

    friend bool operator==(const InterferenceSummary& a, const InterferenceSummary& b)
    {
        return a.condition == b.condition && a.baseline == b.baseline && a.pairs == b.pairs &&
               a.report.positive == b.report.positive && a.report.negative == b.report.negative &&
               a.report.no_change == b.report.no_change;
    }
};

inline constexpr double kHistogramWidth = 5.0;
inline constexpr std::size_t kHistogramBuckets = 20;

/// Sentence-BLEU counts per bucket [5i, 5i+5); 100 falls into the last bucket.
struct Histogram {
    std::string condition;
    std::vector<std::size_t> counts;

    friend bool operator==(const Histogram&, const Histogram&) = default;
};

struct ExperimentReport {
    std::string experiment;
    /// Config echo, data checksums and versions. No timestamps.
    std::map<std::string, std::string> manifest;
    std::vector<ReportRow> rows;

    std::vector<ConditionSummary> summaries;
    std::vector<CrosstableCell> cells;
    std::vector<InterferenceSummary> interference;
    std::vector<Histogram> histograms;
};

inline constexpr std::string_view kZeroShotCondition = "zeroshot";

/// Recomputes every aggregate from the rows. Conditions keep their first
/// appearance order; crosstable cells are filled when rows carry both domains.
void aggregate(ExperimentReport& report, const BleuConfig& bleu = {},
               double tie_epsilon = kDefaultTieEpsilon);

std::size_t histogram_bucket(double sentence_bleu) noexcept;

enum class ReportFormat { Jsonl, Csv, Markdown };

ReportFormat parse_report_format(std::string_view name);

/// JSONL: a manifest line, one line per row, then one line per aggregate.
std::string render_jsonl(const ExperimentReport& report);
/// CSV tables keyed by name: rows, summary, crosstable, interference, histogram.
std::map<std::string, std::string> render_csv(const ExperimentReport& report);
/// Strategy table, crosstable (prompt domain rows x test domain columns,
/// "mean (std)") and interference table.
std::string render_markdown(const ExperimentReport& report);

/// Writes the report. JSONL and Markdown go to `path`; CSV writes one file per
/// table next to it, named `<stem>.<table>.csv`. Returns the files written.
/// Throws ConfigError when a file cannot be written.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& path, ReportFormat format);

/// Parses a JSONL report, recomputes the aggregates from its rows and throws
/// ParseError if any stored aggregate disagrees.
ExperimentReport load_report(const std::filesystem::path& path);
ExperimentReport parse_report_jsonl(std::string_view text);

} // namespace icmt
