#include "icmt/bleu.hpp"

#include "icmt/error.hpp"
#include "icmt/text.hpp"

#include <cmath>
#include <map>
#include <string>

namespace icmt {

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t max_n)
{
    NgramCounts counts;
    for (std::size_t n = 1; n <= max_n; ++n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                               tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
            ++counts[std::move(gram)];
        }
    }
    return counts;
}

// log() floored the same way sacreBLEU's my_log does.
double floored_log(double x)
{
    return x > 0.0 ? std::log(x) : -9999999999.0;
}

} // namespace

std::string BleuConfig::signature() const
{
    return std::string("nrefs:1|case:") + (lowercase ? "lc" : "mixed") +
           "|eff:" + (effective_order ? "yes" : "no") + "|tok:13a|smooth:" +
           (smoothing == BleuSmoothing::Exp ? "exp" : "none") + "|version:2.0.0";
}

BleuStats& BleuStats::operator+=(const BleuStats& other)
{
    hyp_len += other.hyp_len;
    ref_len += other.ref_len;
    if (correct.size() < other.correct.size()) {
        correct.resize(other.correct.size(), 0);
        total.resize(other.total.size(), 0);
    }
    for (std::size_t i = 0; i < other.correct.size(); ++i) {
        correct[i] += other.correct[i];
        total[i] += other.total[i];
    }
    return *this;
}

std::vector<std::string> bleu_tokens(std::string_view segment, const BleuConfig& cfg)
{
    if (cfg.lowercase) {
        const auto lowered = text::to_lower(segment);
        return text::tokenize_13a(text::rstrip(lowered)).tokens;
    }
    return text::tokenize_13a(text::rstrip(segment)).tokens;
}

BleuStats segment_stats(std::string_view hypothesis, std::string_view reference, const BleuConfig& cfg)
{
    const auto hyp = bleu_tokens(hypothesis, cfg);
    const auto ref = bleu_tokens(reference, cfg);
    const auto hyp_counts = count_ngrams(hyp, cfg.max_ngram);
    const auto ref_counts = count_ngrams(ref, cfg.max_ngram);

    BleuStats stats;
    stats.hyp_len = hyp.size();
    stats.ref_len = ref.size();
    stats.correct.assign(cfg.max_ngram, 0);
    stats.total.assign(cfg.max_ngram, 0);
    for (const auto& [gram, count] : hyp_counts) {
        const auto n = gram.size() - 1;
        stats.total[n] += count;
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
            stats.correct[n] += std::min(count, it->second);
        }
    }
    return stats;
}

BleuScore compute_bleu(const BleuStats& stats, const BleuConfig& cfg)
{
    BleuScore out;
    out.hyp_len = stats.hyp_len;
    out.ref_len = stats.ref_len;
    if (stats.hyp_len < stats.ref_len) {
        out.brevity_penalty = stats.hyp_len > 0
                                  ? std::exp(1.0 - static_cast<double>(stats.ref_len) /
                                                       static_cast<double>(stats.hyp_len))
                                  : 0.0;
    } else {
        out.brevity_penalty = 1.0;
    }
    out.precisions.assign(cfg.max_ngram, 0.0);

    bool any_correct = false;
    for (const auto c : stats.correct) {
        any_correct = any_correct || c > 0;
    }
    if (!any_correct) {
        return out;
    }

    double smooth = 1.0;
    auto eff_order = cfg.max_ngram;
    for (std::size_t n = 1; n <= cfg.max_ngram; ++n) {
        const auto total = n - 1 < stats.total.size() ? stats.total[n - 1] : 0;
        const auto correct = n - 1 < stats.correct.size() ? stats.correct[n - 1] : 0;
        if (total == 0) {
            break;
        }
        if (cfg.effective_order) {
            eff_order = n;
        }
        if (correct == 0) {
            if (cfg.smoothing == BleuSmoothing::Exp) {
                smooth *= 2.0;
                out.precisions[n - 1] = 100.0 / (smooth * static_cast<double>(total));
            }
        } else {
            out.precisions[n - 1] = 100.0 * static_cast<double>(correct) / static_cast<double>(total);
        }
    }

    double log_sum = 0.0;
    for (std::size_t i = 0; i < eff_order; ++i) {
        log_sum += floored_log(out.precisions[i]);
    }
    out.score = out.brevity_penalty * std::exp(log_sum / static_cast<double>(eff_order));
    return out;
}

double corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                   const BleuConfig& cfg)
{
    if (hypotheses.size() != references.size()) {
        throw ConfigError("corpus_bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                          std::to_string(references.size()) + " references");
    }
    if (hypotheses.empty()) {
        throw ConfigError("corpus_bleu: empty corpus");
    }
    BleuStats total;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        total += segment_stats(hypotheses[i], references[i], cfg);
    }
    return compute_bleu(total, cfg).score;
}

double sentence_bleu(std::string_view hypothesis, std::string_view reference, const BleuConfig& cfg)
{
    return compute_bleu(segment_stats(hypothesis, reference, cfg), cfg).score;
}

double document_bleu_average(std::span<const DocumentTranslations> documents, const BleuConfig& cfg)
{
    if (documents.empty()) {
        throw ConfigError("document_bleu_average: no documents");
    }
    double sum = 0.0;
    for (const auto& doc : documents) {
        sum += corpus_bleu(doc.hypotheses, doc.references, cfg);
    }
    return sum / static_cast<double>(documents.size());
}

} // namespace icmt
