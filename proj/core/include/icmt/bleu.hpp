#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace icmt {

enum class BleuSmoothing { None, Exp };

/// Defaults reproduce the signature
/// "nrefs:1 | case:lower | eff:no | tok:13a | smooth:exp".
struct BleuConfig {
    bool lowercase = true;
    std::size_t max_ngram = 4;
    bool effective_order = false;
    BleuSmoothing smoothing = BleuSmoothing::Exp;

    std::string signature() const;
};

/// Sufficient statistics of one or more segments.
struct BleuStats {
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    std::vector<std::size_t> correct;
    std::vector<std::size_t> total;

    BleuStats& operator+=(const BleuStats& other);
};

struct BleuScore {
    double score = 0.0;
    std::vector<double> precisions;
    double brevity_penalty = 0.0;
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
};

/// Lowercasing (optional), trailing-whitespace strip and 13a tokenization.
std::vector<std::string> bleu_tokens(std::string_view segment, const BleuConfig& cfg);

BleuStats segment_stats(std::string_view hypothesis, std::string_view reference,
                        const BleuConfig& cfg = {});

BleuScore compute_bleu(const BleuStats& stats, const BleuConfig& cfg = {});

/// Corpus BLEU in [0, 100]. Throws ConfigError on a length mismatch or an
/// empty corpus.
double corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                   const BleuConfig& cfg = {});

double sentence_bleu(std::string_view hypothesis, std::string_view reference,
                     const BleuConfig& cfg = {});

struct DocumentTranslations {
    std::vector<std::string> hypotheses;
    std::vector<std::string> references;
};

/// Arithmetic mean of per-document corpus BLEU. Throws ConfigError on an
/// empty list.
double document_bleu_average(std::span<const DocumentTranslations> documents,
                             const BleuConfig& cfg = {});

} // namespace icmt
