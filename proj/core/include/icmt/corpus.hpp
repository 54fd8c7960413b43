#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icmt {

enum class DomainKind { Flores, Med, Mtnt, Ted, Other };

/// Domain an example was drawn from. `Other` carries a free-form name.
class Domain {
public:
    Domain() = default;
    explicit Domain(DomainKind kind, std::string other_name = {});

    /// Case-insensitive; unknown names become `Other(name)`.
    static Domain parse(std::string_view name);

    DomainKind kind() const noexcept { return kind_; }
    /// Canonical label: FLORES, MED, MTNT, TED or the custom name.
    std::string label() const;

    friend bool operator==(const Domain&, const Domain&) = default;

private:
    DomainKind kind_ = DomainKind::Other;
    std::string name_;
};

struct LangPair {
    std::string source = "en";
    std::string target = "fr";

    friend bool operator==(const LangPair&, const LangPair&) = default;
};

struct ParallelExample {
    std::string id;
    std::string doc_id;
    std::size_t position = 0;
    std::string source;
    std::string target;
    Domain domain;
    LangPair lang_pair;

    friend bool operator==(const ParallelExample&, const ParallelExample&) = default;
};

/// Builds the id used for examples that do not carry one: `<doc_id>:<position>`
/// with the position zero-padded to six digits so lexical order follows
/// document order.
std::string make_example_id(std::string_view doc_id, std::size_t position);

/// Immutable-after-construction collection of examples, indexed by id and by
/// (doc_id, position).
class CorpusBank {
public:
    CorpusBank() = default;
    explicit CorpusBank(std::vector<ParallelExample> examples);

    /// Throws ConfigError on duplicate id, duplicate (doc_id, position) or an
    /// example whose source/target is blank.
    void add(ParallelExample example);

    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }
    const ParallelExample& operator[](std::size_t row) const { return examples_[row]; }
    std::span<const ParallelExample> examples() const noexcept { return examples_; }

    std::optional<std::size_t> row_of(std::string_view id) const;
    std::optional<std::size_t> row_of(std::string_view doc_id, std::size_t position) const;
    /// Throws UnknownIdError.
    const ParallelExample& at(std::string_view id) const;
    const ParallelExample* find(std::string_view doc_id, std::size_t position) const;

    /// Document ids in first-appearance order.
    std::vector<std::string> doc_ids() const;
    /// Examples of one document ordered by position.
    CorpusBank document(std::string_view doc_id) const;
    /// Rows ordered by ascending id.
    const std::vector<std::size_t>& rows_by_id() const noexcept { return rows_by_id_; }

private:
    std::vector<ParallelExample> examples_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::map<std::pair<std::string, std::size_t>, std::size_t, std::less<>> by_doc_pos_;
    std::vector<std::size_t> rows_by_id_;
};

enum class CorpusFormat { Tsv, Jsonl };

/// TSV rows are `doc_id<TAB>source<TAB>target` or `source<TAB>target`
/// (doc_id "nodoc"). JSONL objects carry `source`, `target` and optionally
/// `doc_id` and `id`. Blank lines are skipped; positions follow file order
/// per doc_id.
CorpusBank load_parallel_corpus(const std::filesystem::path& path, CorpusFormat format,
                                const Domain& domain, const LangPair& lang_pair);

/// Guesses the format from the file extension (.jsonl / .json -> JSONL).
CorpusFormat format_from_extension(const std::filesystem::path& path);

struct DocumentSplit {
    /// Test documents keyed by doc_id, each truncated to the evaluation limit.
    /// A test document also serves as its own within-document prompt bank.
    std::map<std::string, CorpusBank> test_docs;
    CorpusBank outdoc_bank;
    /// Tail lines cut from test documents; they are not reused anywhere.
    std::size_t discarded_tail_lines = 0;

    const CorpusBank& within_doc_bank(const std::string& doc_id) const;
    std::size_t test_line_count() const;
};

/// Documents with at least `min_test_lines` lines become test documents
/// (truncated to `max_eval_lines`); shorter ones are pooled into the
/// out-of-document bank.
DocumentSplit partition_ted(const CorpusBank& bank, std::size_t min_test_lines = 100,
                            std::size_t max_eval_lines = 120);

/// Keeps examples whose source has between `min_words` and `max_words`
/// whitespace tokens, inclusive.
CorpusBank filter_by_source_length(const CorpusBank& bank, std::size_t min_words,
                                   std::size_t max_words);

} // namespace icmt
