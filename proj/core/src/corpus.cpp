#include "icmt/corpus.hpp"

#include "icmt/error.hpp"
#include "icmt/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

namespace icmt {

namespace {

std::string upper_ascii(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::vector<std::string_view> split_tabs(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

} // namespace

Domain::Domain(DomainKind kind, std::string other_name) : kind_(kind)
{
    if (kind_ == DomainKind::Other) {
        name_ = std::move(other_name);
    }
}

Domain Domain::parse(std::string_view name)
{
    const auto up = upper_ascii(name);
    if (up == "FLORES") {
        return Domain(DomainKind::Flores);
    }
    if (up == "MED") {
        return Domain(DomainKind::Med);
    }
    if (up == "MTNT") {
        return Domain(DomainKind::Mtnt);
    }
    if (up == "TED") {
        return Domain(DomainKind::Ted);
    }
    return Domain(DomainKind::Other, std::string(name));
}

std::string Domain::label() const
{
    switch (kind_) {
    case DomainKind::Flores: return "FLORES";
    case DomainKind::Med: return "MED";
    case DomainKind::Mtnt: return "MTNT";
    case DomainKind::Ted: return "TED";
    case DomainKind::Other: break;
    }
    return name_.empty() ? "OTHER" : name_;
}

std::string make_example_id(std::string_view doc_id, std::size_t position)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", position);
    std::string id(doc_id);
    id += ':';
    id += buf;
    return id;
}

CorpusBank::CorpusBank(std::vector<ParallelExample> examples)
{
    examples_.reserve(examples.size());
    for (auto& ex : examples) {
        add(std::move(ex));
    }
}

void CorpusBank::add(ParallelExample example)
{
    if (text::trim(example.source).empty() || text::trim(example.target).empty()) {
        throw ConfigError("example '" + example.id + "' has an empty source or target");
    }
    if (by_id_.count(example.id)) {
        throw ConfigError("duplicate example id '" + example.id + "'");
    }
    auto key = std::make_pair(example.doc_id, example.position);
    if (by_doc_pos_.count(key)) {
        throw ConfigError("duplicate position " + std::to_string(example.position) +
                          " in document '" + example.doc_id + "'");
    }
    const auto row = examples_.size();
    by_id_.emplace(example.id, row);
    by_doc_pos_.emplace(std::move(key), row);

    const auto pos = std::upper_bound(rows_by_id_.begin(), rows_by_id_.end(), example.id,
                                      [this](const std::string& id, std::size_t r) {
                                          return id < examples_[r].id;
                                      });
    examples_.push_back(std::move(example));
    rows_by_id_.insert(pos, row);
}

std::optional<std::size_t> CorpusBank::row_of(std::string_view id) const
{
    const auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> CorpusBank::row_of(std::string_view doc_id, std::size_t position) const
{
    const auto it = by_doc_pos_.find(std::make_pair(std::string(doc_id), position));
    if (it == by_doc_pos_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const ParallelExample& CorpusBank::at(std::string_view id) const
{
    const auto row = row_of(id);
    if (!row) {
        throw UnknownIdError("unknown example id '" + std::string(id) + "'");
    }
    return examples_[*row];
}

const ParallelExample* CorpusBank::find(std::string_view doc_id, std::size_t position) const
{
    const auto row = row_of(doc_id, position);
    return row ? &examples_[*row] : nullptr;
}

std::vector<std::string> CorpusBank::doc_ids() const
{
    std::vector<std::string> ids;
    std::unordered_map<std::string, bool> seen;
    for (const auto& ex : examples_) {
        if (seen.emplace(ex.doc_id, true).second) {
            ids.push_back(ex.doc_id);
        }
    }
    return ids;
}

CorpusBank CorpusBank::document(std::string_view doc_id) const
{
    CorpusBank doc;
    const std::string key(doc_id);
    for (auto it = by_doc_pos_.lower_bound(std::make_pair(key, std::size_t{0}));
         it != by_doc_pos_.end() && it->first.first == key; ++it) {
        doc.add(examples_[it->second]);
    }
    return doc;
}

CorpusFormat format_from_extension(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::Jsonl : CorpusFormat::Tsv;
}

CorpusBank load_parallel_corpus(const std::filesystem::path& path, CorpusFormat format,
                                const Domain& domain, const LangPair& lang_pair)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open corpus file " + path.string());
    }

    CorpusBank bank;
    std::unordered_map<std::string, std::size_t> next_position;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (text::trim(line).empty()) {
            continue;
        }

        ParallelExample ex;
        ex.domain = domain;
        ex.lang_pair = lang_pair;
        ex.doc_id = "nodoc";
        if (format == CorpusFormat::Tsv) {
            const auto fields = split_tabs(line);
            if (fields.size() == 3) {
                ex.doc_id = std::string(fields[0]);
                ex.source = std::string(fields[1]);
                ex.target = std::string(fields[2]);
            } else if (fields.size() == 2) {
                ex.source = std::string(fields[0]);
                ex.target = std::string(fields[1]);
            } else {
                throw ParseError("expected 2 or 3 tab-separated fields, got " +
                                     std::to_string(fields.size()) + " in " + path.string(),
                                 line_no);
            }
            if (ex.doc_id.empty()) {
                ex.doc_id = "nodoc";
            }
        } else {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("invalid JSON in ") + path.string() + ": " + e.what(),
                                 line_no);
            }
            if (!obj.is_object() || !obj.contains("source") || !obj.contains("target") ||
                !obj["source"].is_string() || !obj["target"].is_string()) {
                throw ParseError("JSONL row needs string fields 'source' and 'target' in " +
                                     path.string(),
                                 line_no);
            }
            ex.source = obj["source"].get<std::string>();
            ex.target = obj["target"].get<std::string>();
            if (obj.contains("doc_id") && obj["doc_id"].is_string() &&
                !obj["doc_id"].get<std::string>().empty()) {
                ex.doc_id = obj["doc_id"].get<std::string>();
            }
            if (obj.contains("id") && obj["id"].is_string()) {
                ex.id = obj["id"].get<std::string>();
            }
        }

        if (text::trim(ex.source).empty()) {
            throw ParseError("empty source in " + path.string(), line_no);
        }
        if (text::trim(ex.target).empty()) {
            throw ParseError("empty target in " + path.string(), line_no);
        }
        ex.position = next_position[ex.doc_id]++;
        if (ex.id.empty()) {
            ex.id = make_example_id(ex.doc_id, ex.position);
        }
        try {
            bank.add(std::move(ex));
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    if (bank.empty()) {
        throw EmptyBankError("corpus file " + path.string() + " contains no examples");
    }
    return bank;
}

const CorpusBank& DocumentSplit::within_doc_bank(const std::string& doc_id) const
{
    const auto it = test_docs.find(doc_id);
    if (it == test_docs.end()) {
        throw UnknownIdError("no test document '" + doc_id + "'");
    }
    return it->second;
}

std::size_t DocumentSplit::test_line_count() const
{
    std::size_t n = 0;
    for (const auto& [id, doc] : test_docs) {
        n += doc.size();
    }
    return n;
}

DocumentSplit partition_ted(const CorpusBank& bank, std::size_t min_test_lines,
                            std::size_t max_eval_lines)
{
    if (max_eval_lines == 0) {
        throw ConfigError("max_eval_lines must be positive");
    }
    DocumentSplit split;
    for (const auto& doc_id : bank.doc_ids()) {
        auto doc = bank.document(doc_id);
        if (doc.size() >= min_test_lines) {
            if (doc.size() > max_eval_lines) {
                split.discarded_tail_lines += doc.size() - max_eval_lines;
                CorpusBank head;
                for (std::size_t i = 0; i < max_eval_lines; ++i) {
                    head.add(doc[i]);
                }
                doc = std::move(head);
            }
            split.test_docs.emplace(doc_id, std::move(doc));
        } else {
            for (const auto& ex : doc.examples()) {
                split.outdoc_bank.add(ex);
            }
        }
    }
    if (split.test_docs.empty()) {
        throw EmptyBankError("no document has at least " + std::to_string(min_test_lines) +
                             " lines; cannot build a test split");
    }
    return split;
}

CorpusBank filter_by_source_length(const CorpusBank& bank, std::size_t min_words,
                                   std::size_t max_words)
{
    if (min_words > max_words) {
        throw ConfigError("length filter has min_words > max_words");
    }
    CorpusBank out;
    for (const auto& ex : bank.examples()) {
        const auto n = text::word_count(ex.source);
        if (n >= min_words && n <= max_words) {
            out.add(ex);
        }
    }
    if (out.empty()) {
        throw EmptyBankError("length filter [" + std::to_string(min_words) + ", " +
                             std::to_string(max_words) + "] leaves no examples");
    }
    return out;
}

} // namespace icmt
