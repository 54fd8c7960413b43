#pragma once

#include "icmt/corpus.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path fixture(const std::string& rel)
{
    return std::filesystem::path(ICMT_FIXTURE_DIR) / rel;
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(nlohmann::json::parse(line));
        }
    }
    return out;
}

inline std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("icmt_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline icmt::ParallelExample example(std::string doc, std::size_t pos, std::string src, std::string tgt = "t")
{
    icmt::ParallelExample ex;
    ex.id = icmt::make_example_id(doc, pos);
    ex.doc_id = std::move(doc);
    ex.position = pos;
    ex.source = std::move(src);
    ex.target = std::move(tgt);
    ex.domain = icmt::Domain(icmt::DomainKind::Ted);
    return ex;
}

/// One document whose sources are the given strings.
inline icmt::CorpusBank document(const std::string& doc, const std::vector<std::string>& sources)
{
    icmt::CorpusBank bank;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        bank.add(example(doc, i, sources[i], "cible " + std::to_string(i)));
    }
    return bank;
}

/// Random bank of up to `docs` documents over a vocabulary of `vocab` words.
inline icmt::CorpusBank random_bank(std::mt19937_64& rng, std::size_t docs, std::size_t vocab,
                                    std::size_t max_lines = 6, std::size_t max_words = 8)
{
    icmt::CorpusBank bank;
    std::uniform_int_distribution<std::size_t> nlines(1, max_lines);
    std::uniform_int_distribution<std::size_t> nwords(1, max_words);
    std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
    for (std::size_t d = 0; d < docs; ++d) {
        const auto lines = nlines(rng);
        for (std::size_t p = 0; p < lines; ++p) {
            std::string s;
            const auto n = nwords(rng);
            for (std::size_t w = 0; w < n; ++w) {
                s += (w ? " w" : "w") + std::to_string(word(rng));
            }
            bank.add(example("d" + std::to_string(d), p, s));
        }
    }
    return bank;
}

inline std::vector<std::string> random_query(std::mt19937_64& rng, std::size_t vocab, std::size_t max_len = 6)
{
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::size_t> word(0, vocab + 2);
    std::vector<std::string> q;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        q.push_back("w" + std::to_string(word(rng)));
    }
    return q;
}

} // namespace testing
