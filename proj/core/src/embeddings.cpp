#include "icmt/embeddings.hpp"

#include "icmt/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>

namespace icmt {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'M', 'B', '1'};

std::uint32_t read_u32_le(const unsigned char* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v)
{
    const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                           static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(bytes, 4);
}

} // namespace

EmbeddingStore::EmbeddingStore(std::vector<std::string> ids, std::size_t dim, std::vector<float> data)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data))
{
    if (data_.size() != ids_.size() * dim_) {
        throw ConfigError("embedding matrix has " + std::to_string(data_.size()) +
                          " values, expected " + std::to_string(ids_.size()) + " x " +
                          std::to_string(dim_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw ConfigError("non-finite embedding value in row " + std::to_string(i / dim_));
        }
    }
    row_by_id_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!row_by_id_.emplace(ids_[i], i).second) {
            throw ConfigError("duplicate embedding id '" + ids_[i] + "'");
        }
    }
}

std::optional<std::size_t> EmbeddingStore::row_of(std::string_view id) const
{
    const auto it = row_by_id_.find(std::string(id));
    if (it == row_by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const float> EmbeddingStore::vector_of(std::string_view id) const
{
    const auto r = row_of(id);
    if (!r) {
        throw UnknownIdError("no embedding for id '" + std::string(id) + "'");
    }
    return row(*r);
}

EmbeddingStore EmbeddingStore::subset(std::span<const std::string> ids) const
{
    std::vector<float> data;
    data.reserve(ids.size() * dim_);
    for (const auto& id : ids) {
        const auto v = vector_of(id);
        data.insert(data.end(), v.begin(), v.end());
    }
    return EmbeddingStore({ids.begin(), ids.end()}, dim_, std::move(data));
}

EmbeddingStore load_embeddings(const std::filesystem::path& vectors_path,
                               const std::filesystem::path& ids_path)
{
    std::ifstream in(vectors_path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open embedding file " + vectors_path.string());
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw ParseError("bad magic in embedding file " + vectors_path.string(), 0);
    }
    const std::size_t n = read_u32_le(bytes.data() + 4);
    const std::size_t dim = read_u32_le(bytes.data() + 8);
    if (bytes.size() != 12 + n * dim * 4) {
        throw ParseError("embedding file " + vectors_path.string() + " has " +
                             std::to_string(bytes.size()) + " bytes, header declares " +
                             std::to_string(n) + " x " + std::to_string(dim),
                         0);
    }
    std::vector<float> data(n * dim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(read_u32_le(bytes.data() + 12 + 4 * i));
    }

    std::ifstream id_in(ids_path, std::ios::binary);
    if (!id_in) {
        throw ConfigError("cannot open embedding ids file " + ids_path.string());
    }
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(id_in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        ids.push_back(line);
    }
    if (ids.size() != n) {
        throw ConfigError("embedding ids file " + ids_path.string() + " has " +
                          std::to_string(ids.size()) + " lines but the vector file has " +
                          std::to_string(n) + " rows");
    }
    return EmbeddingStore(std::move(ids), dim, std::move(data));
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& vectors_path,
                     const std::filesystem::path& ids_path)
{
    std::ofstream out(vectors_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write embedding file " + vectors_path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    write_u32_le(out, static_cast<std::uint32_t>(store.size()));
    write_u32_le(out, static_cast<std::uint32_t>(store.dim()));
    for (float v : store.data()) {
        write_u32_le(out, std::bit_cast<std::uint32_t>(v));
    }

    std::ofstream ids(ids_path, std::ios::binary | std::ios::trunc);
    if (!ids) {
        throw ConfigError("cannot write embedding ids file " + ids_path.string());
    }
    for (const auto& id : store.ids()) {
        ids << id << '\n';
    }
}

double l2_distance(std::span<const float> a, std::span<const float> b)
{
    if (a.size() != b.size()) {
        throw DimensionError("vector dimensions differ: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::vector<Neighbor> nn_topk(const EmbeddingStore& store, std::span<const float> query,
                              std::size_t k, const IdSet& exclude,
                              std::span<const std::size_t> candidate_rows)
{
    if (query.size() != store.dim() && !store.empty()) {
        throw DimensionError("query has dimension " + std::to_string(query.size()) +
                             ", store has " + std::to_string(store.dim()));
    }
    std::vector<Neighbor> all;
    all.reserve(candidate_rows.size());
    for (const auto r : candidate_rows) {
        const auto& id = store.ids()[r];
        if (exclude.count(id)) {
            continue;
        }
        all.push_back({id, l2_distance(store.row(r), query)});
    }
    const auto closer = [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) {
            return a.distance < b.distance;
        }
        return a.id < b.id;
    };
    const auto n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), closer);
    all.resize(n);
    return all;
}

std::vector<Neighbor> nn_topk(const EmbeddingStore& store, std::span<const float> query,
                              std::size_t k, const IdSet& exclude)
{
    std::vector<std::size_t> rows(store.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return nn_topk(store, query, k, exclude, rows);
}

} // namespace icmt
