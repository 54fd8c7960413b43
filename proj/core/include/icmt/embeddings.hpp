#pragma once

#include "icmt/bm25.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icmt {

/// Dense row-major float32 matrix aligned with example ids.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    /// Throws ConfigError when sizes disagree or a value is not finite.
    EmbeddingStore(std::vector<std::string> ids, std::size_t dim, std::vector<float> data);

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<const float> data() const noexcept { return data_; }

    std::optional<std::size_t> row_of(std::string_view id) const;
    /// Throws UnknownIdError.
    std::span<const float> vector_of(std::string_view id) const;

    /// Rows for the given ids, in the given order.
    EmbeddingStore subset(std::span<const std::string> ids) const;

private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> row_by_id_;
};

/// Reads an EMB1 vector file ("EMB1", u32 LE N, u32 LE D, N*D f32 LE,
/// row-major) and its ids sidecar (one UTF-8 id per line, line i <-> row i).
EmbeddingStore load_embeddings(const std::filesystem::path& vectors_path,
                               const std::filesystem::path& ids_path);

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& vectors_path,
                     const std::filesystem::path& ids_path);

struct Neighbor {
    std::string id;
    double distance;
};

double l2_distance(std::span<const float> a, std::span<const float> b);

/// Exact search by ascending L2 distance, ties by ascending id.
/// Throws DimensionError when the query dimension differs from the store.
std::vector<Neighbor> nn_topk(const EmbeddingStore& store, std::span<const float> query,
                              std::size_t k, const IdSet& exclude = {});

/// Same, restricted to the given store rows.
std::vector<Neighbor> nn_topk(const EmbeddingStore& store, std::span<const float> query,
                              std::size_t k, const IdSet& exclude,
                              std::span<const std::size_t> candidate_rows);

} // namespace icmt
