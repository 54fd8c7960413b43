#include "helpers.hpp"

#include "icmt/embeddings.hpp"
#include "icmt/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <limits>

using namespace icmt;

namespace {

std::vector<std::string> numbered_ids(std::size_t n)
{
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(make_example_id("v", i));
    }
    return ids;
}

std::string read_bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_SUITE("embeddings")
{
    TEST_CASE("file layout is little-endian with a four byte magic")
    {
        const auto dir = testing::temp_dir("emb_layout");
        const EmbeddingStore store({"a", "b"}, 2, {1.0f, -2.0f, 0.5f, 3.25f});
        save_embeddings(store, dir / "v.emb1", dir / "v.ids");
        const auto bytes = read_bytes(dir / "v.emb1");
        REQUIRE(bytes.size() == 12 + 16);
        CHECK(bytes.substr(0, 4) == "EMB1");
        CHECK(bytes.substr(4, 4) == std::string("\x02\x00\x00\x00", 4));
        CHECK(bytes.substr(8, 4) == std::string("\x02\x00\x00\x00", 4));
        // 1.0f = 0x3F800000
        CHECK(bytes.substr(12, 4) == std::string("\x00\x00\x80\x3F", 4));
        CHECK(read_bytes(dir / "v.ids") == "a\nb\n");
    }

    TEST_CASE("round trip is bit exact")
    {
        const auto dir = testing::temp_dir("emb_roundtrip");
        std::mt19937_64 rng(3);
        std::normal_distribution<float> dist(0.0f, 10.0f);
        std::vector<float> data(37 * 5);
        for (auto& v : data) {
            v = dist(rng);
        }
        data[0] = std::numeric_limits<float>::denorm_min();
        data[1] = -0.0f;
        data[2] = std::numeric_limits<float>::max();
        const EmbeddingStore store(numbered_ids(37), 5, data);
        save_embeddings(store, dir / "x.emb1", dir / "x.ids");
        const auto back = load_embeddings(dir / "x.emb1", dir / "x.ids");
        REQUIRE(back.size() == 37);
        REQUIRE(back.dim() == 5);
        CHECK(back.ids() == store.ids());
        CHECK(std::memcmp(back.data().data(), data.data(), data.size() * sizeof(float)) == 0);
    }

    TEST_CASE("empty store round trips")
    {
        const auto dir = testing::temp_dir("emb_empty");
        save_embeddings(EmbeddingStore({}, 8, {}), dir / "e.emb1", dir / "e.ids");
        const auto back = load_embeddings(dir / "e.emb1", dir / "e.ids");
        CHECK(back.empty());
        CHECK(back.dim() == 8);
    }

    TEST_CASE("malformed files")
    {
        const auto dir = testing::temp_dir("emb_bad");
        save_embeddings(EmbeddingStore({"a", "b", "c"}, 2, std::vector<float>(6, 1.0f)), dir / "ok.emb1",
                        dir / "ok.ids");
        testing::write_text(dir / "short.ids", "a\nb\n");
        CHECK_THROWS_AS(load_embeddings(dir / "ok.emb1", dir / "short.ids"), ConfigError);

        auto bytes = read_bytes(dir / "ok.emb1");
        auto bad = bytes;
        bad[3] = '2';
        testing::write_text(dir / "magic.emb1", bad);
        CHECK_THROWS_AS(load_embeddings(dir / "magic.emb1", dir / "ok.ids"), ParseError);

        testing::write_text(dir / "trunc.emb1", bytes.substr(0, bytes.size() - 1));
        CHECK_THROWS_AS(load_embeddings(dir / "trunc.emb1", dir / "ok.ids"), ParseError);

        testing::write_text(dir / "dup.ids", "a\na\nc\n");
        CHECK_THROWS_AS(load_embeddings(dir / "ok.emb1", dir / "dup.ids"), ConfigError);
        CHECK_THROWS_AS(load_embeddings(dir / "none.emb1", dir / "ok.ids"), ConfigError);
        CHECK_THROWS_AS(EmbeddingStore({"a"}, 2, {1.0f}), ConfigError);
        CHECK_THROWS_AS(EmbeddingStore({"a"}, 1, {std::numeric_limits<float>::quiet_NaN()}), ConfigError);
    }

    TEST_CASE("talks fixture aligns with its ids")
    {
        const auto store = load_embeddings(testing::fixture("docs/talks.emb1"), testing::fixture("docs/talks.ids"));
        CHECK(store.size() == 222);
        CHECK(store.dim() == 16);
        CHECK(store.ids().front() == "talk01:000000");
        CHECK(store.row_of("talk01:000000") == 0u);
        CHECK_THROWS_AS(store.vector_of("talk99:000000"), UnknownIdError);
    }

    TEST_CASE("distances on a two-dimensional example")
    {
        const EmbeddingStore store({"p", "q", "r"}, 2, {0, 0, 1, 0, 3, 4});
        const std::vector<float> origin{0, 0};
        const auto nn = nn_topk(store, origin, 3);
        REQUIRE(nn.size() == 3);
        CHECK(nn[0].id == "p");
        CHECK(nn[0].distance == 0.0);
        CHECK(nn[1].distance == 1.0);
        CHECK(nn[2].id == "r");
        CHECK(nn[2].distance == 5.0);
        CHECK(nn_topk(store, origin, 2, IdSet{"p"})[0].id == "q");
        CHECK(nn_topk(store, origin, 0).empty());
        const std::vector<float> bad{0, 0, 0};
        CHECK_THROWS_AS(nn_topk(store, bad, 1), DimensionError);
        CHECK_THROWS_AS(l2_distance(origin, bad), DimensionError);
    }

    TEST_CASE("nearest neighbours equal an exhaustive scan")
    {
        std::mt19937_64 rng(41);
        std::uniform_int_distribution<int> coord(-3, 3);
        // Small integer coordinates force many exact ties.
        std::vector<float> data(100 * 4);
        for (auto& v : data) {
            v = static_cast<float>(coord(rng));
        }
        const EmbeddingStore store(numbered_ids(100), 4, data);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<float> q(4);
            for (auto& v : q) {
                v = static_cast<float>(coord(rng));
            }
            std::vector<std::pair<double, std::string>> all;
            for (std::size_t i = 0; i < 100; ++i) {
                double s = 0;
                for (std::size_t d = 0; d < 4; ++d) {
                    s += (data[i * 4 + d] - q[d]) * (data[i * 4 + d] - q[d]);
                }
                all.emplace_back(std::sqrt(s), store.ids()[i]);
            }
            std::sort(all.begin(), all.end());
            const auto got = nn_topk(store, q, 10);
            REQUIRE(got.size() == 10);
            for (std::size_t i = 0; i < 10; ++i) {
                CHECK(got[i].id == all[i].second);
                CHECK(got[i].distance == all[i].first);
            }
        }
    }

    TEST_CASE("results do not depend on row order")
    {
        std::mt19937_64 rng(43);
        std::normal_distribution<float> dist;
        const auto ids = numbered_ids(60);
        std::vector<float> data(60 * 3);
        for (auto& v : data) {
            v = dist(rng);
        }
        const EmbeddingStore store(ids, 3, data);
        auto shuffled_ids = ids;
        std::shuffle(shuffled_ids.begin(), shuffled_ids.end(), rng);
        const auto permuted = store.subset(shuffled_ids);
        const std::vector<float> q{0.1f, -0.2f, 0.3f};
        const auto a = nn_topk(store, q, 15);
        const auto b = nn_topk(permuted, q, 15);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].id == b[i].id);
            CHECK(a[i].distance == b[i].distance);
        }
    }
}
