#include "helpers.hpp"

#include "icmt/embeddings.hpp"
#include "icmt/error.hpp"
#include "icmt/generation.hpp"
#include "icmt/hashing.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace icmt;
using nlohmann::json;

namespace {

std::string hex64(char c)
{
    return std::string(64, c);
}

GenerationRecord record(std::string prompt, std::string raw)
{
    GenerationRecord r;
    r.test_id = "t";
    r.prompt_hash = prompt_hash(prompt);
    r.raw_output = std::move(raw);
    r.hypothesis = r.raw_output;
    return r;
}

/// Local stand-in for the model service.
class StubServer {
public:
    std::atomic<int> flaky_calls{0};
    std::atomic<int> bad_calls{0};
    std::atomic<int> down_calls{0};
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
    json last_generate;

    StubServer()
    {
        server_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
            const auto j = json::parse(req.body);
            {
                std::lock_guard lock(mu_);
                last_generate = j;
            }
            const auto prompt = j.at("prompt").get<std::string>();
            if (prompt.rfind("slow", 0) == 0) {
                const int now = ++active;
                int prev = peak.load();
                while (now > prev && !peak.compare_exchange_weak(prev, now)) {
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(40));
                --active;
            }
            if (prompt == "flaky" && ++flaky_calls < 3) {
                res.status = 503;
                return;
            }
            if (prompt == "bad") {
                ++bad_calls;
                res.status = 400;
                res.set_content("{\"error\":\"bad prompt\"}", "application/json");
                return;
            }
            if (prompt == "down") {
                ++down_calls;
                res.status = 500;
                return;
            }
            if (prompt == "garbage") {
                res.set_content("not json", "text/plain");
                return;
            }
            res.set_content(json{{"text", "echo:" + prompt}, {"token_logprobs", {-0.5, -0.25}}}.dump(),
                            "application/json");
        });
        server_.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
            const auto j = json::parse(req.body);
            const auto words = j.at("continuation").get<std::string>();
            std::vector<double> lp(static_cast<std::size_t>(std::count(words.begin(), words.end(), ' ') + 1), -1.0);
            res.set_content(json{{"token_logprobs", lp}}.dump(), "application/json");
        });
        server_.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
            const auto texts = json::parse(req.body).at("texts").get<std::vector<std::string>>();
            json vectors = json::array();
            for (const auto& t : texts) {
                vectors.push_back({static_cast<double>(t.size()), 0.5, -1.0});
            }
            res.set_content(json{{"dim", 3}, {"vectors", vectors}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer()
    {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    json generate_body()
    {
        std::lock_guard lock(mu_);
        return last_generate;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    std::mutex mu_;
    int port_ = 0;
};

HttpOptions fast()
{
    HttpOptions o;
    o.timeout = std::chrono::milliseconds(2000);
    o.retry_backoff = std::chrono::milliseconds(1);
    return o;
}

} // namespace

TEST_SUITE("generation")
{
    TEST_CASE("hashes")
    {
        CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK(scoring_hash("ab", "c") == sha256_hex("abc"));
        CHECK(prompt_hash("abc") == sha256_hex("abc"));
        const auto dir = testing::temp_dir("hash_file");
        testing::write_text(dir / "f", "abc");
        CHECK(file_sha256(dir / "f") == sha256_hex("abc"));
        CHECK_THROWS_AS(file_sha256(dir / "missing"), ConfigError);
    }

    TEST_CASE("generation length rule")
    {
        CHECK(default_max_new_tokens("a b c") == 14);
        CHECK(default_max_new_tokens("a b c d") == 16);
        CHECK(default_max_new_tokens("") == 10);
    }

    TEST_CASE("record round trip")
    {
        auto r = record("p", "out\nmore");
        r.token_logprobs = std::vector<double>{-0.1, -2.5};
        r.latency_ms = 12.5;
        CHECK(parse_generation_record(to_json_line(r)) == r);
        const auto plain = record("q", "x");
        CHECK(parse_generation_record(to_json_line(plain)) == plain);
        CHECK(to_json_line(plain).find("\"token_logprobs\":null") != std::string::npos);
    }

    TEST_CASE("malformed records")
    {
        CHECK_THROWS_AS(parse_generation_record("{", 3), ParseError);
        CHECK_THROWS_AS(parse_generation_record("[]"), ParseError);
        CHECK_THROWS_AS(parse_generation_record("{\"test_id\":\"t\"}"), ParseError);
        CHECK_THROWS_AS(parse_generation_record("{\"prompt_hash\":\"abc\"}"), ParseError);
        CHECK_THROWS_AS(parse_generation_record("{\"prompt_hash\":\"" + hex64('A') + "\"}"), ParseError);
        CHECK_NOTHROW(parse_generation_record("{\"prompt_hash\":\"" + hex64('a') + "\"}"));
        try {
            parse_generation_record("{", 7);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 7);
        }
    }

    TEST_CASE("replay hits and misses")
    {
        const auto dir = testing::temp_dir("replay");
        std::vector<GenerationRecord> recs{record("p1", "one"), record("p2", "two")};
        auto s = record("", "");
        s.prompt_hash = scoring_hash("ctx ", "src");
        s.token_logprobs = std::vector<double>{-1.0, -2.0};
        recs.push_back(s);
        write_replay(dir / "r.jsonl", recs);
        ReplayGenerator gen(dir / "r.jsonl");
        CHECK(gen.size() == 3);
        CHECK(gen.generate({"t", "p1", {}}).text == "one");
        CHECK(gen.score({"t", "ctx ", "src"}) == std::vector<double>{-1.0, -2.0});
        CHECK_THROWS_AS(gen.score({"t", "p1", ""}), GenerationError);
        CHECK(gen.describe() == "replay:r.jsonl@" + file_sha256(dir / "r.jsonl"));
        try {
            gen.generate({"t", "p3", {}});
            FAIL("expected a miss");
        } catch (const ReplayMissError& e) {
            CHECK(e.prompt_hash() == prompt_hash("p3"));
            CHECK(!e.retryable());
        }
    }

    TEST_CASE("replay duplicates")
    {
        CHECK_NOTHROW(ReplayGenerator({record("p", "a"), record("p", "a")}));
        CHECK_THROWS_AS(ReplayGenerator({record("p", "a"), record("p", "b")}), ConfigError);
        const auto dir = testing::temp_dir("replay_bad");
        testing::write_text(dir / "r.jsonl", to_json_line(record("p", "a")) + "\n\n{oops\n");
        try {
            ReplayGenerator bad(dir / "r.jsonl");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
        CHECK_THROWS_AS(ReplayGenerator(dir / "none.jsonl"), ConfigError);
    }

    TEST_CASE("request recorder")
    {
        RequestRecorder rec;
        rec.generate({"b", "second", {}});
        rec.generate({"a", "first", {}});
        rec.generate({"a", "first", {}});
        CHECK(rec.score({"a", "c", "s"}) == std::vector<double>{0.0});
        const auto lines = rec.request_lines();
        REQUIRE(lines.size() == 3);
        const auto first = json::parse(lines[0]);
        CHECK(first["test_id"] == "a");
        CHECK(json::parse(lines[2])["test_id"] == "b");
        bool saw_score = false;
        for (const auto& l : lines) {
            const auto j = json::parse(l);
            if (j["kind"] == "score") {
                saw_score = true;
                CHECK(j["prompt_hash"] == scoring_hash("c", "s"));
            } else {
                CHECK(j["prompt_hash"] == prompt_hash(j["prompt"].get<std::string>()));
                CHECK(j["stop"] == json::array({"\n"}));
                CHECK(j["greedy"] == true);
            }
        }
        CHECK(saw_score);
    }

    TEST_CASE("http generate, score and embed")
    {
        StubServer stub;
        HttpGenerator gen(stub.url() + "/", fast());
        GenerationParams params;
        params.max_new_tokens = 17;
        const auto c = gen.generate({"t", "hello", params});
        CHECK(c.text == "echo:hello");
        CHECK(c.token_logprobs == std::vector<double>{-0.5, -0.25});
        CHECK(c.latency_ms.has_value());
        const auto body = stub.generate_body();
        CHECK(body["max_new_tokens"] == 17);
        CHECK(body["stop"] == json::array({"\n"}));
        CHECK(body["greedy"] == true);
        CHECK(gen.score({"t", "ctx", "a b c"}).size() == 3);
        CHECK(gen.describe() == "http:" + stub.url());

        const std::vector<std::string> texts{"ab", "abcd"};
        const auto e = gen.embed(texts);
        CHECK(e.dim == 3);
        REQUIRE(e.vectors.size() == 2);
        CHECK(e.vectors[1][0] == 4.0f);

        // Service vectors persisted as an EMB1 pair load back unchanged.
        const auto dir = testing::temp_dir("embed_emb1");
        std::vector<float> flat;
        for (const auto& v : e.vectors) {
            flat.insert(flat.end(), v.begin(), v.end());
        }
        save_embeddings(EmbeddingStore({"x:0", "x:1"}, e.dim, flat), dir / "e.emb1", dir / "e.ids");
        const auto back = load_embeddings(dir / "e.emb1", dir / "e.ids");
        CHECK(std::vector<float>(back.data().begin(), back.data().end()) == flat);
    }

    TEST_CASE("http retries")
    {
        StubServer stub;
        HttpGenerator gen(stub.url(), fast());
        CHECK(gen.generate({"t", "flaky", {}}).text == "echo:flaky");
        CHECK(stub.flaky_calls == 3);

        try {
            gen.generate({"t", "bad", {}});
            FAIL("expected GenerationError");
        } catch (const GenerationError& e) {
            CHECK(!e.retryable());
        }
        CHECK(stub.bad_calls == 1);

        try {
            gen.generate({"t", "down", {}});
            FAIL("expected GenerationError");
        } catch (const GenerationError& e) {
            CHECK(e.retryable());
        }
        CHECK(stub.down_calls == 3);
        CHECK_THROWS_AS(gen.generate({"t", "garbage", {}}), GenerationError);
    }

    TEST_CASE("http transport failure and bad endpoints")
    {
        int port = 0;
        {
            httplib::Server probe;
            port = probe.bind_to_any_port("127.0.0.1");
        }
        // The probe socket may linger unaccepted, so this is either a refused
        // connection or a read timeout. Both are transport errors.
        auto opts = fast();
        opts.max_retries = 1;
        opts.timeout = std::chrono::milliseconds(200);
        HttpGenerator gen("http://127.0.0.1:" + std::to_string(port), opts);
        try {
            gen.generate({"t", "x", {}});
            FAIL("expected GenerationError");
        } catch (const GenerationError& e) {
            CHECK(e.retryable());
        }
        CHECK_THROWS_AS(HttpGenerator("https://example.invalid"), ConfigError);
        CHECK_THROWS_AS(HttpGenerator("localhost:80"), ConfigError);
    }

    TEST_CASE("in-flight limit")
    {
        StubServer stub;
        auto opts = fast();
        opts.max_in_flight = 2;
        HttpGenerator gen(stub.url(), opts);
        std::vector<std::thread> threads;
        for (int i = 0; i < 8; ++i) {
            threads.emplace_back([&, i] { gen.generate({"t", "slow" + std::to_string(i), {}}); });
        }
        for (auto& t : threads) {
            t.join();
        }
        CHECK(stub.peak >= 1);
        CHECK(stub.peak <= 2);
    }
}
