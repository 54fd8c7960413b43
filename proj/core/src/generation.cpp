#include "icmt/generation.hpp"

#include "icmt/error.hpp"
#include "icmt/hashing.hpp"
#include "icmt/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <thread>

namespace icmt {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::size_t default_max_new_tokens(std::string_view test_source)
{
    return (3 * text::word_count(test_source)) / 2 + 10;
}

std::string to_json_line(const GenerationRecord& record)
{
    ordered_json j;
    j["test_id"] = record.test_id;
    j["prompt_hash"] = record.prompt_hash;
    j["raw_output"] = record.raw_output;
    j["hypothesis"] = record.hypothesis;
    j["token_logprobs"] = record.token_logprobs ? ordered_json(*record.token_logprobs) : ordered_json();
    if (record.latency_ms) {
        j["latency_ms"] = *record.latency_ms;
    }
    return j.dump();
}

GenerationRecord parse_generation_record(std::string_view text, std::size_t line_no)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("replay record is not valid JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) {
        throw ParseError("replay record is not a JSON object", line_no);
    }
    GenerationRecord r;
    try {
        r.prompt_hash = j.at("prompt_hash").get<std::string>();
        r.test_id = j.value("test_id", std::string());
        r.raw_output = j.value("raw_output", std::string());
        r.hypothesis = j.value("hypothesis", std::string());
        if (auto it = j.find("token_logprobs"); it != j.end() && !it->is_null()) {
            r.token_logprobs = it->get<std::vector<double>>();
        }
        if (auto it = j.find("latency_ms"); it != j.end() && !it->is_null()) {
            r.latency_ms = it->get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad replay record: ") + e.what(), line_no);
    }
    if (r.prompt_hash.size() != 64 ||
        !std::all_of(r.prompt_hash.begin(), r.prompt_hash.end(),
                     [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); })) {
        throw ParseError("prompt_hash is not a lowercase hex SHA-256: '" + r.prompt_hash + "'", line_no);
    }
    return r;
}

void write_replay(const std::filesystem::path& path, std::span<const GenerationRecord> records)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write replay file " + path.string());
    }
    for (const auto& r : records) {
        out << to_json_line(r) << '\n';
    }
}

ReplayGenerator::ReplayGenerator(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open replay file " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        records_.push_back(parse_generation_record(line, line_no));
    }
    description_ = "replay:" + path.filename().string() + "@" + file_sha256(path);
    index();
}

ReplayGenerator::ReplayGenerator(std::vector<GenerationRecord> records)
    : records_(std::move(records)), description_("replay:memory")
{
    index();
}

void ReplayGenerator::index()
{
    by_hash_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto [it, inserted] = by_hash_.emplace(records_[i].prompt_hash, i);
        if (!inserted && !(records_[it->second] == records_[i])) {
            throw ConfigError("replay file holds conflicting records for prompt_hash " +
                              records_[i].prompt_hash);
        }
    }
}

const GenerationRecord* ReplayGenerator::find(std::string_view hash) const
{
    const auto it = by_hash_.find(std::string(hash));
    return it == by_hash_.end() ? nullptr : &records_[it->second];
}

Completion ReplayGenerator::lookup(std::string_view hash) const
{
    const auto* r = find(hash);
    if (!r) {
        throw ReplayMissError(std::string(hash));
    }
    return {r->raw_output, r->token_logprobs, r->latency_ms};
}

Completion ReplayGenerator::generate(const GenerationRequest& request)
{
    return lookup(prompt_hash(request.prompt));
}

std::vector<double> ReplayGenerator::score(const ScoringRequest& request)
{
    const auto hash = scoring_hash(request.context, request.continuation);
    auto c = lookup(hash);
    if (!c.token_logprobs) {
        throw GenerationError("replay record " + hash + " has no token_logprobs", false);
    }
    return std::move(*c.token_logprobs);
}

struct HttpGenerator::Limiter {
    std::mutex mu;
    std::condition_variable cv;
    std::size_t free;

    explicit Limiter(std::size_t n) : free(std::max<std::size_t>(n, 1)) {}

    void acquire()
    {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return free > 0; });
        --free;
    }

    void release()
    {
        {
            std::lock_guard lock(mu);
            ++free;
        }
        cv.notify_one();
    }
};

HttpGenerator::HttpGenerator(std::string base_url, HttpOptions options)
    : base_url_(std::move(base_url)), options_(options),
      limiter_(std::make_unique<Limiter>(options.max_in_flight))
{
    while (!base_url_.empty() && base_url_.back() == '/') {
        base_url_.pop_back();
    }
    if (base_url_.rfind("http://", 0) != 0) {
        throw ConfigError("endpoint must be an http:// URL, got '" + base_url_ + "'");
    }
}

HttpGenerator::~HttpGenerator() = default;

std::string HttpGenerator::post(const std::string& path, const std::string& body)
{
    limiter_->acquire();
    struct Release {
        Limiter* l;
        ~Release() { l->release(); }
    } release{limiter_.get()};

    std::string last_error;
    for (std::size_t attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(options_.retry_backoff * (1 << std::min<std::size_t>(attempt - 1, 6)));
        }
        httplib::Client client(base_url_);
        client.set_connection_timeout(options_.timeout);
        client.set_read_timeout(options_.timeout);
        client.set_write_timeout(options_.timeout);
        const auto res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            return res->body;
        }
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        if (res->status != 429 && res->status < 500) {
            throw GenerationError("POST " + path + " failed: " + last_error, false);
        }
    }
    throw GenerationError("POST " + path + " failed after " + std::to_string(options_.max_retries + 1) +
                              " attempts: " + last_error,
                          true);
}

namespace {

json parse_response(const std::string& path, const std::string& body)
{
    try {
        auto j = json::parse(body);
        if (!j.is_object()) {
            throw GenerationError("POST " + path + ": response is not a JSON object", false);
        }
        return j;
    } catch (const json::parse_error& e) {
        throw GenerationError("POST " + path + ": malformed response: " + e.what(), false);
    }
}

std::vector<double> logprobs_field(const json& j, const std::string& path)
{
    const auto it = j.find("token_logprobs");
    if (it == j.end() || !it->is_array()) {
        throw GenerationError("POST " + path + ": missing token_logprobs array", false);
    }
    std::vector<double> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number()) {
            throw GenerationError("POST " + path + ": non-numeric log-probability", false);
        }
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

Completion HttpGenerator::generate(const GenerationRequest& request)
{
    const json body = {{"prompt", request.prompt},
                       {"max_new_tokens", request.params.max_new_tokens},
                       {"stop", request.params.stop},
                       {"greedy", request.params.greedy}};
    const auto start = std::chrono::steady_clock::now();
    const auto j = parse_response("/generate", post("/generate", body.dump()));
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

    const auto it = j.find("text");
    if (it == j.end() || !it->is_string()) {
        throw GenerationError("POST /generate: missing text field", false);
    }
    Completion c;
    c.text = it->get<std::string>();
    if (auto lp = j.find("token_logprobs"); lp != j.end() && !lp->is_null()) {
        c.token_logprobs = logprobs_field(j, "/generate");
    }
    c.latency_ms = elapsed.count();
    return c;
}

std::vector<double> HttpGenerator::score(const ScoringRequest& request)
{
    const json body = {{"context", request.context}, {"continuation", request.continuation}};
    return logprobs_field(parse_response("/score", post("/score", body.dump())), "/score");
}

EmbedResult HttpGenerator::embed(std::span<const std::string> texts)
{
    const json body = {{"texts", texts}};
    const auto j = parse_response("/embed", post("/embed", body.dump()));
    EmbedResult r;
    try {
        r.dim = j.at("dim").get<std::size_t>();
        r.vectors = j.at("vectors").get<std::vector<std::vector<float>>>();
    } catch (const json::exception& e) {
        throw GenerationError(std::string("POST /embed: bad response: ") + e.what(), false);
    }
    if (r.vectors.size() != texts.size()) {
        throw GenerationError("POST /embed: got " + std::to_string(r.vectors.size()) + " vectors for " +
                                  std::to_string(texts.size()) + " texts",
                              false);
    }
    for (const auto& v : r.vectors) {
        if (v.size() != r.dim) {
            throw GenerationError("POST /embed: vector of dimension " + std::to_string(v.size()) +
                                      ", declared " + std::to_string(r.dim),
                                  false);
        }
    }
    return r;
}

Completion RequestRecorder::generate(const GenerationRequest& request)
{
    auto hash = prompt_hash(request.prompt);
    ordered_json j;
    j["kind"] = "generate";
    j["prompt_hash"] = hash;
    j["test_id"] = request.test_id;
    j["prompt"] = request.prompt;
    j["max_new_tokens"] = request.params.max_new_tokens;
    j["stop"] = request.params.stop;
    j["greedy"] = request.params.greedy;
    std::lock_guard lock(mu_);
    lines_.try_emplace(std::move(hash), request.test_id, j.dump());
    return {};
}

std::vector<double> RequestRecorder::score(const ScoringRequest& request)
{
    auto hash = scoring_hash(request.context, request.continuation);
    ordered_json j;
    j["kind"] = "score";
    j["prompt_hash"] = hash;
    j["test_id"] = request.test_id;
    j["context"] = request.context;
    j["continuation"] = request.continuation;
    std::lock_guard lock(mu_);
    lines_.try_emplace(std::move(hash), request.test_id, j.dump());
    return {0.0};
}

std::vector<std::string> RequestRecorder::request_lines() const
{
    std::vector<std::tuple<std::string, std::string, std::string>> sorted;
    {
        std::lock_guard lock(mu_);
        for (const auto& [hash, entry] : lines_) {
            sorted.emplace_back(entry.first, hash, entry.second);
        }
    }
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::string> out;
    out.reserve(sorted.size());
    for (auto& t : sorted) {
        out.push_back(std::move(std::get<2>(t)));
    }
    return out;
}

void RequestRecorder::write(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    for (const auto& line : request_lines()) {
        out << line << '\n';
    }
}

} // namespace icmt
