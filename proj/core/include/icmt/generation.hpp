#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icmt {

struct GenerationParams {
    std::size_t max_new_tokens = 64;
    std::vector<std::string> stop{"\n"};
    bool greedy = true;
};

/// floor(1.5 * source words) + 10.
std::size_t default_max_new_tokens(std::string_view test_source);

struct GenerationRequest {
    std::string test_id;
    std::string prompt;
    GenerationParams params;
};

/// Natural-log probabilities of `continuation` given `context`.
struct ScoringRequest {
    std::string test_id;
    std::string context;
    std::string continuation;
};

struct Completion {
    std::string text;
    std::optional<std::vector<double>> token_logprobs;
    std::optional<double> latency_ms;
};

/// One replay line. Generation records are keyed by prompt_hash(prompt);
/// scoring records by scoring_hash(context, continuation) and carry the
/// continuation's token_logprobs.
struct GenerationRecord {
    std::string test_id;
    std::string prompt_hash;
    std::string raw_output;
    std::string hypothesis;
    std::optional<std::vector<double>> token_logprobs;
    std::optional<double> latency_ms;

    friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

std::string to_json_line(const GenerationRecord& record);
/// Throws ParseError carrying `line_no`.
GenerationRecord parse_generation_record(std::string_view json, std::size_t line_no = 0);

void write_replay(const std::filesystem::path& path, std::span<const GenerationRecord> records);

class Generator {
public:
    virtual ~Generator() = default;

    virtual Completion generate(const GenerationRequest& request) = 0;
    virtual std::vector<double> score(const ScoringRequest& request) = 0;
    /// Short description for run manifests.
    virtual std::string describe() const = 0;
};

/// Serves stored records. Lookups are read-only and thread-safe.
class ReplayGenerator final : public Generator {
public:
    /// Throws ParseError on a malformed line and ConfigError on conflicting
    /// duplicate hashes.
    explicit ReplayGenerator(const std::filesystem::path& path);
    explicit ReplayGenerator(std::vector<GenerationRecord> records);

    std::size_t size() const noexcept { return records_.size(); }
    const GenerationRecord* find(std::string_view hash) const;

    /// Throws ReplayMissError naming the prompt hash.
    Completion generate(const GenerationRequest& request) override;
    Completion lookup(std::string_view hash) const;
    std::vector<double> score(const ScoringRequest& request) override;
    std::string describe() const override { return description_; }

private:
    void index();

    std::vector<GenerationRecord> records_;
    std::unordered_map<std::string, std::size_t> by_hash_;
    std::string description_;
};

struct HttpOptions {
    std::chrono::milliseconds timeout{120'000};
    /// Extra attempts after a retryable failure (transport error, 429, 5xx).
    std::size_t max_retries = 2;
    std::chrono::milliseconds retry_backoff{250};
    /// Concurrent requests allowed through this client.
    std::size_t max_in_flight = 4;
};

struct EmbedResult {
    std::size_t dim = 0;
    std::vector<std::vector<float>> vectors;
};

/// Client of the generation service:
///   POST /generate {"prompt","max_new_tokens","stop","greedy"} -> {"text","token_logprobs"}
///   POST /score    {"context","continuation"}                 -> {"token_logprobs"}
///   POST /embed    {"texts"}                                  -> {"dim","vectors"}
class HttpGenerator final : public Generator {
public:
    /// `base_url` like "http://127.0.0.1:8080".
    explicit HttpGenerator(std::string base_url, HttpOptions options = {});
    ~HttpGenerator() override;

    Completion generate(const GenerationRequest& request) override;
    std::vector<double> score(const ScoringRequest& request) override;
    EmbedResult embed(std::span<const std::string> texts);
    std::string describe() const override { return "http:" + base_url_; }

private:
    struct Limiter;

    std::string post(const std::string& path, const std::string& body);

    std::string base_url_;
    HttpOptions options_;
    std::unique_ptr<Limiter> limiter_;
};

/// Dry-run generator: remembers every request and answers with an empty
/// completion (and a single zero log-probability when scoring).
class RequestRecorder final : public Generator {
public:
    Completion generate(const GenerationRequest& request) override;
    std::vector<double> score(const ScoringRequest& request) override;
    std::string describe() const override { return "dry-run"; }

    /// One JSON object per distinct request, sorted by (test_id, hash):
    ///   {"kind":"generate","prompt_hash","test_id","prompt","max_new_tokens","stop","greedy"}
    ///   {"kind":"score","prompt_hash","test_id","context","continuation"}
    std::vector<std::string> request_lines() const;
    void write(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::pair<std::string, std::string>> lines_;
};

} // namespace icmt
