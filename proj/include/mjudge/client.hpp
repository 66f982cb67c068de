#pragma once

// OpenAI-compatible chat-completions client: bounded concurrency, retries
// with exponential backoff, deterministic caching, token accounting.
// This is the only concurrent module; everything downstream consumes the
// ordered results sequentially.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace mjudge {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_backoff{250};
};

struct EndpointConfig {
    std::string base_url;
    std::string model_name;
    std::string api_key_env_var;  // empty = no auth header
    int max_in_flight = 4;
    std::chrono::milliseconds timeout{120000};
    RetryPolicy retry;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    GenerationParams params;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct CompletionResponse {
    std::vector<std::string> texts;
    std::vector<std::string> finish_reasons;
    TokenUsage usage;
    bool from_cache = false;
};

/// Per-request outcome; map_complete reports failures positionally.
struct CompletionResult {
    std::optional<CompletionResponse> response;
    std::string error;

    bool ok() const { return response.has_value(); }
    const CompletionResponse& value() const {
        if (!response) throw std::runtime_error("completion failed: " + error);
        return *response;
    }
};

// ---------------------------------------------------------------------------
// Transport: one HTTP round trip (or a scripted stand-in).

struct TransportResult {
    int status = 0;          // 0 = network error
    std::string body;
    std::string error;       // non-empty on network error
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportResult perform(const EndpointConfig& cfg, const json& body,
                                    const std::string& bearer_token) = 0;
};

// ---------------------------------------------------------------------------
// Cache: append-only JSONL keyed by a digest of (model, messages, params).
// The full request body is stored alongside and verified on hit, so a
// digest collision can never serve the wrong response.

class CompletionCache {
public:
    CompletionCache() = default;

    /// File-backed cache; loads existing entries, appends new ones.
    explicit CompletionCache(const std::string& path) : path_(path) {
        std::ifstream in(path);
        if (!in) return;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) continue;
            entries_[j.at("key").get<std::string>()] = j;
        }
    }

    std::optional<json> lookup(const std::string& key, const json& request_body) const {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        if (it->second.at("request") != request_body) return std::nullopt;
        return it->second.at("response");
    }

    void store(const std::string& key, const json& request_body, const json& response) {
        std::lock_guard lock(mutex_);
        if (entries_.contains(key)) return;
        json record = json::object();
        record["key"] = key;
        record["request"] = request_body;
        record["response"] = response;
        entries_[key] = record;
        if (!path_.empty()) {
            std::ofstream out(path_, std::ios::app);
            out << record.dump() << '\n';
        }
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, json> entries_;
};

// ---------------------------------------------------------------------------

namespace detail {

inline json request_body(const EndpointConfig& cfg, const CompletionRequest& req) {
    json body = json::object();
    body["model"] = cfg.model_name;
    json msgs = json::array();
    for (const auto& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(msgs);
    body["temperature"] = req.params.temperature;
    body["n"] = req.params.n_samples;
    body["max_tokens"] = req.params.max_tokens;
    if (req.params.seed) body["seed"] = *req.params.seed;
    return body;
}

inline std::string cache_key(const json& body) {
    std::uint64_t h = fnv1a64(body.dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline bool retryable_status(int status) {
    return status == 429 || status == 408 || (status >= 500 && status < 600);
}

}  // namespace detail

class Client {
public:
    Client(EndpointConfig cfg, std::shared_ptr<Transport> transport,
           std::shared_ptr<CompletionCache> cache = nullptr)
        : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_(std::move(cache)) {}

    const EndpointConfig& config() const { return cfg_; }

    CompletionResult complete(const CompletionRequest& req) {
        json body = detail::request_body(cfg_, req);
        std::string key = detail::cache_key(body);

        if (cache_) {
            if (auto hit = cache_->lookup(key, body)) return decode_response(*hit, true);
        }

        std::string token;
        if (!cfg_.api_key_env_var.empty()) {
            const char* v = std::getenv(cfg_.api_key_env_var.c_str());
            if (!v) return {std::nullopt, "auth-missing: env var " + cfg_.api_key_env_var + " unset"};
            token = v;
        }

        std::string last_error;
        for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
            if (attempt > 1) {
                auto delay = cfg_.retry.base_backoff * (1LL << (attempt - 2));
                if (delay.count() > 0) std::this_thread::sleep_for(delay);
            }
            TransportResult r;
            try {
                r = transport_->perform(cfg_, body, token);
            } catch (const std::exception& e) {
                // A throwing transport must fail positionally, not tear down
                // a map_complete worker thread.
                return {std::nullopt, std::string("transport exception: ") + e.what()};
            }
            if (r.status == 200) {
                json parsed = json::parse(r.body, nullptr, false);
                if (parsed.is_discarded()) {
                    last_error = "malformed response body";
                    continue;
                }
                CompletionResult result = decode_response(parsed, false);
                if (result.ok()) {
                    if (static_cast<int>(result.response->texts.size()) != req.params.n_samples)
                        return {std::nullopt, "response carried " +
                                                  std::to_string(result.response->texts.size()) +
                                                  " texts, expected " +
                                                  std::to_string(req.params.n_samples)};
                    if (cache_) cache_->store(key, body, parsed);
                }
                return result;
            }
            last_error = r.status != 0 ? "http status " + std::to_string(r.status)
                                       : "network error: " + r.error;
            if (r.status != 0 && !detail::retryable_status(r.status))
                return {std::nullopt, last_error};
        }
        return {std::nullopt, "exhausted-retries after " +
                                  std::to_string(cfg_.retry.max_attempts) +
                                  " attempts; last: " + last_error};
    }

    /// Batch completion. At most max_in_flight requests are outstanding at
    /// once; results come back in input order; per-request failures are
    /// reported positionally without aborting the batch.
    std::vector<CompletionResult> map_complete(const std::vector<CompletionRequest>& requests) {
        std::vector<CompletionResult> results(requests.size());
        if (requests.empty()) return results;

        std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_in_flight), requests.size());
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= requests.size()) return;
                    results[i] = complete(requests[i]);
                }
            });
        }
        for (auto& t : pool) t.join();
        return results;
    }

private:
    static CompletionResult decode_response(const json& j, bool from_cache) {
        CompletionResponse resp;
        resp.from_cache = from_cache;
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            return {std::nullopt, "response has no choices"};
        for (const auto& choice : j["choices"]) {
            resp.texts.push_back(choice.at("message").at("content").get<std::string>());
            resp.finish_reasons.push_back(choice.value("finish_reason", ""));
        }
        if (j.contains("usage")) {
            resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
            resp.usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
        }
        return {std::move(resp), ""};
    }

    EndpointConfig cfg_;
    std::shared_ptr<Transport> transport_;
    std::shared_ptr<CompletionCache> cache_;
};

}  // namespace mjudge
