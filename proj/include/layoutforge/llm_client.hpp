#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "layoutforge/errors.hpp"
#include "layoutforge/rng.hpp"

namespace layoutforge {

// One OpenAI-compatible chat-completions endpoint. Anything speaking that
// wire protocol works: a local LM Studio/llama.cpp server or a hosted API.
struct LlmConfig {
    std::string base_url = "http://localhost:1234";
    std::string model_name = "local-model";
    std::string api_key;  // LAYOUTFORGE_API_KEY env var wins when set
    double temperature = 0.7;
    int max_tokens = 1024;
    int request_timeout_seconds = 120;
    int max_retries = 3;  // retries after the first attempt
    double backoff_base_seconds = 0.5;
    int parallelism = 4;
};

struct CompletionResult {
    enum class ErrorKind { None, Transport, HttpStatus, MalformedResponse };

    bool ok = false;
    std::string text;  // assistant content, present iff ok
    ErrorKind error_kind = ErrorKind::None;
    std::string error;
    int http_status = 0;  // last status seen, 0 if the request never landed
    int attempt_count = 0;
    long latency_ms = 0;
    std::string raw_finish_reason;
};

namespace detail {

inline std::string effective_api_key(const LlmConfig& config) {
    if (const char* env = std::getenv("LAYOUTFORGE_API_KEY"); env && *env) {
        return env;
    }
    return config.api_key;
}

inline bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status <= 599);
}

}  // namespace detail

// Sends one user message and reads choices[0].message.content. Transport
// errors and retryable statuses (429, 5xx) back off at base·2^attempt with
// jitter; errors are carried in the result instead of thrown so batch callers
// can keep going.
inline CompletionResult complete(const LlmConfig& config, const std::string& prompt) {
    nlohmann::ordered_json body;
    body["model"] = config.model_name;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = config.temperature;
    body["max_tokens"] = config.max_tokens;
    const std::string payload = body.dump();
    const std::string api_key = detail::effective_api_key(config);

    CompletionResult result;
    std::mt19937_64 jitter_gen(std::random_device{}());
    const auto start = std::chrono::steady_clock::now();
    const int attempts = config.max_retries + 1;

    for (int attempt = 0; attempt < attempts; ++attempt) {
        result.attempt_count = attempt + 1;
        if (attempt > 0) {
            double jitter = 1.0 + 0.25 * uniform01(jitter_gen);
            double seconds =
                config.backoff_base_seconds * std::pow(2.0, attempt - 1) * jitter;
            std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
        }

        httplib::Client client(config.base_url);
        client.set_connection_timeout(config.request_timeout_seconds);
        client.set_read_timeout(config.request_timeout_seconds);
        client.set_write_timeout(config.request_timeout_seconds);
        httplib::Headers headers;
        if (!api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key);
        }

        auto res = client.Post("/v1/chat/completions", headers, payload,
                               "application/json");
        if (!res) {
            result.error_kind = CompletionResult::ErrorKind::Transport;
            result.error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        result.http_status = res->status;
        if (detail::retryable_status(res->status)) {
            result.error_kind = CompletionResult::ErrorKind::HttpStatus;
            result.error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            result.error_kind = CompletionResult::ErrorKind::HttpStatus;
            result.error = "http status " + std::to_string(res->status);
            break;
        }

        auto parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") ||
            !parsed["choices"].is_array() || parsed["choices"].empty() ||
            !parsed["choices"][0].contains("message") ||
            !parsed["choices"][0]["message"].contains("content") ||
            !parsed["choices"][0]["message"]["content"].is_string()) {
            result.error_kind = CompletionResult::ErrorKind::MalformedResponse;
            result.error = "response body is not a chat completion";
            break;
        }
        result.ok = true;
        result.error_kind = CompletionResult::ErrorKind::None;
        result.error.clear();
        result.text = parsed["choices"][0]["message"]["content"].get<std::string>();
        if (parsed["choices"][0].contains("finish_reason") &&
            parsed["choices"][0]["finish_reason"].is_string()) {
            result.raw_finish_reason =
                parsed["choices"][0]["finish_reason"].get<std::string>();
        }
        break;
    }

    result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    return result;
}

// Runs prompts with at most config.parallelism in flight; results come back
// in input order. Per-item failures stay in their slots.
inline std::vector<CompletionResult> complete_batch(const LlmConfig& config,
                                                    const std::vector<std::string>& prompts) {
    if (prompts.empty()) throw EmptyBatchError();
    std::vector<CompletionResult> results(prompts.size());
    const std::size_t workers =
        std::min<std::size_t>(std::max(config.parallelism, 1), prompts.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= prompts.size()) return;
            results[i] = complete(config, prompts[i]);
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace layoutforge
