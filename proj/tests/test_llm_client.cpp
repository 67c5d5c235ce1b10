#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <random>

#include "layoutforge/llm_client.hpp"
#include "support/mock_llm_server.hpp"

using namespace layoutforge;

namespace {

LlmConfig test_config(const mock::LlmServer& server) {
    LlmConfig config;
    config.base_url = server.base_url();
    config.model_name = "test-model";
    config.backoff_base_seconds = 0.001;  // keep retry tests fast
    config.request_timeout_seconds = 5;
    return config;
}

}  // namespace

TEST_CASE("complete returns the mocked assistant text") {
    mock::LlmServer server([](const std::string&) { return "hello back"; });
    auto result = complete(test_config(server), "hello");
    REQUIRE(result.ok);
    CHECK(result.text == "hello back");
    CHECK(result.attempt_count == 1);
    CHECK(result.http_status == 200);
    CHECK(result.raw_finish_reason == "stop");
    CHECK(result.error.empty());
}

TEST_CASE("request body carries model, message, temperature and max_tokens") {
    mock::LlmServer server([](const std::string&) { return "ok"; });
    LlmConfig config = test_config(server);
    config.temperature = 0.25;
    config.max_tokens = 77;
    complete(config, "ping");

    auto bodies = server.seen_bodies();
    REQUIRE(bodies.size() == 1);
    auto body = nlohmann::json::parse(bodies[0]);
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "ping");
    CHECK(body["temperature"] == 0.25);
    CHECK(body["max_tokens"] == 77);
}

TEST_CASE("two 429s then success yields attempt_count 3") {
    mock::LlmServer server([](const std::string&) { return "eventually"; });
    server.set_status_script({429, 429, 200});
    auto result = complete(test_config(server), "retry me");
    REQUIRE(result.ok);
    CHECK(result.text == "eventually");
    CHECK(result.attempt_count == 3);
    CHECK(server.request_count() == 3);
}

TEST_CASE("5xx exhausts retries and carries the status") {
    mock::LlmServer server([](const std::string&) { return "never"; });
    server.set_status_script({503, 503, 503, 503, 503, 503});
    LlmConfig config = test_config(server);
    config.max_retries = 2;
    auto result = complete(config, "x");
    CHECK_FALSE(result.ok);
    CHECK(result.error_kind == CompletionResult::ErrorKind::HttpStatus);
    CHECK(result.http_status == 503);
    CHECK(result.attempt_count == 3);  // first try + 2 retries
    CHECK(server.request_count() == 3);
}

TEST_CASE("non-retryable status fails immediately") {
    mock::LlmServer server([](const std::string&) { return "never"; });
    server.set_status_script({404});
    auto result = complete(test_config(server), "x");
    CHECK_FALSE(result.ok);
    CHECK(result.error_kind == CompletionResult::ErrorKind::HttpStatus);
    CHECK(result.http_status == 404);
    CHECK(result.attempt_count == 1);
}

TEST_CASE("unreachable host reports a transport error after retries") {
    LlmConfig config;
    config.base_url = "http://127.0.0.1:9";  // discard port, nothing listens
    config.max_retries = 2;
    config.backoff_base_seconds = 0.001;
    config.request_timeout_seconds = 1;
    auto result = complete(config, "x");
    CHECK_FALSE(result.ok);
    CHECK(result.error_kind == CompletionResult::ErrorKind::Transport);
    CHECK(result.attempt_count == 3);
    CHECK(result.text.empty());
}

TEST_CASE("a 200 with a non-completion body is malformed, not retried") {
    mock::LlmServer server([](const std::string&) { return "unused"; });
    server.set_raw_body(R"({"unexpected": true})");
    auto result = complete(test_config(server), "x");
    CHECK_FALSE(result.ok);
    CHECK(result.error_kind == CompletionResult::ErrorKind::MalformedResponse);
    CHECK(server.request_count() == 1);
}

TEST_CASE("the API key env var overrides the config key") {
    mock::LlmServer server([](const std::string&) { return "ok"; });
    LlmConfig config = test_config(server);

    config.api_key = "config-key";
    complete(config, "a");
    CHECK(server.last_authorization() == "Bearer config-key");

    setenv("LAYOUTFORGE_API_KEY", "env-key", 1);
    complete(config, "b");
    CHECK(server.last_authorization() == "Bearer env-key");
    unsetenv("LAYOUTFORGE_API_KEY");

    config.api_key.clear();
    complete(config, "c");
    CHECK(server.last_authorization().empty());
}

TEST_CASE("complete_batch keeps input order under random delays") {
    mock::LlmServer server([](const std::string& prompt) { return "echo " + prompt; });
    server.set_delay([](const std::string& prompt) {
        // Earlier prompts sleep longer, so completion order is reversed.
        const int n = prompt.back() - '0';
        return std::chrono::milliseconds((9 - n) * 5);
    });

    LlmConfig config = test_config(server);
    config.parallelism = 4;
    std::vector<std::string> prompts;
    for (int i = 0; i < 8; ++i) prompts.push_back("prompt-" + std::to_string(i));
    auto results = complete_batch(config, prompts);

    REQUIRE(results.size() == 8);
    for (int i = 0; i < 8; ++i) {
        REQUIRE(results[i].ok);
        CHECK(results[i].text == "echo prompt-" + std::to_string(i));
    }
}

TEST_CASE("complete_batch bounds in-flight concurrency") {
    mock::LlmServer server([](const std::string&) { return "ok"; });
    server.set_delay([](const std::string&) { return std::chrono::milliseconds(20); });
    LlmConfig config = test_config(server);
    config.parallelism = 3;

    std::vector<std::string> prompts(12, "p");
    auto results = complete_batch(config, prompts);
    CHECK(results.size() == 12);
    CHECK(server.max_in_flight() <= 3);
    CHECK(server.max_in_flight() >= 2);  // parallelism actually used
}

TEST_CASE("complete_batch carries per-item failures in position") {
    mock::LlmServer server([](const std::string& prompt) { return "ok:" + prompt; });
    server.set_fail_substring("poison", 500);
    LlmConfig config = test_config(server);
    config.max_retries = 0;
    config.parallelism = 2;

    std::vector<std::string> prompts = {"a", "poison pill", "c", "d", "e"};
    auto results = complete_batch(config, prompts);
    REQUIRE(results.size() == 5);
    CHECK(results[0].ok);
    CHECK_FALSE(results[1].ok);
    CHECK(results[1].error_kind == CompletionResult::ErrorKind::HttpStatus);
    CHECK(results[2].ok);
    CHECK(results[3].ok);
    CHECK(results[4].ok);
    CHECK(results[2].text == "ok:c");
}

TEST_CASE("empty batch is rejected") {
    LlmConfig config;
    CHECK_THROWS_AS(complete_batch(config, {}), EmptyBatchError);
}
