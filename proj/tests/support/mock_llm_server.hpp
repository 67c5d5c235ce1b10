#pragma once

// In-process chat-completions mock. The responder callback maps the user
// prompt to assistant content; a status script can force 429/500 sequences;
// atomic counters expose request totals and peak concurrency.

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace mock {

class LlmServer {
  public:
    using Responder = std::function<std::string(const std::string& prompt)>;
    using Delay = std::function<std::chrono::milliseconds(const std::string& prompt)>;

    explicit LlmServer(Responder responder)
        : responder_(std::move(responder)) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         handle(req, res);
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~LlmServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    // Statuses consumed one per request; exhausted script means 200.
    void set_status_script(std::vector<int> statuses) {
        status_script_ = std::move(statuses);
        script_pos_ = 0;
    }

    void set_delay(Delay delay) { delay_ = std::move(delay); }

    // Prompts containing the substring fail with the given status.
    void set_fail_substring(std::string needle, int status) {
        fail_substring_ = std::move(needle);
        fail_status_ = status;
    }

    // Every 200 response carries this raw body instead of a chat completion.
    void set_raw_body(std::string body) { raw_body_ = std::move(body); }

    int request_count() const { return request_count_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }
    std::vector<std::string> seen_prompts() const {
        std::lock_guard<std::mutex> lock(prompt_mutex_);
        return prompts_;
    }
    std::vector<std::string> seen_bodies() const {
        std::lock_guard<std::mutex> lock(prompt_mutex_);
        return bodies_;
    }
    std::string last_authorization() const {
        std::lock_guard<std::mutex> lock(prompt_mutex_);
        return last_authorization_;
    }

  private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        const int now = ++in_flight_;
        int prev = max_in_flight_.load();
        while (prev < now && !max_in_flight_.compare_exchange_weak(prev, now)) {
        }
        request_count_++;

        std::string prompt;
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (!body.is_discarded() && body.contains("messages") &&
            body["messages"].is_array() && !body["messages"].empty()) {
            prompt = body["messages"][0].value("content", "");
        }
        {
            std::lock_guard<std::mutex> lock(prompt_mutex_);
            prompts_.push_back(prompt);
            bodies_.push_back(req.body);
            last_authorization_ = req.get_header_value("Authorization");
        }
        if (delay_) std::this_thread::sleep_for(delay_(prompt));

        const std::size_t pos = script_pos_.fetch_add(1);
        if (pos < status_script_.size() && status_script_[pos] != 200) {
            res.status = status_script_[pos];
            res.set_content("busy", "text/plain");
            --in_flight_;
            return;
        }
        if (!fail_substring_.empty() && prompt.find(fail_substring_) != std::string::npos) {
            res.status = fail_status_;
            res.set_content("forced failure", "text/plain");
            --in_flight_;
            return;
        }
        if (!raw_body_.empty()) {
            res.set_content(raw_body_, "application/json");
            --in_flight_;
            return;
        }

        nlohmann::json reply = {
            {"choices",
             {{{"message", {{"role", "assistant"}, {"content", responder_(prompt)}}},
               {"finish_reason", "stop"}}}}};
        res.set_content(reply.dump(), "application/json");
        --in_flight_;
    }

    Responder responder_;
    Delay delay_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::vector<int> status_script_;
    std::string fail_substring_;
    int fail_status_ = 500;
    std::string raw_body_;
    std::atomic<std::size_t> script_pos_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::atomic<int> request_count_{0};
    mutable std::mutex prompt_mutex_;
    std::vector<std::string> prompts_;
    std::vector<std::string> bodies_;
    std::string last_authorization_;
};

}  // namespace mock
