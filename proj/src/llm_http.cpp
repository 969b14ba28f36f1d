#include "mathforge/error.hpp"
#include "mathforge/synthesis.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace mathforge {

HttpLlmClient::HttpLlmClient(HttpClientConfig config) : config_(std::move(config)) {}

std::string HttpLlmClient::complete(const std::string& prompt, const CompletionParams& params) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw Error(ErrorCode::ConfigInvalid, config_.api_key_env + " is not set");

    if (config_.requests_per_second > 0) {
        auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / config_.requests_per_second));
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(rate_mutex_);
            auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_slot_);
            next_slot_ = slot + interval;
        }
        std::this_thread::sleep_until(slot);
    }

    Json body;
    body["model"] = params.model;
    body["temperature"] = params.temperature;
    body["messages"] = Json::array({Json{{"role", "user"}, {"content", prompt}}});

    httplib::Client client(config_.base_url);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(params.timeout).count();
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::ClientError, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(ErrorCode::ClientError, "HTTP " + std::to_string(res->status));
    try {
        auto reply = Json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ClientError, std::string("malformed completion: ") + e.what());
    }
}

} // namespace mathforge
