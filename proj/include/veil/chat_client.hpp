#pragma once

// Minimal chat-completions client. POSTs to {base_url}/v1/chat/completions
// with {model, messages, temperature, seed, max_tokens} and reads
// choices[0].message.content. Endpoints come from config or the
// ANON_LLM_* / ANON_JUDGE_* environment variables.

#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

namespace veil {

struct DecodingParams {
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    int max_tokens = 1024;
};

struct ChatEndpoint {
    std::string base_url;
    std::string model;
    std::string api_key;
    int timeout_seconds = 120;

    bool configured() const { return !base_url.empty(); }
};

inline std::string env_or(const char* name, const std::string& fallback = "") {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

inline ChatEndpoint llm_endpoint_from_env() {
    ChatEndpoint ep;
    ep.base_url = env_or("ANON_LLM_BASE_URL");
    ep.model = env_or("ANON_LLM_MODEL", "local-model");
    ep.api_key = env_or("ANON_LLM_API_KEY");
    return ep;
}

inline ChatEndpoint judge_endpoint_from_env() {
    ChatEndpoint ep;
    ep.base_url = env_or("ANON_JUDGE_BASE_URL");
    ep.model = env_or("ANON_JUDGE_MODEL", "judge-model");
    ep.api_key = env_or("ANON_JUDGE_API_KEY");
    return ep;
}

struct ChatResult {
    bool ok = false;
    int status = 0;       // 0 on transport failure
    std::string content;  // assistant message on success
    std::string error;

    static ChatResult failure(int status, std::string error) {
        ChatResult r;
        r.status = status;
        r.error = std::move(error);
        return r;
    }
};

inline ChatResult chat_complete(const ChatEndpoint& endpoint,
                                const std::string& prompt,
                                const DecodingParams& params = {}) {
    if (!endpoint.configured())
        return ChatResult::failure(0, "chat endpoint not configured");
    nlohmann::json body;
    body["model"] = endpoint.model;
    body["messages"] = nlohmann::json::array(
        {{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = params.temperature;
    if (params.seed) body["seed"] = *params.seed;
    body["max_tokens"] = params.max_tokens;

    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout_seconds, 0);
    client.set_read_timeout(endpoint.timeout_seconds, 0);
    httplib::Headers headers;
    if (!endpoint.api_key.empty())
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);

    auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                           "application/json");
    if (!res)
        return ChatResult::failure(
            0, "transport error: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        return ChatResult::failure(res->status,
                                   "upstream status " +
                                       std::to_string(res->status));
    try {
        auto j = nlohmann::json::parse(res->body);
        const auto& choices = j.at("choices");
        if (choices.empty())
            return ChatResult::failure(res->status, "no choices in response");
        ChatResult r;
        r.ok = true;
        r.status = res->status;
        r.content = choices[0].at("message").at("content").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        return ChatResult::failure(res->status,
                                   std::string("bad response body: ") +
                                       e.what());
    }
}

}  // namespace veil
