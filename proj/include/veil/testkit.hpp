#pragma once

// Deterministic test doubles: chat-endpoint mock behaviors (oracle,
// identity, adversarial preamble, truncator, echo upstream, regex judge),
// an in-process HTTP server wrapper around them, and a recording upstream
// for egress assertions. The same behaviors back the standalone mock
// server binary.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "veil/corpus.hpp"
#include "veil/subtable.hpp"
#include "veil/text.hpp"

namespace veil::testkit {

enum class MockBehavior {
    oracle,
    identity,
    adversarial_preamble,
    truncator,
    echo_upstream,
    regex_judge,
};

inline std::optional<MockBehavior> behavior_from_string(std::string_view s) {
    if (s == "oracle") return MockBehavior::oracle;
    if (s == "identity") return MockBehavior::identity;
    if (s == "adversarial_preamble") return MockBehavior::adversarial_preamble;
    if (s == "truncator") return MockBehavior::truncator;
    if (s == "echo_upstream") return MockBehavior::echo_upstream;
    if (s == "regex_judge") return MockBehavior::regex_judge;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Regex judge primitives (also used directly by tests)

inline const std::regex& email_regex() {
    static const std::regex re(
        R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,})");
    return re;
}

inline const std::regex& username_regex() {
    static const std::regex re(R"(\b[a-z][a-z0-9_]{3,}\d[a-z0-9_]*\b)");
    return re;
}

inline bool judge_name_stopword(std::string_view w) {
    static const std::set<std::string, std::less<>> stop = {
        "The",  "This",  "That",   "Hello", "Hi",     "Thanks", "Thank",
        "Dear", "My",    "Your",   "Our",   "Order",  "Account","Please",
        "What", "When",  "Can",    "Could", "Would",  "Okay",   "Yes",
        "No",   "Sure",  "Sorry",  "Team",  "Support","Agent",  "Customer",
        // street suffixes, so addresses never read as person names
        "St",   "Ave",   "Rd",     "Blvd",  "Lane",   "Dr",     "Ct",
        "Way",  "Place", "Terrace","Loop",  "Row",    "Street", "Avenue",
        "Road", "Court", "Drive",  "Boulevard", "Ln",  "Pl",
    };
    return stop.count(w) > 0;
}

inline bool judge_capitalized_alpha(std::string_view w) {
    if (w.size() < 2 || !std::isupper(static_cast<unsigned char>(w[0])))
        return false;
    for (std::size_t i = 1; i < w.size(); ++i)
        if (!std::islower(static_cast<unsigned char>(w[i]))) return false;
    return true;
}

// Entity extraction: emails and digit-bearing usernames by regex, person
// names as capitalized non-stopword bigrams. Surfaces are returned
// verbatim so surrogate answers stay inverse-mappable.
inline std::set<std::string> judge_entities(const std::string& text) {
    std::set<std::string> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(),
                                        email_regex());
         it != std::sregex_iterator(); ++it)
        out.insert(it->str());

    // Usernames never overlap the email local part: mask emails first.
    std::string masked = std::regex_replace(text, email_regex(), " ");
    for (auto it = std::sregex_iterator(masked.begin(), masked.end(),
                                        username_regex());
         it != std::sregex_iterator(); ++it)
        out.insert(it->str());

    auto words = split_words(text);
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
        auto a = strip_edge_punct(words[i]);
        auto b = strip_edge_punct(words[i + 1]);
        if (judge_capitalized_alpha(a) && judge_capitalized_alpha(b) &&
            !judge_name_stopword(a) && !judge_name_stopword(b))
            out.insert(std::string(a) + " " + std::string(b));
    }
    return out;
}

inline std::string judge_dissatisfaction(const std::string& text) {
    static constexpr std::string_view kMarkers[] = {
        "angry",     "upset",     "frustrated", "terrible",  "awful",
        "unacceptable", "complaint", "annoyed", "disappointed", "furious",
        "worst",     "horrible",  "ridiculous", "unhappy",
    };
    auto lower = casefold(text);
    for (auto m : kMarkers)
        if (contains_bounded(lower, m)) return "yes";
    return "no";
}

inline std::string judge_completeness(const std::string& text) {
    // Complete when the closing line reads like a sign-off.
    std::string last_line;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            if (!trim(current).empty()) last_line = current;
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!trim(current).empty()) last_line = current;
    auto lower = casefold(last_line);
    static constexpr std::string_view kClosers[] = {
        "bye", "goodbye", "thanks", "thank you", "welcome", "great day",
    };
    for (auto m : kClosers)
        if (lower.find(m) != std::string::npos) return "complete";
    return "interrupted";
}

// ---------------------------------------------------------------------------
// Behavior core

struct MockResponse {
    int status = 200;
    std::string body;
};

inline std::string chat_completion_body(const std::string& content) {
    nlohmann::json j;
    j["id"] = "mock-0";
    j["object"] = "chat.completion";
    j["choices"] = nlohmann::json::array(
        {{{"index", 0},
          {"message", {{"role", "assistant"}, {"content", content}}},
          {"finish_reason", "stop"}}});
    return j.dump();
}

// Pulls the utterance out of the anonymization prompt (text after the last
// "Text:"); falls back to the whole content for bare requests.
inline std::string extract_prompt_payload(const std::string& content) {
    auto pos = content.rfind("Text:");
    if (pos == std::string::npos) return content;
    return content.substr(pos + 5);
}

// Annotation-driven perfect substitution over one utterance.
inline std::string oracle_rewrite(const std::string& utterance,
                                  const Corpus& fixture, std::uint64_t seed) {
    std::vector<SubstitutionEntry> pairs;
    for (const auto& conv : fixture.conversations) {
        for (const auto& a : conv.annotations) {
            SubstitutionEntry e;
            e.original = a.value;
            e.surrogate = generate_surrogate(a.category, a.value, seed);
            pairs.push_back(std::move(e));
        }
    }
    std::vector<detail::Replacement> repls;
    repls.reserve(pairs.size());
    for (const auto& p : pairs) repls.push_back({p.original, p.surrogate});
    return detail::replace_all(utterance, std::move(repls));
}

inline MockResponse mock_respond(MockBehavior behavior,
                                 const std::string& request_body,
                                 const Corpus* fixture, std::uint64_t seed) {
    nlohmann::json req;
    try {
        req = nlohmann::json::parse(request_body);
    } catch (const nlohmann::json::exception& e) {
        return {400, nlohmann::json{{"error", std::string("bad request: ") +
                                                  e.what()}}
                         .dump()};
    }
    std::string content;
    try {
        const auto& messages = req.at("messages");
        for (const auto& m : messages)
            if (m.at("role").get<std::string>() == "user")
                content = m.at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        return {400, R"({"error":"bad request: no user message"})"};
    }

    switch (behavior) {
        case MockBehavior::identity: {
            return {200, chat_completion_body(extract_prompt_payload(content))};
        }
        case MockBehavior::oracle: {
            auto payload = extract_prompt_payload(content);
            if (!fixture) return {200, chat_completion_body(payload)};
            return {200, chat_completion_body(
                             oracle_rewrite(payload, *fixture, seed))};
        }
        case MockBehavior::adversarial_preamble: {
            auto payload = extract_prompt_payload(content);
            std::string core = fixture ? oracle_rewrite(payload, *fixture, seed)
                                       : payload;
            return {200, chat_completion_body("Sure, here is the text: " +
                                              core)};
        }
        case MockBehavior::truncator: {
            auto payload = extract_prompt_payload(content);
            return {200, chat_completion_body(
                             payload.substr(0, payload.size() / 2))};
        }
        case MockBehavior::echo_upstream: {
            return {200, chat_completion_body(content)};
        }
        case MockBehavior::regex_judge: {
            std::string text = content;
            auto pos = content.find("Conversation:\n");
            if (pos != std::string::npos)
                text = content.substr(pos + 14);
            auto lower = casefold(content.substr(0, pos));
            std::string answer;
            if (lower.find("dissatisfaction") != std::string::npos) {
                answer = judge_dissatisfaction(text);
            } else if (lower.find("interrupted") != std::string::npos ||
                       lower.find("complete") != std::string::npos) {
                answer = judge_completeness(text);
            } else {
                auto entities = judge_entities(text);
                if (entities.empty()) {
                    answer = "none";
                } else {
                    for (const auto& e : entities) {
                        if (!answer.empty()) answer.push_back('\n');
                        answer += e;
                    }
                }
            }
            return {200, chat_completion_body(answer)};
        }
    }
    return {500, R"({"error":"unknown behavior"})"};
}

// ---------------------------------------------------------------------------
// In-process servers

class MockServer {
public:
    MockServer(MockBehavior behavior, const Corpus* fixture = nullptr,
               std::uint64_t seed = 0)
        : behavior_(behavior), fixture_(fixture), seed_(seed) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req,
                            httplib::Response& res) {
                         auto out = mock_respond(behavior_, req.body,
                                                 fixture_, seed_);
                         res.status = out.status;
                         res.set_content(out.body, "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockServer() { stop(); }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }
    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

private:
    MockBehavior behavior_;
    const Corpus* fixture_;
    std::uint64_t seed_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

// Echo upstream that also records every request body it sees, so tests can
// assert on exactly the bytes that were forwarded.
class RecordingUpstream {
public:
    RecordingUpstream() {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req,
                            httplib::Response& res) {
                         {
                             std::lock_guard<std::mutex> lock(mutex_);
                             bodies_.push_back(req.body);
                         }
                         auto out = mock_respond(MockBehavior::echo_upstream,
                                                 req.body, nullptr, 0);
                         res.status = out.status;
                         res.set_content(out.body, "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~RecordingUpstream() { stop(); }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }
    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

    std::vector<std::string> recorded_bodies() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return bodies_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::vector<std::string> bodies_;
};

}  // namespace veil::testkit
