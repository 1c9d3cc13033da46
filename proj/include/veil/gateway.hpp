#pragma once

// Anonymizing chat gateway: rewrites user-role message content with the
// configured anonymizer (one request-scoped substitution table across all
// messages), forwards the sanitized body upstream, inverse-maps the
// response content, and appends one audit record per request.
//
// Fail mode is closed and not configurable: on any anonymizer failure
// nothing is forwarded. An egress guard re-scans the outbound body for
// every table original and rule-detected surface before it leaves.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "veil/chat_client.hpp"
#include "veil/corpus.hpp"
#include "veil/pipeline.hpp"
#include "veil/rules.hpp"
#include "veil/sanitized.hpp"
#include "veil/subtable.hpp"

namespace veil::gateway {

enum class AnonymizerMode { rule_substitute, llm };

inline std::optional<AnonymizerMode> anonymizer_mode_from_string(
    std::string_view s) {
    if (s == "rule_substitute") return AnonymizerMode::rule_substitute;
    if (s == "llm") return AnonymizerMode::llm;
    return std::nullopt;
}

struct GatewayConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::string upstream_base_url;
    std::string upstream_api_key;
    AnonymizerMode anonymizer = AnonymizerMode::rule_substitute;
    std::string rules_path;  // empty -> built-in default rules
    double threshold = 0.5;
    ChatEndpoint anonymizer_endpoint;  // llm mode
    int anonymizer_retries = 3;
    std::string audit_log_path;
    std::uint64_t seed = 7;
    int upstream_timeout_seconds = 300;
};

inline GatewayConfig gateway_config_from_json(const nlohmann::json& j) {
    GatewayConfig cfg;
    if (j.contains("listen")) {
        const auto& l = j["listen"];
        if (l.contains("host")) cfg.listen_host = l["host"].get<std::string>();
        if (l.contains("port")) cfg.listen_port = l["port"].get<int>();
    }
    if (j.contains("upstream")) {
        const auto& u = j["upstream"];
        cfg.upstream_base_url = u.at("base_url").get<std::string>();
        if (u.contains("api_key"))
            cfg.upstream_api_key = u["api_key"].get<std::string>();
    }
    if (j.contains("fail_mode") &&
        j["fail_mode"].get<std::string>() != "closed")
        throw std::runtime_error("gateway fail mode is always 'closed'");
    if (j.contains("anonymizer")) {
        const auto& a = j["anonymizer"];
        if (a.contains("mode")) {
            auto mode =
                anonymizer_mode_from_string(a["mode"].get<std::string>());
            if (!mode)
                throw std::runtime_error("unknown anonymizer mode '" +
                                         a["mode"].get<std::string>() + "'");
            cfg.anonymizer = *mode;
        }
        if (a.contains("rules")) cfg.rules_path = a["rules"].get<std::string>();
        if (a.contains("threshold"))
            cfg.threshold = a["threshold"].get<double>();
        if (a.contains("endpoint")) {
            const auto& e = a["endpoint"];
            cfg.anonymizer_endpoint.base_url =
                e.at("base_url").get<std::string>();
            if (e.contains("model"))
                cfg.anonymizer_endpoint.model = e["model"].get<std::string>();
            if (e.contains("api_key"))
                cfg.anonymizer_endpoint.api_key =
                    e["api_key"].get<std::string>();
        }
        if (a.contains("retries"))
            cfg.anonymizer_retries = a["retries"].get<int>();
    }
    if (j.contains("audit_log"))
        cfg.audit_log_path = j["audit_log"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    return cfg;
}

inline GatewayConfig load_gateway_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open gateway config: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return gateway_config_from_json(j);
}

// Counts only; original surface forms never enter audit records.
struct AuditRecord {
    std::string request_id;
    std::string timestamp;
    std::string anonymizer_method;
    std::size_t table_entries = 0;
    std::vector<std::string> validation_flags;
    int upstream_status = 0;  // 0 when nothing was forwarded
};

class AuditLog {
public:
    explicit AuditLog(std::string path) : path_(std::move(path)) {}

    void append(const AuditRecord& record) {
        nlohmann::ordered_json j;
        j["request_id"] = record.request_id;
        j["timestamp"] = record.timestamp;
        j["anonymizer_method"] = record.anonymizer_method;
        j["table_entries"] = record.table_entries;
        j["validation_flags"] = record.validation_flags;
        j["upstream_status"] = record.upstream_status;
        std::lock_guard<std::mutex> lock(mutex_);
        records_.push_back(record);
        if (!path_.empty()) {
            std::ofstream out(path_, std::ios::app);
            out << j.dump() << '\n';
        }
    }

    std::vector<AuditRecord> records() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_;
    }

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::vector<AuditRecord> records_;
};

struct GatewayResponse {
    int status = 200;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

namespace detail {

struct AnonymizedMessages {
    bool ok = false;
    std::vector<std::string> sanitized;
    SubstitutionTable table;
    std::vector<std::string> detected_surfaces;
    std::string error;
};

// All user messages anonymized as one ordered sequence sharing one table.
inline AnonymizedMessages anonymize_messages(
    const std::vector<std::string>& user_contents, const GatewayConfig& cfg,
    const std::vector<rules::RecognizerRule>& rule_set) {
    AnonymizedMessages out;
    Conversation pseudo;
    pseudo.id = "request";
    for (std::size_t i = 0; i < user_contents.size(); ++i)
        pseudo.utterances.push_back(
            {i, Speaker::customer, user_contents[i]});

    if (cfg.anonymizer == AnonymizerMode::rule_substitute) {
        auto sanitized = rules::anonymize_rule_based(
            pseudo, rule_set, cfg.threshold, rules::RuleMode::substitute,
            cfg.seed);
        out.ok = true;
        out.sanitized = sanitized.sanitized_utterances;
        out.table = sanitized.table;
    } else {
        DecodingParams params;
        params.seed = cfg.seed;
        auto sanitized = llm::anonymize_llm(cfg.anonymizer_endpoint, pseudo,
                                            llm::PromptTemplate::builtin(),
                                            params, cfg.anonymizer_retries);
        if (sanitized.partial()) {
            out.error = "anonymizer failed on " +
                        std::to_string(sanitized.failed_indices.size()) +
                        " message(s)";
            return out;
        }
        out.ok = true;
        out.sanitized = sanitized.sanitized_utterances;
        out.table = sanitized.table;
    }

    for (const auto& span : rules::detect_spans(pseudo, rule_set,
                                                cfg.threshold))
        out.detected_surfaces.push_back(span.surface);
    return out;
}

inline std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

class GatewayHandler {
public:
    GatewayHandler(GatewayConfig config, std::shared_ptr<AuditLog> audit)
        : config_(std::move(config)), audit_(std::move(audit)) {
        rule_set_ = config_.rules_path.empty()
                        ? rules::default_rules()
                        : rules::load_rules(config_.rules_path);
    }

    const GatewayConfig& config() const { return config_; }

    GatewayResponse handle_chat_request(const std::string& request_body) {
        AuditRecord record;
        record.request_id = next_request_id();
        record.timestamp = detail::now_iso8601();
        record.anonymizer_method =
            config_.anonymizer == AnonymizerMode::llm ? "llm"
                                                      : "rule_substitute";

        nlohmann::json req;
        try {
            req = nlohmann::json::parse(request_body);
        } catch (const nlohmann::json::exception& e) {
            record.validation_flags.push_back("bad_request");
            audit_->append(record);
            return {400,
                    nlohmann::json{{"error", std::string("bad request: ") +
                                                 e.what()}}
                        .dump(),
                    {}};
        }
        if (!req.contains("messages") || !req["messages"].is_array()) {
            record.validation_flags.push_back("bad_request");
            audit_->append(record);
            return {400, R"({"error":"bad request: missing messages"})", {}};
        }

        // Collect user-role contents in order; system prompts pass through.
        std::vector<std::string> user_contents;
        std::vector<std::size_t> user_positions;
        for (std::size_t i = 0; i < req["messages"].size(); ++i) {
            const auto& m = req["messages"][i];
            if (m.contains("role") && m["role"] == "user" &&
                m.contains("content") && m["content"].is_string()) {
                user_contents.push_back(m["content"].get<std::string>());
                user_positions.push_back(i);
            }
        }

        auto anon = detail::anonymize_messages(user_contents, config_,
                                               rule_set_);
        if (!anon.ok) {
            record.validation_flags.push_back("anonymizer_failure");
            audit_->append(record);
            return {502,
                    nlohmann::json{
                        {"error", "anonymizer failure: " + anon.error}}
                        .dump(),
                    {}};
        }
        record.table_entries = anon.table.size();

        nlohmann::json forwarded = req;
        for (std::size_t k = 0; k < user_positions.size(); ++k)
            forwarded["messages"][user_positions[k]]["content"] =
                anon.sanitized[k];
        std::string forwarded_body = forwarded.dump();

        // Egress guard: no recorded original and no detected surface may
        // appear in the outbound bytes.
        for (const auto& e : anon.table.entries()) {
            if (contains_bounded_ci(forwarded_body, e.original)) {
                record.validation_flags.push_back("egress_blocked");
                audit_->append(record);
                return {502, R"({"error":"egress guard: blocked request"})",
                        {}};
            }
        }
        for (const auto& surface : anon.detected_surfaces) {
            if (anon.table.find_surrogate(surface)) continue;
            if (contains_bounded_ci(forwarded_body, surface)) {
                record.validation_flags.push_back("egress_blocked");
                audit_->append(record);
                return {502, R"({"error":"egress guard: blocked request"})",
                        {}};
            }
        }

        httplib::Client upstream(config_.upstream_base_url);
        upstream.set_connection_timeout(10, 0);
        upstream.set_read_timeout(config_.upstream_timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.upstream_api_key.empty())
            headers.emplace("Authorization",
                            "Bearer " + config_.upstream_api_key);
        auto res = upstream.Post("/v1/chat/completions", headers,
                                 forwarded_body, "application/json");
        if (!res) {
            record.validation_flags.push_back("upstream_unreachable");
            audit_->append(record);
            return {502, R"({"error":"upstream unreachable"})", {}};
        }
        record.upstream_status = res->status;
        if (res->status < 200 || res->status >= 300) {
            record.validation_flags.push_back("upstream_error");
            audit_->append(record);
            return {res->status,
                    nlohmann::json{{"error", "upstream status " +
                                                 std::to_string(res->status)}}
                        .dump(),
                    {}};
        }

        GatewayResponse response;
        response.status = res->status;
        try {
            auto body = nlohmann::json::parse(res->body);
            if (body.contains("choices")) {
                if (anon.table.has_inverse_collisions()) {
                    record.validation_flags.push_back("inverse_collision");
                    response.headers.emplace_back(
                        "X-Anon-Warning",
                        "inverse collision: response left surrogate-mapped");
                } else {
                    for (auto& choice : body["choices"]) {
                        if (choice.contains("message") &&
                            choice["message"].contains("content") &&
                            choice["message"]["content"].is_string()) {
                            choice["message"]["content"] = apply_inverse(
                                choice["message"]["content"]
                                    .get<std::string>(),
                                anon.table);
                        }
                    }
                }
            }
            response.body = body.dump();
        } catch (const nlohmann::json::exception&) {
            record.validation_flags.push_back("opaque_upstream_body");
            response.body = res->body;
        }
        audit_->append(record);
        return response;
    }

private:
    std::string next_request_id() {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "req-%08llu",
                      static_cast<unsigned long long>(counter_.fetch_add(1)));
        return buf;
    }

    GatewayConfig config_;
    std::shared_ptr<AuditLog> audit_;
    std::vector<rules::RecognizerRule> rule_set_;
    std::atomic<std::uint64_t> counter_{1};
};

// HTTP front for the handler; binds an ephemeral port when configured
// port is 0.
class GatewayServer {
public:
    GatewayServer(GatewayConfig config, std::shared_ptr<AuditLog> audit)
        : handler_(std::move(config), audit) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req,
                            httplib::Response& res) {
                         auto out = handler_.handle_chat_request(req.body);
                         res.status = out.status;
                         for (const auto& [k, v] : out.headers)
                             res.set_header(k, v);
                         res.set_content(out.body, "application/json");
                     });
    }

    // Starts in a background thread; returns the bound port.
    int start() {
        const auto& cfg = handler_.config();
        if (cfg.listen_port == 0) {
            port_ = server_.bind_to_any_port(cfg.listen_host);
        } else {
            if (!server_.bind_to_port(cfg.listen_host, cfg.listen_port))
                throw std::runtime_error("cannot bind gateway port " +
                                         std::to_string(cfg.listen_port));
            port_ = cfg.listen_port;
        }
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    // Blocking serve for the CLI path.
    void run() {
        const auto& cfg = handler_.config();
        if (!server_.listen(cfg.listen_host, cfg.listen_port))
            throw std::runtime_error("gateway listen failed");
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    ~GatewayServer() { stop(); }

    int port() const { return port_; }
    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }
    GatewayHandler& handler() { return handler_; }

private:
    GatewayHandler handler_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace veil::gateway
