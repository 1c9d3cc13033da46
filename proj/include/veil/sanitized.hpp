#pragma once

// Sanitization output carrier shared by the rule-based and LLM anonymizers,
// plus the on-disk artifact format (one conversation per JSONL line, with
// the substitution table in a `<conversation_id>.subtable.jsonl` sidecar).
//
// Fail-closed rule: an utterance whose sanitization failed is carried and
// serialized as a fixed marker, never as its original text.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "veil/corpus.hpp"
#include "veil/subtable.hpp"

namespace veil {

enum class SanitizeMethod { llm, rule_redact, rule_substitute, external };

inline std::string_view to_string(SanitizeMethod m) {
    switch (m) {
        case SanitizeMethod::llm: return "llm";
        case SanitizeMethod::rule_redact: return "rule_redact";
        case SanitizeMethod::rule_substitute: return "rule_substitute";
        default: return "external";
    }
}

inline std::optional<SanitizeMethod> method_from_string(std::string_view s) {
    if (s == "llm") return SanitizeMethod::llm;
    if (s == "rule_redact") return SanitizeMethod::rule_redact;
    if (s == "rule_substitute") return SanitizeMethod::rule_substitute;
    if (s == "external") return SanitizeMethod::external;
    return std::nullopt;
}

inline constexpr std::string_view kFailedUtteranceMarker =
    "[SANITIZATION_FAILED]";

struct Provenance {
    std::string model_id;
    std::string prompt_hash;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    std::string rule_hash;
    std::string timestamp;
};

struct SanitizedConversation {
    std::string conversation_id;
    std::vector<std::string> sanitized_utterances;
    std::vector<std::size_t> failed_indices;
    SubstitutionTable table;
    SanitizeMethod method = SanitizeMethod::external;
    Provenance provenance;

    bool partial() const { return !failed_indices.empty(); }

    std::string joined_text() const {
        std::string out;
        for (std::size_t i = 0; i < sanitized_utterances.size(); ++i) {
            if (i) out.push_back('\n');
            out += sanitized_utterances[i];
        }
        return out;
    }
};

inline ojson sanitized_to_json(const SanitizedConversation& s) {
    ojson j;
    j["id"] = s.conversation_id;
    j["method"] = std::string(to_string(s.method));
    j["utterances"] = s.sanitized_utterances;
    j["failed_indices"] = s.failed_indices;
    ojson prov;
    prov["model_id"] = s.provenance.model_id;
    prov["prompt_hash"] = s.provenance.prompt_hash;
    prov["temperature"] = s.provenance.temperature;
    prov["seed"] = s.provenance.seed ? ojson(*s.provenance.seed) : ojson(nullptr);
    prov["rule_hash"] = s.provenance.rule_hash;
    prov["timestamp"] = s.provenance.timestamp;
    j["provenance"] = std::move(prov);
    return j;
}

inline SanitizedConversation sanitized_from_json(const json& j) {
    SanitizedConversation s;
    s.conversation_id = j.at("id").get<std::string>();
    if (j.contains("method")) {
        if (auto m = method_from_string(j["method"].get<std::string>()))
            s.method = *m;
    }
    s.sanitized_utterances =
        j.at("utterances").get<std::vector<std::string>>();
    if (j.contains("failed_indices"))
        s.failed_indices =
            j["failed_indices"].get<std::vector<std::size_t>>();
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        if (p.contains("model_id"))
            s.provenance.model_id = p["model_id"].get<std::string>();
        if (p.contains("prompt_hash"))
            s.provenance.prompt_hash = p["prompt_hash"].get<std::string>();
        if (p.contains("temperature"))
            s.provenance.temperature = p["temperature"].get<double>();
        if (p.contains("seed") && !p["seed"].is_null())
            s.provenance.seed = p["seed"].get<std::uint64_t>();
        if (p.contains("rule_hash"))
            s.provenance.rule_hash = p["rule_hash"].get<std::string>();
        if (p.contains("timestamp"))
            s.provenance.timestamp = p["timestamp"].get<std::string>();
    }
    s.table = SubstitutionTable(s.conversation_id);
    return s;
}

inline void save_sanitized_jsonl(const std::vector<SanitizedConversation>& all,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    for (const auto& s : all) out << sanitized_to_json(s).dump() << '\n';
}

inline std::vector<SanitizedConversation> load_sanitized_jsonl(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sanitized file: " + path);
    std::vector<SanitizedConversation> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(sanitized_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw std::runtime_error(path + " line " +
                                     std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return out;
}

}  // namespace veil
