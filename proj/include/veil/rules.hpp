#pragma once

// Rule-based de-identification baseline: regex, dictionary and checksum
// recognizers over the eight PII categories, hotword confidence boosting,
// deterministic overlap resolution, and redact/substitute operators.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "veil/corpus.hpp"
#include "veil/sanitized.hpp"
#include "veil/subtable.hpp"

namespace veil::rules {

enum class RuleKind { regex, dictionary, checksum, context_boosted };

inline std::string_view to_string(RuleKind k) {
    switch (k) {
        case RuleKind::regex: return "regex";
        case RuleKind::dictionary: return "dictionary";
        case RuleKind::checksum: return "checksum";
        default: return "context_boosted";
    }
}

inline std::optional<RuleKind> rule_kind_from_string(std::string_view s) {
    if (s == "regex") return RuleKind::regex;
    if (s == "dictionary") return RuleKind::dictionary;
    if (s == "checksum") return RuleKind::checksum;
    if (s == "context_boosted") return RuleKind::context_boosted;
    return std::nullopt;
}

inline constexpr double kHotwordBoost = 0.2;

struct RecognizerRule {
    PiiCategory category = PiiCategory::email;
    RuleKind kind = RuleKind::regex;
    std::string pattern;                 // regex/checksum kinds
    std::vector<std::string> words;      // dictionary kind
    double base_confidence = 0.5;
    std::vector<std::string> hotwords;   // lowercase
    std::size_t hotword_window = 3;      // token distance

    std::shared_ptr<const std::regex> compiled;

    void compile() {
        if (!(base_confidence >= 0.0 && base_confidence <= 1.0))
            throw std::invalid_argument("rule confidence outside [0,1]");
        if (kind == RuleKind::dictionary) {
            if (words.empty())
                throw std::invalid_argument("dictionary rule with empty list");
            return;
        }
        if (pattern.empty())
            throw std::invalid_argument("pattern rule with empty pattern");
        try {
            compiled = std::make_shared<const std::regex>(
                pattern, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
            throw std::invalid_argument("rule pattern '" + pattern +
                                        "' does not compile: " + e.what());
        }
    }
};

struct DetectedSpan {
    std::size_t utterance_index = 0;
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    PiiCategory category = PiiCategory::email;
    double confidence = 0.0;
    std::string surface;

    std::size_t length() const { return end - start; }
    bool overlaps(const DetectedSpan& other) const {
        return utterance_index == other.utterance_index &&
               start < other.end && other.start < end;
    }
};

// ---------------------------------------------------------------------------
// Default rule set

inline bool luhn_valid(std::string_view digits) {
    int sum = 0, parity = static_cast<int>(digits.size()) % 2;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        int d = digits[i] - '0';
        if (static_cast<int>(i) % 2 == parity) {
            d *= 2;
            if (d > 9) d -= 9;
        }
        sum += d;
    }
    return sum % 10 == 0;
}

inline std::vector<RecognizerRule> default_rules() {
    std::vector<RecognizerRule> out;
    auto add = [&](RecognizerRule r) {
        r.compile();
        out.push_back(std::move(r));
    };
    add({PiiCategory::email, RuleKind::regex,
         R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,})",
         {}, 0.9, {}, 3});
    add({PiiCategory::phone, RuleKind::regex,
         R"((\+?\d{1,2}[\-. ])?\(?\d{3}\)?[\-. ]\d{3}[\-. ]\d{4})",
         {}, 0.75, {"phone", "call", "reach", "cell", "mobile"}, 5});
    add({PiiCategory::zip_code, RuleKind::context_boosted, R"(\b\d{5}\b)",
         {}, 0.4, {"zip", "zipcode", "postal"}, 3});
    add({PiiCategory::account_id, RuleKind::context_boosted, R"(\b\d{6,12}\b)",
         {}, 0.35, {"account", "acct", "id"}, 4});
    add({PiiCategory::order_id, RuleKind::context_boosted, R"(\b\d{6,12}\b)",
         {}, 0.35, {"order", "purchase", "shipment"}, 4});
    add({PiiCategory::street_address, RuleKind::regex,
         R"(\b\d{1,5} ([A-Z][A-Za-z]+ ){1,3}(St|Street|Ave|Avenue|Rd|Road|Blvd|Boulevard|Lane|Ln|Drive|Dr|Court|Ct|Way|Place|Pl|Terrace|Loop|Row)\b\.?)",
         {}, 0.8, {}, 3});
    {
        RecognizerRule name;
        name.category = PiiCategory::customer_name;
        name.kind = RuleKind::dictionary;
        name.base_confidence = 0.7;
        for (auto w : lex::kFirstNames) name.words.emplace_back(w);
        add(std::move(name));
    }
    // Usernames: letters-then-digit handle, only trusted near a hotword.
    add({PiiCategory::username, RuleKind::context_boosted,
         R"(\b[a-z][a-z0-9_]{3,}\d[a-z0-9_]*\b)",
         {}, 0.4, {"username", "login", "handle", "user"}, 4});
    return out;
}

// ---------------------------------------------------------------------------
// Rules file: JSON array of rule objects.

inline RecognizerRule rule_from_json(const json& j) {
    RecognizerRule r;
    auto cat = category_from_string(j.at("category").get<std::string>());
    if (!cat)
        throw std::invalid_argument("unknown rule category '" +
                                    j.at("category").get<std::string>() + "'");
    r.category = *cat;
    auto kind = rule_kind_from_string(j.at("kind").get<std::string>());
    if (!kind)
        throw std::invalid_argument("unknown rule kind '" +
                                    j.at("kind").get<std::string>() + "'");
    r.kind = *kind;
    if (j.contains("pattern")) r.pattern = j["pattern"].get<std::string>();
    if (j.contains("words"))
        r.words = j["words"].get<std::vector<std::string>>();
    if (j.contains("confidence"))
        r.base_confidence = j["confidence"].get<double>();
    if (j.contains("hotwords"))
        r.hotwords = j["hotwords"].get<std::vector<std::string>>();
    if (j.contains("window"))
        r.hotword_window = j["window"].get<std::size_t>();
    r.compile();
    return r;
}

inline std::vector<RecognizerRule> load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rules file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (!j.is_array())
        throw std::runtime_error(path + ": rules file must be a JSON array");
    std::vector<RecognizerRule> out;
    for (const auto& jr : j) out.push_back(rule_from_json(jr));
    return out;
}

inline std::string rule_set_hash(const std::vector<RecognizerRule>& rules) {
    std::uint64_t h = fnv1a64("rules");
    for (const auto& r : rules) {
        h = fnv1a64(to_string(r.category), h);
        h = fnv1a64(to_string(r.kind), h);
        h = fnv1a64(r.pattern, h);
        for (const auto& w : r.words) h = fnv1a64(w, h);
        h = fnv1a64(std::to_string(r.base_confidence), h);
        for (const auto& w : r.hotwords) h = fnv1a64(w, h);
        h = fnv1a64(std::to_string(r.hotword_window), h);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Detection

namespace detail {

struct Token {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string lower;  // edge punctuation stripped
};

inline std::vector<Token> tokenize_offsets(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() &&
               std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        std::size_t j = i;
        while (j < text.size() &&
               !std::isspace(static_cast<unsigned char>(text[j])))
            ++j;
        if (j > i) {
            Token t;
            t.start = i;
            t.end = j;
            t.lower = casefold(strip_edge_punct(text.substr(i, j - i)));
            out.push_back(std::move(t));
        }
        i = j;
    }
    return out;
}

inline bool hotword_near(const std::vector<Token>& tokens,
                         std::size_t span_start, std::size_t span_end,
                         const std::vector<std::string>& hotwords,
                         std::size_t window) {
    if (hotwords.empty()) return false;
    // Token index range covered by the span.
    std::size_t first = tokens.size(), last = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t].end > span_start && tokens[t].start < span_end) {
            first = std::min(first, t);
            last = std::max(last, t);
        }
    }
    if (first == tokens.size()) return false;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        std::size_t dist = (t < first) ? first - t
                         : (t > last)  ? t - last
                                       : 0;
        if (dist == 0 || dist > window) continue;
        for (const auto& hw : hotwords)
            if (tokens[t].lower == hw) return true;
    }
    return false;
}

inline bool capitalized_alpha(std::string_view w) {
    if (w.empty() || !std::isupper(static_cast<unsigned char>(w[0])))
        return false;
    for (char c : w)
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace detail

// All spans for one rule over one utterance, before thresholding.
inline void collect_rule_spans(const RecognizerRule& rule,
                               std::string_view text,
                               std::size_t utterance_index,
                               const std::vector<detail::Token>& tokens,
                               std::vector<DetectedSpan>* out) {
    auto push = [&](std::size_t start, std::size_t end) {
        if (end <= start) return;
        double conf = rule.base_confidence;
        if (detail::hotword_near(tokens, start, end, rule.hotwords,
                                 rule.hotword_window))
            conf = std::min(1.0, conf + kHotwordBoost);
        DetectedSpan span;
        span.utterance_index = utterance_index;
        span.start = start;
        span.end = end;
        span.category = rule.category;
        span.confidence = conf;
        span.surface = std::string(text.substr(start, end - start));
        out->push_back(std::move(span));
    };

    if (rule.kind == RuleKind::dictionary) {
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            auto word = strip_edge_punct(
                text.substr(tokens[t].start, tokens[t].end - tokens[t].start));
            bool hit = false;
            for (const auto& w : rule.words)
                if (word == w) { hit = true; break; }
            if (!hit) continue;
            std::size_t start =
                tokens[t].start +
                (word.data() - text.substr(tokens[t].start).data());
            std::size_t end = start + word.size();
            // Names extend over a following capitalized surname token.
            if (rule.category == PiiCategory::customer_name &&
                t + 1 < tokens.size()) {
                auto next = strip_edge_punct(text.substr(
                    tokens[t + 1].start, tokens[t + 1].end - tokens[t + 1].start));
                if (detail::capitalized_alpha(next))
                    end = tokens[t + 1].start +
                          (next.data() - text.substr(tokens[t + 1].start).data()) +
                          next.size();
            }
            push(start, end);
        }
        return;
    }

    auto begin = std::cregex_iterator(text.data(), text.data() + text.size(),
                                      *rule.compiled);
    for (auto it = begin; it != std::cregex_iterator(); ++it) {
        std::size_t start = static_cast<std::size_t>(it->position(0));
        std::size_t end = start + static_cast<std::size_t>(it->length(0));
        if (rule.kind == RuleKind::checksum &&
            !luhn_valid(digits_of(text.substr(start, end - start))))
            continue;
        push(start, end);
    }
}

// Non-overlapping spans with confidence >= threshold. Ties resolve by
// confidence, then span length, then earlier start, then category order.
inline std::vector<DetectedSpan> detect_spans(
    const Conversation& conversation,
    const std::vector<RecognizerRule>& rules, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw std::invalid_argument("threshold outside [0,1]");
    std::vector<DetectedSpan> kept;
    for (const auto& utt : conversation.utterances) {
        std::vector<DetectedSpan> candidates;
        auto tokens = detail::tokenize_offsets(utt.text);
        for (const auto& rule : rules)
            collect_rule_spans(rule, utt.text, utt.index, tokens, &candidates);
        std::erase_if(candidates, [&](const DetectedSpan& s) {
            return s.confidence < threshold;
        });
        std::sort(candidates.begin(), candidates.end(),
                  [](const DetectedSpan& a, const DetectedSpan& b) {
                      if (a.confidence != b.confidence)
                          return a.confidence > b.confidence;
                      if (a.length() != b.length()) return a.length() > b.length();
                      if (a.start != b.start) return a.start < b.start;
                      return static_cast<int>(a.category) <
                             static_cast<int>(b.category);
                  });
        std::vector<DetectedSpan> chosen;
        for (auto& c : candidates) {
            bool clash = false;
            for (const auto& k : chosen)
                if (c.overlaps(k)) { clash = true; break; }
            if (!clash) chosen.push_back(std::move(c));
        }
        std::sort(chosen.begin(), chosen.end(),
                  [](const DetectedSpan& a, const DetectedSpan& b) {
                      return a.start < b.start;
                  });
        for (auto& s : chosen) kept.push_back(std::move(s));
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Anonymization operators

enum class RuleMode { redact, substitute };

inline std::string redaction_placeholder(PiiCategory c) {
    std::string out = "[";
    for (char ch : to_string(c))
        out.push_back(static_cast<char>(
            std::toupper(static_cast<unsigned char>(ch))));
    out.push_back(']');
    return out;
}

inline SanitizedConversation anonymize_rule_based(
    const Conversation& conversation,
    const std::vector<RecognizerRule>& rules, double threshold, RuleMode mode,
    std::uint64_t seed) {
    SanitizedConversation result;
    result.conversation_id = conversation.id;
    result.method = mode == RuleMode::redact ? SanitizeMethod::rule_redact
                                             : SanitizeMethod::rule_substitute;
    result.table = SubstitutionTable(conversation.id);
    result.provenance.rule_hash = rule_set_hash(rules);
    result.provenance.seed = seed;

    for (const auto& utt : conversation.utterances) {
        // Consistency repair: map already-known originals first.
        std::string text = mode == RuleMode::substitute
                               ? apply_forward(utt.text, result.table)
                               : utt.text;
        Conversation single;
        single.id = conversation.id;
        single.utterances.push_back({0, utt.speaker, text});
        auto spans = detect_spans(single, rules, threshold);
        std::string out;
        std::size_t pos = 0;
        for (const auto& span : spans) {
            out.append(text, pos, span.start - pos);
            if (mode == RuleMode::redact) {
                out += redaction_placeholder(span.category);
            } else {
                // Never re-substitute a surrogate the table already owns.
                if (result.table.find_surrogate(span.surface)) {
                    out += span.surface;
                } else if (const auto* known =
                               result.table.find_original(span.surface)) {
                    out += known->surrogate;
                } else {
                    std::string surrogate = generate_surrogate(
                        span.category, span.surface, seed);
                    SubstitutionEntry entry{span.surface, surrogate,
                                            span.category, utt.index};
                    result.table.insert(entry);
                    // On an inverse collision the entry is rejected; fall
                    // back to whatever the table maps this surface to now.
                    if (const auto* e =
                            result.table.find_original(span.surface))
                        out += e->surrogate;
                    else
                        out += surrogate;
                }
            }
            pos = span.end;
        }
        out.append(text, pos, text.size() - pos);
        result.sanitized_utterances.push_back(std::move(out));
    }
    return result;
}

}  // namespace veil::rules
