#pragma once

// The four evaluation axes over (original corpus, sanitized counterpart)
// pairs: privacy recall, sentiment label agreement, topic distance, and
// judge-based Q&A with inverse mapping for substitution methods.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "veil/chat_client.hpp"
#include "veil/corpus.hpp"
#include "veil/sanitized.hpp"
#include "veil/sentiment.hpp"
#include "veil/subtable.hpp"
#include "veil/topic.hpp"

namespace veil::metrics {

// ---------------------------------------------------------------------------
// Pairing helper

inline const SanitizedConversation& sanitized_for(
    const std::vector<SanitizedConversation>& sanitized,
    const std::string& conversation_id) {
    for (const auto& s : sanitized)
        if (s.conversation_id == conversation_id) return s;
    throw std::runtime_error("no sanitized counterpart for conversation '" +
                             conversation_id + "'");
}

// ---------------------------------------------------------------------------
// Privacy recall

inline std::string normalize_value(std::string_view value) {
    return casefold(strip_edge_punct(trim(value)));
}

// A ground-truth value survives when its normalized form still occurs in
// the sanitized conversation text, or, for numeric categories, when its
// digit sequence matches any digit sequence in that text.
inline bool value_survives(std::string_view value, bool numeric,
                           const std::string& sanitized_text,
                           const std::vector<std::string>& sanitized_digit_seqs) {
    auto needle = strip_edge_punct(trim(value));
    if (needle.empty()) return false;
    if (contains_bounded_ci(sanitized_text, needle)) return true;
    if (numeric) {
        auto digits = digits_of(needle);
        if (!digits.empty())
            for (const auto& seq : sanitized_digit_seqs)
                if (seq == digits) return true;
    }
    return false;
}

// Recall = removed / total over distinct (conversation, normalized value)
// terms. Duplicate annotations of one value in one conversation count once.
// A term carried by a failed (fail-closed) utterance was not successfully
// sanitized, so it counts as surviving even though the marker text hides it.
inline double privacy_recall(
    const Corpus& corpus, const std::vector<SanitizedConversation>& sanitized,
    std::size_t* term_count = nullptr) {
    std::size_t total = 0, removed = 0;
    for (const auto& conv : corpus.conversations) {
        const auto& san = sanitized_for(sanitized, conv.id);
        std::string text = san.joined_text();
        auto seqs = digit_sequences(text);
        std::string failed_text;
        for (auto idx : san.failed_indices) {
            if (idx < conv.utterances.size()) {
                failed_text += conv.utterances[idx].text;
                failed_text.push_back('\n');
            }
        }
        auto failed_seqs = digit_sequences(failed_text);
        std::map<std::string, bool> terms;  // normalized value -> numeric
        for (const auto& a : conv.annotations) {
            auto key = normalize_value(a.value);
            if (key.empty()) continue;
            auto [it, inserted] = terms.emplace(key, false);
            it->second = it->second || is_numeric_category(a.category);
        }
        for (const auto& [value, numeric] : terms) {
            ++total;
            bool survives = value_survives(value, numeric, text, seqs) ||
                            (!failed_text.empty() &&
                             value_survives(value, numeric, failed_text,
                                            failed_seqs));
            if (!survives) ++removed;
        }
    }
    if (total == 0)
        throw std::runtime_error(
            "privacy_recall undefined: corpus has no annotations");
    if (term_count) *term_count = total;
    return static_cast<double>(removed) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Sentiment agreement

inline double sentiment_accuracy(
    const Corpus& corpus, const std::vector<SanitizedConversation>& sanitized,
    const Lexicon& lexicon) {
    if (corpus.conversations.empty())
        throw std::runtime_error("sentiment_accuracy over empty corpus");
    std::size_t agree = 0;
    for (const auto& conv : corpus.conversations) {
        const auto& san = sanitized_for(sanitized, conv.id);
        auto before = sentiment_label(
            sentiment_compound(conv.joined_text(), lexicon));
        auto after = sentiment_label(
            sentiment_compound(san.joined_text(), lexicon));
        if (before == after) ++agree;
    }
    return static_cast<double>(agree) /
           static_cast<double>(corpus.conversations.size());
}

// ---------------------------------------------------------------------------
// Topic distance

struct TopicStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

inline TopicStats topic_distance_stats(
    const Corpus& corpus, const std::vector<SanitizedConversation>& sanitized,
    const TopicModel& model, const EmbeddingProvider& provider) {
    if (corpus.conversations.empty())
        throw std::runtime_error("topic_distance_stats over empty corpus");
    std::vector<double> distances;
    distances.reserve(corpus.conversations.size());
    for (const auto& conv : corpus.conversations) {
        const auto& san = sanitized_for(sanitized, conv.id);
        auto p = topic_vector(conv.joined_text(), model, provider);
        auto q = topic_vector(san.joined_text(), model, provider);
        distances.push_back(topic_distance(p, q));
    }
    TopicStats stats;
    for (double d : distances) stats.mean += d;
    stats.mean /= static_cast<double>(distances.size());
    double var = 0.0;
    for (double d : distances) var += (d - stats.mean) * (d - stats.mean);
    var /= static_cast<double>(distances.size());
    stats.stddev = std::sqrt(var);
    return stats;
}

// ---------------------------------------------------------------------------
// Q&A protocol

enum class QaKind { entities, dissatisfaction, completeness };

inline std::string_view to_string(QaKind k) {
    switch (k) {
        case QaKind::entities: return "entities";
        case QaKind::dissatisfaction: return "dissatisfaction";
        default: return "completeness";
    }
}

struct QaTemplates {
    std::string entities;
    std::string dissatisfaction;
    std::string completeness;

    // Same wording as the prompts/qa_v1/ files.
    static QaTemplates builtin() {
        QaTemplates t;
        t.entities =
            "List every customer name, username, and email address mentioned "
            "in the conversation below. Return one value per line with no "
            "extra text. If none are present, return exactly: none.\n\n"
            "Conversation:\n{conversation_text}";
        t.dissatisfaction =
            "Does any participant in the conversation below show signs of "
            "dissatisfaction? Answer with exactly one word: yes or no.\n\n"
            "Conversation:\n{conversation_text}";
        t.completeness =
            "Is the conversation below complete, or was it interrupted "
            "before reaching a resolution? Answer with exactly one word: "
            "complete or interrupted.\n\nConversation:\n{conversation_text}";
        return t;
    }

    static std::string load_one(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open qa template: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
            text.pop_back();
        return text;
    }

    static QaTemplates from_dir(const std::string& dir) {
        QaTemplates t;
        t.entities = load_one(dir + "/entities.txt");
        t.dissatisfaction = load_one(dir + "/dissatisfaction.txt");
        t.completeness = load_one(dir + "/completeness.txt");
        return t;
    }

    const std::string& for_kind(QaKind k) const {
        switch (k) {
            case QaKind::entities: return entities;
            case QaKind::dissatisfaction: return dissatisfaction;
            default: return completeness;
        }
    }
};

inline std::string fill_qa_template(const std::string& tmpl,
                                    const std::string& conversation_text) {
    static constexpr std::string_view kSlot = "{conversation_text}";
    auto pos = tmpl.find(kSlot);
    if (pos == std::string::npos)
        throw std::runtime_error("qa template missing {conversation_text}");
    return tmpl.substr(0, pos) + conversation_text +
           tmpl.substr(pos + kSlot.size());
}

struct QaItem {
    QaKind kind = QaKind::entities;
    std::string question;
    std::set<std::string> reference_set;  // entities kind
    std::string reference_label;          // label kinds
    bool entity_dependent = false;
};

// Entity answers parse as one value per line/comma; "none" means empty.
inline std::set<std::string> parse_entity_answer(const std::string& answer) {
    std::set<std::string> out;
    std::string current;
    auto flush = [&]() {
        auto v = normalize_value(current);
        if (!v.empty() && v != "none") out.insert(v);
        current.clear();
    };
    for (char c : answer) {
        if (c == '\n' || c == ',' || c == ';') flush();
        else current.push_back(c);
    }
    flush();
    return out;
}

inline std::string parse_label_answer(const std::string& answer, QaKind kind) {
    auto lower = casefold(answer);
    if (kind == QaKind::dissatisfaction) {
        if (contains_bounded(lower, "yes")) return "yes";
        if (contains_bounded(lower, "no")) return "no";
    } else {
        if (contains_bounded(lower, "interrupted")) return "interrupted";
        if (contains_bounded(lower, "complete")) return "complete";
    }
    auto tokens = normalized_tokens(lower);
    return tokens.empty() ? "" : tokens.front();
}

// Judge calls are abstracted so tests can drive the protocol without a
// server; the endpoint adapter is below.
using JudgeFn = std::function<std::optional<std::string>(const std::string&)>;

inline JudgeFn judge_from_endpoint(const ChatEndpoint& endpoint,
                                   const DecodingParams& params = {}) {
    return [endpoint, params](const std::string& prompt)
               -> std::optional<std::string> {
        auto res = chat_complete(endpoint, prompt, params);
        if (!res.ok) return std::nullopt;
        return res.content;
    };
}

// Exactly three items per conversation. Entity references come from the
// name/username/email annotations; the label references are judged on the
// original text. A judge failure drops the affected item with a warning.
inline std::vector<QaItem> build_qa_items(
    const Conversation& conversation, const QaTemplates& templates,
    const JudgeFn& judge, std::vector<std::string>* warnings = nullptr) {
    std::vector<QaItem> items;

    QaItem entities;
    entities.kind = QaKind::entities;
    entities.question = templates.entities;
    for (const auto& a : conversation.annotations) {
        if (a.category == PiiCategory::customer_name ||
            a.category == PiiCategory::username ||
            a.category == PiiCategory::email)
            entities.reference_set.insert(normalize_value(a.value));
    }
    entities.entity_dependent = !entities.reference_set.empty();
    items.push_back(std::move(entities));

    auto original_text = conversation.joined_text();
    for (QaKind kind : {QaKind::dissatisfaction, QaKind::completeness}) {
        auto prompt =
            fill_qa_template(templates.for_kind(kind), original_text);
        auto answer = judge(prompt);
        if (!answer) {
            if (warnings)
                warnings->push_back("judge failed on original for '" +
                                    conversation.id + "' (" +
                                    std::string(to_string(kind)) + ")");
            continue;
        }
        QaItem item;
        item.kind = kind;
        item.question = templates.for_kind(kind);
        item.reference_label = parse_label_answer(*answer, kind);
        item.entity_dependent = false;
        items.push_back(std::move(item));
    }
    return items;
}

struct QaOutcome {
    std::optional<double> qa_accuracy;
    std::optional<double> qa_true_accuracy;
    std::size_t evaluated_items = 0;
    std::size_t true_items = 0;
    std::size_t excluded_items = 0;  // judge failures
};

// For each item the judge answers the same question on the original and on
// the sanitized text. Entity answers over substituted text are passed
// through the inverse mapping before the normalized set comparison; label
// answers compare exactly after lowercasing. Q&A-true restricts to
// entity-dependent items whose original answer matches the annotation
// reference.
inline QaOutcome qa_evaluate(
    const Corpus& subset, const std::vector<SanitizedConversation>& sanitized,
    const QaTemplates& templates, const JudgeFn& judge,
    std::vector<std::string>* warnings = nullptr) {
    QaOutcome outcome;
    std::size_t matched = 0, true_matched = 0;

    for (const auto& conv : subset.conversations) {
        const auto& san = sanitized_for(sanitized, conv.id);
        auto items = build_qa_items(conv, templates, judge, warnings);
        outcome.excluded_items += 3 - items.size();
        auto sanitized_text = san.joined_text();
        auto original_text = conv.joined_text();

        for (const auto& item : items) {
            if (item.kind == QaKind::entities) {
                auto orig_answer = judge(
                    fill_qa_template(item.question, original_text));
                auto san_answer = judge(
                    fill_qa_template(item.question, sanitized_text));
                if (!orig_answer || !san_answer) {
                    ++outcome.excluded_items;
                    if (warnings)
                        warnings->push_back("judge failed on entities for '" +
                                            conv.id + "'");
                    continue;
                }
                std::string mapped = *san_answer;
                bool uses_table = (san.method == SanitizeMethod::llm ||
                                   san.method == SanitizeMethod::rule_substitute ||
                                   !san.table.empty());
                if (uses_table && !san.table.has_inverse_collisions())
                    mapped = apply_inverse(mapped, san.table);
                auto orig_set = parse_entity_answer(*orig_answer);
                auto san_set = parse_entity_answer(mapped);
                bool match = orig_set == san_set;
                ++outcome.evaluated_items;
                if (match) ++matched;
                // Verified correct: the judged original answer equals the
                // annotated reference.
                if (item.entity_dependent && orig_set == item.reference_set) {
                    ++outcome.true_items;
                    if (match) ++true_matched;
                }
            } else {
                auto san_answer = judge(
                    fill_qa_template(item.question, sanitized_text));
                if (!san_answer) {
                    ++outcome.excluded_items;
                    if (warnings)
                        warnings->push_back("judge failed on sanitized for '" +
                                            conv.id + "'");
                    continue;
                }
                auto label = parse_label_answer(*san_answer, item.kind);
                ++outcome.evaluated_items;
                if (label == item.reference_label) ++matched;
            }
        }
    }

    if (outcome.evaluated_items > 0)
        outcome.qa_accuracy = static_cast<double>(matched) /
                              static_cast<double>(outcome.evaluated_items);
    if (outcome.true_items > 0)
        outcome.qa_true_accuracy = static_cast<double>(true_matched) /
                                   static_cast<double>(outcome.true_items);
    return outcome;
}

// ---------------------------------------------------------------------------
// Report row

struct MetricCounts {
    std::size_t conversations = 0;
    std::size_t pii_values = 0;
    std::size_t qa_items = 0;
};

struct MetricReport {
    std::string method;
    bool available = true;
    std::optional<double> privacy_recall;
    std::optional<double> sentiment_accuracy;
    std::optional<double> topic_mean;
    std::optional<double> topic_std;
    std::optional<double> qa_accuracy;
    std::optional<double> qa_true_accuracy;
    std::optional<double> probe_mae;
    MetricCounts counts;
    std::size_t partial_conversations = 0;
    std::size_t qa_excluded = 0;
    std::string note;
};

}  // namespace veil::metrics
