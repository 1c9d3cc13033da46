#pragma once

// Prompted per-utterance substitution through a chat endpoint: prompt
// construction, candidate validation with light repairs, word-level
// LCS alignment to recover the substitution table, and the conversation
// driver with cross-utterance consistency repair.
//
// Utterances are processed strictly in order; the accumulated table is
// pre-applied to every later utterance so repeated entities keep one
// surrogate, which keeps the inverse mapping well-defined.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "veil/chat_client.hpp"
#include "veil/corpus.hpp"
#include "veil/rules.hpp"
#include "veil/sanitized.hpp"
#include "veil/subtable.hpp"
#include "veil/text.hpp"

namespace veil::llm {

// ---------------------------------------------------------------------------
// Prompt template

inline constexpr std::string_view kPlaceholder = "{original_text}";

// Default instruction; the same text ships at prompts/substitution_v1.txt.
inline constexpr std::string_view kDefaultTemplateV1 =
    "Redact and replace the words in the following text that correspond to "
    "numbers and nouns, such as names, surnames, numbers, usernames, "
    "codenames, emails, phone numbers, addresses, or other data. Replace all "
    "numbers, including dates, codes, etc. with other realistic but fake "
    "alternatives of the same type. Go word by word in the original text and "
    "replace the words with realistic and similar alternatives of the same "
    "type. For example, if the text contains a name like 'John Doe', replace "
    "it with 'David Smith'. For example, if the text contains an email like "
    "'johndoe@gmail.com', replace it with 'davidsmith@hotmail.com'. For "
    "example, if the text contains a number like '762991, 1st', replace it "
    "with a number of the same length '951910, 2nd'. Do not eliminate any "
    "sentence or part of the text, just replace the words with alternatives. "
    "Return only the modified text without any additional text or "
    "explanations. Text:{original_text}";

struct PromptTemplate {
    std::string template_text;
    std::string version;
    std::string content_hash;

    static std::string hash_of(std::string_view text) {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(text)));
        return buf;
    }

    static PromptTemplate make(std::string text, std::string version) {
        std::size_t first = text.find(kPlaceholder);
        if (first == std::string::npos)
            throw std::invalid_argument(
                "prompt template has no {original_text} placeholder");
        if (text.find(kPlaceholder, first + 1) != std::string::npos)
            throw std::invalid_argument(
                "prompt template has more than one placeholder");
        PromptTemplate t;
        t.content_hash = hash_of(text);
        t.template_text = std::move(text);
        t.version = std::move(version);
        return t;
    }

    static PromptTemplate builtin() {
        return make(std::string(kDefaultTemplateV1), "substitution_v1");
    }

    static PromptTemplate from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open prompt template: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
            text.pop_back();
        return make(std::move(text), path);
    }
};

// Substitutes the single placeholder; user text is never re-scanned, so a
// literal "{original_text}" inside the utterance survives untouched.
inline std::string build_prompt(const PromptTemplate& tmpl,
                                std::string_view utterance_text) {
    std::size_t slot = tmpl.template_text.find(kPlaceholder);
    std::string out = tmpl.template_text.substr(0, slot);
    out += utterance_text;
    out += tmpl.template_text.substr(slot + kPlaceholder.size());
    return out;
}

// ---------------------------------------------------------------------------
// Candidate validation

enum class ValidationStatus { ok, repaired, reject };

struct ValidationResult {
    ValidationStatus status = ValidationStatus::ok;
    std::string text;    // candidate after repairs
    std::string reason;  // set on reject
};

namespace detail {

inline bool strip_wrapping_quotes(std::string& s) {
    auto t = trim(s);
    auto wrapped = [&](std::string_view open, std::string_view close) {
        return t.size() > open.size() + close.size() &&
               t.substr(0, open.size()) == open &&
               t.substr(t.size() - close.size()) == close;
    };
    for (auto [open, close] :
         {std::pair<std::string_view, std::string_view>{"\"", "\""},
          {"'", "'"},
          {"“", "”"},
          {"`", "`"}}) {
        if (wrapped(open, close)) {
            s = std::string(
                t.substr(open.size(), t.size() - open.size() - close.size()));
            return true;
        }
    }
    return false;
}

// Drops a leading "Sure, here is ...:" style line (or prefix up to a colon).
inline bool strip_preamble(std::string& s) {
    static constexpr std::string_view kOpeners[] = {
        "sure",        "here is", "here's",   "certainly",
        "of course",   "okay",    "ok,",      "the modified text",
        "modified text", "text:",
    };
    auto t = trim(s);
    auto lower = casefold(t);
    for (auto opener : kOpeners) {
        if (lower.size() <= opener.size() ||
            lower.compare(0, opener.size(), opener) != 0)
            continue;
        if (opener == "text:") {
            s = std::string(trim(t.substr(5)));
            return true;
        }
        // Require the colon within the opener's clause.
        std::size_t colon = t.find(':');
        std::size_t newline = t.find('\n');
        if (colon != std::string::npos && colon < 64 &&
            (newline == std::string::npos || colon < newline)) {
            s = std::string(trim(t.substr(colon + 1)));
            return true;
        }
        if (newline != std::string::npos) {
            s = std::string(trim(t.substr(newline + 1)));
            return true;
        }
    }
    return false;
}

}  // namespace detail

// Checks run in order: wrapper repairs, token-count ratio in [0.5, 2.0],
// sentence count within +-1, then the PII echo guard: a candidate identical
// to an original that still carries a known or rule-detected PII value is
// rejected. Surfaces listed in `safe_values` (surrogates injected by the
// consistency repair) are fictitious and never trip the echo guard.
inline ValidationResult validate_candidate(
    const std::string& original, const std::string& candidate,
    const std::vector<std::string>& known_pii_values = {},
    const std::vector<rules::RecognizerRule>* echo_rules = nullptr,
    double echo_threshold = 0.5,
    const std::vector<std::string>& safe_values = {}) {
    ValidationResult result;
    result.text = std::string(trim(candidate));

    bool repaired = false;
    for (int pass = 0; pass < 4; ++pass) {
        bool changed = detail::strip_preamble(result.text);
        changed |= detail::strip_wrapping_quotes(result.text);
        if (!changed) break;
        repaired = true;
    }

    auto reject = [&](std::string reason) {
        result.status = ValidationStatus::reject;
        result.reason = std::move(reason);
        return result;
    };

    std::size_t orig_tokens = split_words(original).size();
    std::size_t cand_tokens = split_words(result.text).size();
    if (orig_tokens > 0) {
        if (cand_tokens == 0) return reject("empty");
        double ratio = static_cast<double>(cand_tokens) /
                       static_cast<double>(orig_tokens);
        if (ratio < 0.5 || ratio > 2.0) return reject("length_ratio");
        int sentence_delta =
            count_sentences(result.text) - count_sentences(original);
        if (sentence_delta < -1 || sentence_delta > 1)
            return reject("sentence_count");
    }

    if (result.text == original) {
        bool has_pii = false;
        for (const auto& v : known_pii_values)
            if (contains_bounded_ci(original, v)) { has_pii = true; break; }
        if (!has_pii && echo_rules) {
            Conversation probe;
            probe.id = "echo-check";
            probe.utterances.push_back({0, Speaker::customer, original});
            for (const auto& span :
                 rules::detect_spans(probe, *echo_rules, echo_threshold)) {
                bool safe = false;
                for (const auto& v : safe_values)
                    if (casefold(v) == casefold(span.surface)) safe = true;
                if (!safe) { has_pii = true; break; }
            }
        }
        if (has_pii) return reject("pii_echo");
    }

    result.status = repaired ? ValidationStatus::repaired : ValidationStatus::ok;
    return result;
}

// ---------------------------------------------------------------------------
// Alignment-based table extraction

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> lcs_match_pairs(
    const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            dp[i][j] = (a[i - 1] == b[j - 1])
                           ? dp[i - 1][j - 1] + 1
                           : std::max(dp[i - 1][j], dp[i][j - 1]);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t i = n, j = m;
    while (i > 0 && j > 0) {
        if (a[i - 1] == b[j - 1]) {
            pairs.emplace_back(i - 1, j - 1);
            --i, --j;
        } else if (dp[i - 1][j] >= dp[i][j - 1]) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(pairs.begin(), pairs.end());
    return pairs;
}

inline std::string join_tokens(const std::vector<std::string>& tokens,
                               std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t k = begin; k < end; ++k) {
        if (k > begin) out.push_back(' ');
        out += tokens[k];
    }
    return out;
}

inline bool looks_like_email(std::string_view s) {
    auto at = s.find('@');
    return at != std::string_view::npos && at > 0 &&
           s.find('.', at) != std::string_view::npos;
}

inline bool digits_and_separators(std::string_view s) {
    bool any_digit = false;
    for (unsigned char c : s) {
        if (is_ascii_digit(c)) { any_digit = true; continue; }
        if (c == '-' || c == '.' || c == '(' || c == ')' || c == '+' ||
            c == ' ' || c == '/')
            continue;
        return false;
    }
    return any_digit;
}

inline std::optional<PiiCategory> infer_category(std::string_view original) {
    if (looks_like_email(original)) return PiiCategory::email;
    if (digits_and_separators(original)) {
        auto digits = digits_of(original);
        if (digits.size() == 5 && digits.size() == original.size())
            return PiiCategory::zip_code;
        if (digits.size() >= 7 && digits.size() != original.size())
            return PiiCategory::phone;
        if (digits.size() >= 6) return PiiCategory::account_id;
        return std::nullopt;
    }
    auto tokens = split_words(original);
    if (!tokens.empty() && tokens.size() <= 3) {
        bool all_caps_alpha = true;
        for (const auto& t : tokens)
            if (!rules::detail::capitalized_alpha(t)) all_caps_alpha = false;
        if (all_caps_alpha) return PiiCategory::customer_name;
    }
    return std::nullopt;
}

}  // namespace detail

// Word-level LCS alignment; each between-anchor slot pairs its unaligned
// original run with its unaligned sanitized run. One-sided slots become
// alignment warnings instead of entries.
inline std::vector<SubstitutionEntry> extract_substitutions(
    const std::string& original, const std::string& sanitized,
    std::vector<std::string>* warnings = nullptr) {
    auto orig_tokens = split_words(original);
    auto san_tokens = split_words(sanitized);
    auto matches = detail::lcs_match_pairs(orig_tokens, san_tokens);

    std::vector<SubstitutionEntry> entries;
    auto emit_slot = [&](std::size_t ob, std::size_t oe, std::size_t sb,
                         std::size_t se) {
        bool have_orig = oe > ob, have_san = se > sb;
        if (!have_orig && !have_san) return;
        if (have_orig != have_san) {
            if (warnings)
                warnings->push_back(
                    have_orig ? "unpaired deletion: '" +
                                    detail::join_tokens(orig_tokens, ob, oe) +
                                    "'"
                              : "unpaired insertion: '" +
                                    detail::join_tokens(san_tokens, sb, se) +
                                    "'");
            return;
        }
        std::string from(strip_edge_punct(
            detail::join_tokens(orig_tokens, ob, oe)));
        std::string to(strip_edge_punct(
            detail::join_tokens(san_tokens, sb, se)));
        if (from.empty() || to.empty()) return;
        if (casefold(from) == casefold(to)) return;
        SubstitutionEntry e;
        e.original = std::move(from);
        e.surrogate = std::move(to);
        e.category = detail::infer_category(e.original);
        entries.push_back(std::move(e));
    };

    std::size_t oi = 0, si = 0;
    for (const auto& [mo, ms] : matches) {
        emit_slot(oi, mo, si, ms);
        oi = mo + 1;
        si = ms + 1;
    }
    emit_slot(oi, orig_tokens.size(), si, san_tokens.size());
    return entries;
}

// ---------------------------------------------------------------------------
// Utterance and conversation drivers

// Kept out of the user-text channel: the restatement is prepended to the
// instruction block so the tail of the prompt stays exactly "Text:<input>".
inline constexpr std::string_view kRepairReminder =
    "Reminder: return only the modified text without any additional text or "
    "explanations.";

struct UtteranceOutcome {
    bool ok = false;
    std::string text;  // sanitized text when ok
    int attempts = 0;
    std::string failure_reason;
};

// Retries with the identical prompt, then once more with the repair
// reminder restating the output constraint, then fails closed.
inline UtteranceOutcome sanitize_utterance(
    const ChatEndpoint& endpoint, const PromptTemplate& tmpl,
    const std::string& utterance_text, const DecodingParams& params,
    int retries = 3, const std::vector<std::string>& known_pii_values = {},
    const std::vector<rules::RecognizerRule>* echo_rules = nullptr,
    const std::vector<std::string>& safe_values = {}) {
    UtteranceOutcome outcome;
    std::string base_prompt = build_prompt(tmpl, utterance_text);
    std::string last_reason = "no attempts";
    for (int attempt = 0; attempt < retries + 1; ++attempt) {
        std::string prompt = base_prompt;
        if (attempt == retries)
            prompt = std::string(kRepairReminder) + "\n" + base_prompt;
        ++outcome.attempts;
        auto res = chat_complete(endpoint, prompt, params);
        if (!res.ok) {
            last_reason = res.error;
            continue;
        }
        if (trim(res.content).empty()) {
            last_reason = "empty completion";
            continue;
        }
        auto v = validate_candidate(utterance_text, res.content,
                                    known_pii_values, echo_rules, 0.5,
                                    safe_values);
        if (v.status != ValidationStatus::reject) {
            outcome.ok = true;
            outcome.text = std::move(v.text);
            return outcome;
        }
        last_reason = "validation: " + v.reason;
    }
    outcome.failure_reason = last_reason;
    return outcome;
}

inline SanitizedConversation anonymize_llm(
    const ChatEndpoint& endpoint, const Conversation& conversation,
    const PromptTemplate& tmpl, const DecodingParams& params,
    int retries = 3) {
    SanitizedConversation result;
    result.conversation_id = conversation.id;
    result.method = SanitizeMethod::llm;
    result.table = SubstitutionTable(conversation.id);
    result.provenance.model_id = endpoint.model;
    result.provenance.prompt_hash = tmpl.content_hash;
    result.provenance.temperature = params.temperature;
    result.provenance.seed = params.seed;

    static const std::vector<rules::RecognizerRule> echo_rules =
        rules::default_rules();

    for (const auto& utt : conversation.utterances) {
        if (trim(utt.text).empty()) {
            result.sanitized_utterances.push_back(utt.text);
            continue;
        }
        // Consistency repair: known originals become their surrogates
        // before the model sees the utterance.
        std::string repaired = apply_forward(utt.text, result.table);

        std::vector<std::string> known_values;
        for (const auto& a : conversation.annotations)
            if (contains_bounded_ci(repaired, a.value))
                known_values.push_back(a.value);
        // Surrogates injected by the repair are fictitious by construction.
        std::vector<std::string> safe_values;
        for (const auto& e : result.table.entries())
            safe_values.push_back(e.surrogate);

        auto outcome =
            sanitize_utterance(endpoint, tmpl, repaired, params, retries,
                               known_values, &echo_rules, safe_values);
        if (!outcome.ok) {
            // Fail closed: the original text never reaches the output.
            result.sanitized_utterances.emplace_back(kFailedUtteranceMarker);
            result.failed_indices.push_back(utt.index);
            continue;
        }
        for (auto& entry : extract_substitutions(repaired, outcome.text)) {
            entry.first_utterance = utt.index;
            result.table.insert(std::move(entry));
        }
        result.sanitized_utterances.push_back(std::move(outcome.text));
    }
    return result;
}

}  // namespace veil::llm
