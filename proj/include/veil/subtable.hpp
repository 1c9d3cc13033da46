#pragma once

// Per-conversation substitution tables: forward/inverse application with
// longest-match-first, word-boundary aware replacement, a first-wins
// consistency policy, and deterministic type-preserving surrogate
// generation.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "veil/corpus.hpp"
#include "veil/lexicons.hpp"
#include "veil/rng.hpp"
#include "veil/text.hpp"

namespace veil {

struct SubstitutionEntry {
    std::string original;
    std::string surrogate;
    std::optional<PiiCategory> category;
    std::size_t first_utterance = 0;
};

inline void check_entry(const SubstitutionEntry& e) {
    if (trim(e.original).empty() || trim(e.surrogate).empty())
        throw std::invalid_argument("substitution entry with empty side");
    if (casefold(e.original) == casefold(e.surrogate))
        throw std::invalid_argument("surrogate equals original: '" +
                                    e.original + "'");
    if (e.category && is_numeric_category(*e.category) &&
        digits_of(e.original).size() != digits_of(e.surrogate).size())
        throw std::invalid_argument(
            "digit count not preserved for numeric category: '" + e.original +
            "' -> '" + e.surrogate + "'");
}

enum class InsertOutcome {
    inserted,
    duplicate,            // same original, same surrogate: no-op
    consistency_violation,  // same original, different surrogate: first wins
    inverse_collision,    // different original, same surrogate: rejected
};

class SubstitutionTable {
public:
    SubstitutionTable() = default;
    explicit SubstitutionTable(std::string conversation_id)
        : conversation_id_(std::move(conversation_id)) {}

    const std::string& conversation_id() const { return conversation_id_; }
    const std::vector<SubstitutionEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    std::size_t consistency_violations() const {
        return consistency_violations_;
    }
    const std::vector<std::string>& collision_notes() const {
        return collision_notes_;
    }
    bool has_inverse_collisions() const { return !collision_notes_.empty(); }

    const SubstitutionEntry* find_original(std::string_view original) const {
        auto key = casefold(original);
        for (const auto& e : entries_)
            if (casefold(e.original) == key) return &e;
        return nullptr;
    }

    const SubstitutionEntry* find_surrogate(std::string_view surrogate) const {
        auto key = casefold(surrogate);
        for (const auto& e : entries_)
            if (casefold(e.surrogate) == key) return &e;
        return nullptr;
    }

    // First-wins policy: a re-mapping of a known original is discarded and
    // counted; a surrogate already claimed by a different original is
    // rejected and flagged as an inverse collision.
    InsertOutcome insert(SubstitutionEntry entry) {
        check_entry(entry);
        if (const auto* existing = find_original(entry.original)) {
            if (casefold(existing->surrogate) == casefold(entry.surrogate))
                return InsertOutcome::duplicate;
            ++consistency_violations_;
            return InsertOutcome::consistency_violation;
        }
        if (const auto* claimed = find_surrogate(entry.surrogate)) {
            collision_notes_.push_back("surrogate '" + entry.surrogate +
                                       "' already maps from '" +
                                       claimed->original + "', rejected '" +
                                       entry.original + "'");
            return InsertOutcome::inverse_collision;
        }
        entries_.push_back(std::move(entry));
        return InsertOutcome::inserted;
    }

private:
    std::string conversation_id_;
    std::vector<SubstitutionEntry> entries_;
    std::size_t consistency_violations_ = 0;
    std::vector<std::string> collision_notes_;
};

// ---------------------------------------------------------------------------
// Forward / inverse application

namespace detail {

struct Replacement {
    std::string_view from;
    std::string_view to;
};

// Single left-to-right scan; at each position the longest boundary-anchored
// pattern wins, and the cursor jumps past the emitted replacement so output
// text is never rescanned.
inline std::string replace_all(std::string_view text,
                               std::vector<Replacement> repls) {
    std::stable_sort(repls.begin(), repls.end(),
                     [](const Replacement& a, const Replacement& b) {
                         return a.from.size() > b.from.size();
                     });
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        bool replaced = false;
        for (const auto& r : repls) {
            if (matches_at(text, pos, r.from)) {
                out.append(r.to);
                pos += r.from.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) out.push_back(text[pos++]);
    }
    return out;
}

}  // namespace detail

inline std::string apply_forward(std::string_view text,
                                 const SubstitutionTable& table) {
    std::vector<detail::Replacement> repls;
    repls.reserve(table.size());
    for (const auto& e : table.entries())
        repls.push_back({e.original, e.surrogate});
    return detail::replace_all(text, std::move(repls));
}

inline std::string apply_inverse(std::string_view text,
                                 const SubstitutionTable& table) {
    if (table.has_inverse_collisions()) {
        std::string msg = "inverse mapping refused, colliding entries:";
        for (const auto& note : table.collision_notes()) msg += "\n  " + note;
        throw std::runtime_error(msg);
    }
    std::vector<detail::Replacement> repls;
    repls.reserve(table.size());
    for (const auto& e : table.entries())
        repls.push_back({e.surrogate, e.original});
    return detail::replace_all(text, std::move(repls));
}

// ---------------------------------------------------------------------------
// Surrogate generation

namespace detail {

inline std::uint64_t surrogate_seed(PiiCategory category,
                                    std::string_view original,
                                    std::uint64_t seed) {
    std::uint64_t h = fnv1a64(to_string(category));
    h = fnv1a64(original, h);
    SplitMix64 mix(seed);
    return h ^ mix.next();
}

inline std::string random_digits_like(std::string_view original,
                                      SplitMix64& rng) {
    std::string out(original);
    bool first_digit = true;
    for (char& c : out) {
        if (!is_ascii_digit(static_cast<unsigned char>(c))) continue;
        if (first_digit && c != '0') {
            // Keep a nonzero lead so lengths read the same.
            c = static_cast<char>('1' + rng.next_below(9));
        } else {
            c = static_cast<char>('0' + rng.next_below(10));
        }
        first_digit = false;
    }
    return out;
}

inline std::string pick(const auto& list, SplitMix64& rng) {
    return std::string(list[rng.next_below(list.size())]);
}

inline std::string name_like(std::string_view original, SplitMix64& rng) {
    auto tokens = split_words(original);
    if (tokens.empty()) return pick(lex::kFirstNames, rng);
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += (i + 1 == tokens.size() && tokens.size() > 1)
                   ? pick(lex::kLastNames, rng)
                   : pick(lex::kFirstNames, rng);
    }
    return out;
}

inline std::string username_like(std::string_view original, SplitMix64& rng) {
    std::string out = casefold(pick(lex::kFirstNames, rng)) +
                      casefold(pick(lex::kLastNames, rng));
    std::size_t digits = digits_of(original).size();
    for (std::size_t i = 0; i < digits; ++i)
        out.push_back(static_cast<char>('0' + rng.next_below(10)));
    return out;
}

inline std::string email_like(SplitMix64& rng) {
    return casefold(pick(lex::kFirstNames, rng)) +
           casefold(pick(lex::kLastNames, rng)) + "@" +
           pick(lex::kEmailDomains, rng);
}

inline std::string address_like(std::string_view original, SplitMix64& rng) {
    auto tokens = split_words(original);
    std::size_t middle_words = 1;
    std::string number = "4";
    if (tokens.size() >= 3 &&
        !digits_of(tokens.front()).empty()) {
        number = random_digits_like(digits_of(tokens.front()), rng);
        middle_words = tokens.size() - 2;
    } else {
        number = std::to_string(1 + rng.next_below(999));
    }
    std::string out = number;
    for (std::size_t i = 0; i < middle_words; ++i)
        out += " " + pick(lex::kStreetNames, rng);
    out += " " + pick(lex::kStreetSuffixes, rng);
    return out;
}

// Character-class-preserving scramble for shapes no template covers.
inline std::string scramble_like(std::string_view original, SplitMix64& rng) {
    std::string out(original);
    for (char& c : out) {
        unsigned char u = static_cast<unsigned char>(c);
        if (is_ascii_digit(u))
            c = static_cast<char>('0' + rng.next_below(10));
        else if (u >= 'a' && u <= 'z')
            c = static_cast<char>('a' + rng.next_below(26));
        else if (u >= 'A' && u <= 'Z')
            c = static_cast<char>('A' + rng.next_below(26));
    }
    return out;
}

}  // namespace detail

// Deterministic in (category, original, seed). The surrogate keeps the
// value's shape: digit-for-digit with separators intact for numeric
// categories, lexicon names for people, local@domain for emails, a
// number-plus-street template for addresses.
inline std::string generate_surrogate(PiiCategory category,
                                      std::string_view original,
                                      std::uint64_t seed) {
    if (trim(original).empty())
        throw std::invalid_argument("generate_surrogate: empty original");
    SplitMix64 rng(detail::surrogate_seed(category, original, seed));
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::string candidate;
        switch (category) {
            case PiiCategory::phone:
            case PiiCategory::account_id:
            case PiiCategory::order_id:
            case PiiCategory::zip_code:
                candidate = detail::random_digits_like(original, rng);
                break;
            case PiiCategory::customer_name:
                candidate = detail::name_like(original, rng);
                break;
            case PiiCategory::username:
                candidate = detail::username_like(original, rng);
                break;
            case PiiCategory::email:
                candidate = detail::email_like(rng);
                break;
            case PiiCategory::street_address:
                candidate = detail::address_like(original, rng);
                break;
        }
        if (candidate.empty())
            candidate = detail::scramble_like(original, rng);
        if (casefold(candidate) != casefold(original)) return candidate;
    }
    // Exhausting 64 draws means the value space is degenerate (e.g. a
    // single repeated digit); force a distinct digit swap.
    std::string fallback = detail::scramble_like(original, rng);
    for (char& c : fallback) {
        if (is_ascii_digit(static_cast<unsigned char>(c))) {
            c = (c == '9') ? '0' : static_cast<char>(c + 1);
            break;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            c = (ascii_lower(c) == 'z') ? static_cast<char>(c - 1)
                                        : static_cast<char>(c + 1);
            break;
        }
    }
    return fallback;
}

// ---------------------------------------------------------------------------
// Sidecar format: JSONL, one entry per line.

inline std::string serialize_table(const SubstitutionTable& table) {
    std::string out;
    for (const auto& e : table.entries()) {
        nlohmann::ordered_json j;
        j["original"] = e.original;
        j["surrogate"] = e.surrogate;
        j["category"] = e.category
                            ? nlohmann::ordered_json(std::string(
                                  to_string(*e.category)))
                            : nlohmann::ordered_json(nullptr);
        j["first_utterance"] = e.first_utterance;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

inline void save_table(const SubstitutionTable& table,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open table file: " + path);
    out << serialize_table(table);
}

inline SubstitutionTable load_table(const std::string& path,
                                    std::string conversation_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open table file: " + path);
    SubstitutionTable table(std::move(conversation_id));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + " line " +
                                     std::to_string(line_no) + ": " +
                                     e.what());
        }
        SubstitutionEntry entry;
        entry.original = j.at("original").get<std::string>();
        entry.surrogate = j.at("surrogate").get<std::string>();
        if (j.contains("category") && !j["category"].is_null())
            entry.category =
                category_from_string(j["category"].get<std::string>());
        if (j.contains("first_utterance"))
            entry.first_utterance = j["first_utterance"].get<std::size_t>();
        table.insert(std::move(entry));
    }
    return table;
}

}  // namespace veil
