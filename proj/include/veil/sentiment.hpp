#pragma once

// Lexicon-based sentiment scoring. Token valences are summed with a
// negation flip (a negator within the 3 preceding tokens multiplies the
// valence by -0.74) and booster scaling (each booster in that window adds
// 0.293 toward the valence's sign), then normalized to a compound score
// s / sqrt(s^2 + 15) in [-1, 1]. Labels use strict 0.05 thresholds.
//
// The scorer reads the standard tab-separated lexicon file format
// (term<TAB>valence[<TAB>...]); a small built-in lexicon covers tests and
// offline runs.

#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "veil/text.hpp"

namespace veil::metrics {

inline constexpr double kAlpha = 15.0;
inline constexpr double kNegationFactor = -0.74;
inline constexpr double kBoostAmount = 0.293;
inline constexpr std::size_t kInfluenceWindow = 3;

enum class SentimentLabel { positive, neutral, negative };

inline std::string_view to_string(SentimentLabel l) {
    switch (l) {
        case SentimentLabel::positive: return "positive";
        case SentimentLabel::negative: return "negative";
        default: return "neutral";
    }
}

struct SentimentScore {
    double compound = 0.0;
    SentimentLabel label = SentimentLabel::neutral;
};

class Lexicon {
public:
    static Lexicon builtin_mini() {
        Lexicon lex;
        static constexpr std::pair<std::string_view, double> kTerms[] = {
            {"good", 1.9},        {"great", 3.1},      {"excellent", 2.7},
            {"amazing", 2.8},     {"wonderful", 2.7},  {"love", 3.2},
            {"happy", 2.7},       {"glad", 2.0},       {"pleased", 2.0},
            {"thanks", 1.9},      {"thank", 1.5},      {"helpful", 1.8},
            {"perfect", 2.7},     {"awesome", 3.1},    {"fantastic", 2.6},
            {"lovely", 2.8},      {"delighted", 2.9},  {"appreciate", 1.7},
            {"resolved", 1.2},    {"smooth", 1.3},     {"sunny", 1.6},
            {"enjoy", 2.2},       {"nice", 1.8},       {"best", 3.2},
            {"fine", 0.8},        {"satisfied", 1.9},  {"friendly", 1.9},
            {"easy", 1.2},        {"welcome", 1.4},    {"cheerful", 2.3},
            {"bad", -2.5},        {"terrible", -2.1},  {"awful", -2.0},
            {"horrible", -2.5},   {"angry", -2.3},     {"upset", -1.6},
            {"frustrated", -2.4}, {"annoyed", -1.8},   {"sad", -2.1},
            {"disappointed", -2.2}, {"hate", -2.7},    {"worst", -3.1},
            {"slow", -0.9},       {"broken", -1.6},    {"problem", -1.4},
            {"issue", -1.1},      {"gloomy", -1.9},    {"dreadful", -2.6},
            {"miserable", -2.5},  {"useless", -1.8},   {"confusing", -1.3},
            {"wrong", -1.6},      {"delayed", -1.2},   {"complaint", -1.4},
            {"unhappy", -1.9},    {"furious", -2.8},   {"ridiculous", -1.9},
            {"poor", -1.9},       {"fail", -2.0},      {"failed", -2.0},
        };
        for (auto [term, valence] : kTerms)
            lex.valences_.emplace(term, valence);
        return lex;
    }

    static Lexicon from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open lexicon: " + path);
        Lexicon lex;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            std::string term = casefold(trim(line.substr(0, tab)));
            auto rest = line.substr(tab + 1);
            auto tab2 = rest.find('\t');
            std::string field =
                tab2 == std::string::npos ? rest : rest.substr(0, tab2);
            try {
                double valence = std::stod(field);
                if (!term.empty()) lex.valences_[term] = valence;
            } catch (const std::exception&) {
                // skip unparsable rows
            }
        }
        if (lex.valences_.empty())
            throw std::runtime_error("lexicon has no entries: " + path);
        return lex;
    }

    double valence(const std::string& token) const {
        auto it = valences_.find(token);
        return it == valences_.end() ? 0.0 : it->second;
    }

    std::size_t size() const { return valences_.size(); }

private:
    std::unordered_map<std::string, double> valences_;
};

namespace detail {

inline const std::unordered_set<std::string>& negators() {
    static const std::unordered_set<std::string> set = {
        "not",     "no",      "never",    "neither",  "nor",      "cannot",
        "can't",   "don't",   "won't",    "isn't",    "wasn't",   "aren't",
        "didn't",  "doesn't", "couldn't", "shouldn't","wouldn't", "ain't",
        "hardly",  "barely",  "without",
    };
    return set;
}

inline const std::unordered_set<std::string>& boosters() {
    static const std::unordered_set<std::string> set = {
        "very",     "really",     "extremely", "incredibly", "absolutely",
        "so",       "totally",    "utterly",   "completely", "remarkably",
        "super",    "especially", "highly",
    };
    return set;
}

}  // namespace detail

inline double sentiment_compound(std::string_view text, const Lexicon& lexicon) {
    auto tokens = normalized_tokens(text);
    double sum = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        double v = lexicon.valence(tokens[i]);
        if (v == 0.0) continue;
        double boost = 0.0;
        bool negated = false;
        for (std::size_t back = 1; back <= kInfluenceWindow && back <= i;
             ++back) {
            const auto& prev = tokens[i - back];
            if (detail::boosters().count(prev)) boost += kBoostAmount;
            if (detail::negators().count(prev)) negated = true;
        }
        v += (v > 0 ? boost : -boost);
        if (negated) v *= kNegationFactor;
        sum += v;
    }
    if (sum == 0.0) return 0.0;
    double compound = sum / std::sqrt(sum * sum + kAlpha);
    return std::clamp(compound, -1.0, 1.0);
}

// Strict thresholds: exactly 0.05 or -0.05 stays neutral.
inline SentimentLabel sentiment_label(double compound) {
    if (compound > 0.05) return SentimentLabel::positive;
    if (compound < -0.05) return SentimentLabel::negative;
    return SentimentLabel::neutral;
}

inline SentimentScore score_sentiment(std::string_view text,
                                      const Lexicon& lexicon) {
    SentimentScore s;
    s.compound = sentiment_compound(text, lexicon);
    s.label = sentiment_label(s.compound);
    return s;
}

}  // namespace veil::metrics
