#pragma once

// Test-only reference implementations, kept independent of the library
// code paths they check: a re-derivation of the documented shuffle/sample
// algorithm, a naive boundary-aware replacement scanner, an exhaustive LCS
// alignment enumerator, and exhaustive spherical 2-means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace veil::test::oracle {

// --- documented shuffle: splitmix64 + Fisher-Yates, re-derived -------------

inline std::uint64_t splitmix_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::vector<std::size_t> reference_shuffle(std::size_t n,
                                                  std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::uint64_t state = seed;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j =
            static_cast<std::size_t>(splitmix_next(state) % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

// First n shuffled positions, restored to input order.
inline std::vector<std::size_t> reference_sample(std::size_t total,
                                                 std::size_t n,
                                                 std::uint64_t seed) {
    auto order = reference_shuffle(total, seed);
    std::vector<std::size_t> picked(order.begin(), order.begin() + n);
    std::sort(picked.begin(), picked.end());
    return picked;
}

// --- naive longest-match replacement scanner -------------------------------

inline bool oracle_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
           (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

inline std::string naive_replace(
    const std::string& text,
    std::vector<std::pair<std::string, std::string>> mapping) {
    std::sort(mapping.begin(), mapping.end(),
              [](const auto& a, const auto& b) {
                  return a.first.size() > b.first.size();
              });
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        bool hit = false;
        for (const auto& [from, to] : mapping) {
            if (from.empty() || pos + from.size() > text.size()) continue;
            if (text.compare(pos, from.size(), from) != 0) continue;
            bool left_ok =
                pos == 0 ||
                !(oracle_word_byte(text[pos - 1]) &&
                  oracle_word_byte(from.front()));
            std::size_t end = pos + from.size();
            bool right_ok =
                end == text.size() ||
                !(oracle_word_byte(text[end]) &&
                  oracle_word_byte(from.back()));
            if (left_ok && right_ok) {
                out += to;
                pos = end;
                hit = true;
                break;
            }
        }
        if (!hit) out.push_back(text[pos++]);
    }
    return out;
}

// --- exhaustive LCS alignment enumeration ----------------------------------

using Match = std::vector<std::pair<std::size_t, std::size_t>>;

inline void enumerate_lcs(const std::vector<std::string>& a,
                          const std::vector<std::string>& b,
                          const std::vector<std::vector<int>>& dp,
                          std::size_t i, std::size_t j, Match& current,
                          std::set<Match>& out) {
    if (out.size() > 512) return;  // guard; generators keep cases tiny
    if (i == 0 || j == 0) {
        Match m(current.rbegin(), current.rend());
        out.insert(std::move(m));
        return;
    }
    if (a[i - 1] == b[j - 1] && dp[i][j] == dp[i - 1][j - 1] + 1) {
        current.emplace_back(i - 1, j - 1);
        enumerate_lcs(a, b, dp, i - 1, j - 1, current, out);
        current.pop_back();
    }
    if (dp[i - 1][j] == dp[i][j]) enumerate_lcs(a, b, dp, i - 1, j, current, out);
    if (dp[i][j - 1] == dp[i][j]) enumerate_lcs(a, b, dp, i, j - 1, current, out);
}

inline std::set<Match> all_lcs_alignments(const std::vector<std::string>& a,
                                          const std::vector<std::string>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            dp[i][j] = (a[i - 1] == b[j - 1])
                           ? dp[i - 1][j - 1] + 1
                           : std::max(dp[i - 1][j], dp[i][j - 1]);
    std::set<Match> out;
    Match current;
    enumerate_lcs(a, b, dp, n, m, current, out);
    return out;
}

// Two-sided gap slots of one alignment, as (original run, sanitized run)
// joined-token pairs.
inline std::vector<std::pair<std::string, std::string>> run_pairs_of(
    const std::vector<std::string>& a, const std::vector<std::string>& b,
    const Match& match) {
    auto join = [](const std::vector<std::string>& t, std::size_t lo,
                   std::size_t hi) {
        std::string s;
        for (std::size_t k = lo; k < hi; ++k) {
            if (k > lo) s.push_back(' ');
            s += t[k];
        }
        return s;
    };
    std::vector<std::pair<std::string, std::string>> pairs;
    std::size_t ai = 0, bi = 0;
    auto slot = [&](std::size_t ae, std::size_t be) {
        if (ae > ai && be > bi)
            pairs.emplace_back(join(a, ai, ae), join(b, bi, be));
    };
    for (const auto& [ma, mb] : match) {
        slot(ma, mb);
        ai = ma + 1;
        bi = mb + 1;
    }
    slot(a.size(), b.size());
    return pairs;
}

// --- exhaustive spherical 2-means -------------------------------------------

inline std::vector<double> normalized_mean(
    const std::vector<std::vector<double>>& points,
    const std::vector<std::size_t>& members) {
    std::vector<double> c(points[0].size(), 0.0);
    for (auto i : members)
        for (std::size_t d = 0; d < c.size(); ++d) c[d] += points[i][d];
    double n2 = 0.0;
    for (double v : c) n2 += v * v;
    if (n2 > 0) {
        double inv = 1.0 / std::sqrt(n2);
        for (double& v : c) v *= inv;
    }
    return c;
}

struct TwoMeansSolution {
    std::vector<std::vector<double>> centroids;
    double objective = 0.0;
};

inline TwoMeansSolution brute_force_two_means(
    std::vector<std::vector<double>> points) {
    for (auto& p : points) {
        double n2 = 0.0;
        for (double v : p) n2 += v * v;
        if (n2 > 0) {
            double inv = 1.0 / std::sqrt(n2);
            for (double& v : p) v *= inv;
        }
    }
    const std::size_t n = points.size();
    TwoMeansSolution best;
    best.objective = 1e18;
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<std::size_t> left, right;
        for (std::size_t i = 0; i < n; ++i)
            ((mask >> i) & 1u ? left : right).push_back(i);
        auto c0 = normalized_mean(points, left);
        auto c1 = normalized_mean(points, right);
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& c = ((mask >> i) & 1u) ? c0 : c1;
            double dot = 0.0;
            for (std::size_t d = 0; d < c.size(); ++d)
                dot += points[i][d] * c[d];
            obj += 1.0 - dot;
        }
        if (obj < best.objective) {
            best.objective = obj;
            best.centroids = {c0, c1};
        }
    }
    return best;
}

}  // namespace veil::test::oracle
