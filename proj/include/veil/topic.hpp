#pragma once

// Topic stability machinery: pluggable text embeddings, deterministic
// spherical k-means (k-means++ init under a seed, 50-iteration cap,
// 1e-6 centroid-movement tolerance), and softmax topic-probability
// vectors compared by cosine distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "veil/rng.hpp"
#include "veil/text.hpp"

namespace veil::metrics {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void normalize_in_place(Vec& a) {
    double n = norm(a);
    if (n > 0)
        for (auto& x : a) x /= n;
}

inline double cosine_similarity(const Vec& a, const Vec& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline double cosine_distance(const Vec& a, const Vec& b) {
    return 1.0 - cosine_similarity(a, b);
}

// ---------------------------------------------------------------------------
// Embedding providers

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    // Corpus-level statistics (document frequencies); default is stateless.
    virtual void fit(const std::vector<std::string>& /*texts*/) {}
    virtual Vec embed(const std::string& text) const = 0;
};

// Offline default: hashed TF-IDF with sign hashing, dimension 512.
// Deterministic given the fitted corpus.
class HashedTfidfProvider final : public EmbeddingProvider {
public:
    explicit HashedTfidfProvider(std::size_t dim = 512) : dim_(dim) {
        if (dim_ == 0 || (dim_ & (dim_ - 1)) != 0)
            throw std::invalid_argument("embedding dimension must be a power of two");
        df_.assign(dim_, 0);
    }

    std::string id() const override {
        return "hashed-tfidf-" + std::to_string(dim_);
    }

    void fit(const std::vector<std::string>& texts) override {
        df_.assign(dim_, 0);
        docs_ = texts.size();
        std::vector<bool> seen(dim_);
        for (const auto& text : texts) {
            std::fill(seen.begin(), seen.end(), false);
            for (const auto& tok : normalized_tokens(text))
                seen[bucket_of(tok)] = true;
            for (std::size_t b = 0; b < dim_; ++b)
                if (seen[b]) ++df_[b];
        }
    }

    Vec embed(const std::string& text) const override {
        std::vector<double> tf(dim_, 0.0);
        for (const auto& tok : normalized_tokens(text)) {
            std::uint64_t h = fnv1a64(tok);
            double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
            tf[h & (dim_ - 1)] += sign;
        }
        Vec out(dim_, 0.0);
        for (std::size_t b = 0; b < dim_; ++b) {
            if (tf[b] == 0.0) continue;
            double count = std::abs(tf[b]);
            double idf =
                std::log((1.0 + static_cast<double>(docs_)) /
                         (1.0 + static_cast<double>(df_[b]))) + 1.0;
            out[b] = (tf[b] > 0 ? 1.0 : -1.0) * (1.0 + std::log(count)) * idf;
        }
        normalize_in_place(out);
        return out;
    }

private:
    std::size_t bucket_of(const std::string& tok) const {
        return fnv1a64(tok) & (dim_ - 1);
    }

    std::size_t dim_;
    std::size_t docs_ = 0;
    std::vector<std::size_t> df_;
};

// Remote embeddings endpoint: POST {base_url}/v1/embeddings with
// {model, input}; reads data[0].embedding.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::string base_url, std::string model,
                            std::string api_key = "")
        : base_url_(std::move(base_url)),
          model_(std::move(model)),
          api_key_(std::move(api_key)) {}

    std::string id() const override { return "remote:" + model_; }

    Vec embed(const std::string& text) const override {
        httplib::Client client(base_url_);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!api_key_.empty())
            headers.emplace("Authorization", "Bearer " + api_key_);
        nlohmann::json body{{"model", model_}, {"input", text}};
        auto res = client.Post("/v1/embeddings", headers, body.dump(),
                               "application/json");
        if (!res || res->status < 200 || res->status >= 300)
            throw std::runtime_error("embeddings endpoint failure");
        auto j = nlohmann::json::parse(res->body);
        return j.at("data").at(0).at("embedding").get<Vec>();
    }

private:
    std::string base_url_;
    std::string model_;
    std::string api_key_;
};

// ---------------------------------------------------------------------------
// Topic model

struct TopicModel {
    std::size_t k = 33;
    std::vector<Vec> centroids;  // unit-norm
    std::uint64_t seed = 0;
    std::string embedding_provider_id;
};

struct TopicVector {
    Vec probabilities;
};

namespace detail {

inline std::size_t weighted_pick(const std::vector<double>& weights,
                                 SplitMix64& rng) {
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total <= 0.0) return 0;
    double r = rng.next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace detail

// Spherical k-means over unit-normalized embeddings. k-means++ seeding with
// 1 - cos weights, assignment by maximum cosine (ties to the lower index),
// centroids renormalized each round. Empty clusters restart at the point
// with the weakest best-similarity.
inline TopicModel fit_topic_model_from_embeddings(std::vector<Vec> points,
                                                  std::size_t k,
                                                  std::uint64_t seed,
                                                  std::string provider_id) {
    const std::size_t n = points.size();
    if (k < 2) throw std::invalid_argument("topic model requires K >= 2");
    if (n < k)
        throw std::invalid_argument(
            "corpus smaller than K (" + std::to_string(n) + " < " +
            std::to_string(k) + ")");
    for (auto& p : points) normalize_in_place(p);

    SplitMix64 rng(seed);
    std::vector<Vec> centroids;
    centroids.push_back(points[rng.next_below(n)]);
    std::vector<double> best_dist(n, 0.0);
    while (centroids.size() < k) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = 2.0;
            for (const auto& c : centroids)
                best = std::min(best, 1.0 - dot(points[i], c));
            best_dist[i] = std::max(0.0, best);
        }
        centroids.push_back(points[detail::weighted_pick(best_dist, rng)]);
    }

    std::vector<std::size_t> assign(n, 0);
    for (int iter = 0; iter < 50; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = -2.0;
            std::size_t arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                double s = dot(points[i], centroids[c]);
                if (s > best) { best = s; arg = c; }
            }
            assign[i] = arg;
        }
        std::vector<Vec> next(k, Vec(points[0].size(), 0.0));
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[assign[i]];
            for (std::size_t d = 0; d < points[i].size(); ++d)
                next[assign[i]][d] += points[i][d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] == 0) {
                // Reseed at the worst-covered point.
                double worst = 2.0;
                std::size_t arg = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    double best = -2.0;
                    for (std::size_t c2 = 0; c2 < k; ++c2)
                        best = std::max(best, dot(points[i], centroids[c2]));
                    if (best < worst) { worst = best; arg = i; }
                }
                next[c] = points[arg];
            }
            normalize_in_place(next[c]);
            if (norm(next[c]) == 0.0) next[c] = centroids[c];
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            Vec diff(next[c].size());
            for (std::size_t d = 0; d < diff.size(); ++d)
                diff[d] = next[c][d] - centroids[c][d];
            movement = std::max(movement, norm(diff));
        }
        centroids = std::move(next);
        if (movement < 1e-6) break;
    }

    TopicModel model;
    model.k = k;
    model.centroids = std::move(centroids);
    model.seed = seed;
    model.embedding_provider_id = std::move(provider_id);
    return model;
}

inline TopicModel fit_topic_model(const std::vector<std::string>& texts,
                                  EmbeddingProvider& provider, std::size_t k,
                                  std::uint64_t seed) {
    std::vector<Vec> points;
    points.reserve(texts.size());
    for (const auto& t : texts) points.push_back(provider.embed(t));
    return fit_topic_model_from_embeddings(std::move(points), k, seed,
                                           provider.id());
}

// Cosine similarity to each centroid, softmax at temperature 1.
inline TopicVector topic_vector(const std::string& text,
                                const TopicModel& model,
                                const EmbeddingProvider& provider) {
    Vec e = provider.embed(text);
    normalize_in_place(e);
    Vec sims(model.k);
    for (std::size_t c = 0; c < model.k; ++c)
        sims[c] = dot(e, model.centroids[c]);
    double max_sim = *std::max_element(sims.begin(), sims.end());
    double total = 0.0;
    TopicVector tv;
    tv.probabilities.resize(model.k);
    for (std::size_t c = 0; c < model.k; ++c) {
        tv.probabilities[c] = std::exp(sims[c] - max_sim);
        total += tv.probabilities[c];
    }
    for (auto& p : tv.probabilities) p /= total;
    return tv;
}

inline double topic_distance(const TopicVector& a, const TopicVector& b) {
    return cosine_distance(a.probabilities, b.probabilities);
}

}  // namespace veil::metrics
