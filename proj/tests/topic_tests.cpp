#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "veil/topic.hpp"

#include "oracles.hpp"

using namespace veil::metrics;

namespace {

// Two tight clusters around orthogonal directions in 4d.
std::vector<Vec> two_cluster_points() {
    return {
        {1.0, 0.02, 0.0, 0.0},  {0.98, -0.03, 0.01, 0.0},
        {1.0, 0.0, 0.03, -0.02}, {0.01, 1.0, 0.0, 0.02},
        {-0.02, 0.97, 0.01, 0.0}, {0.0, 1.0, -0.03, 0.01},
    };
}

}  // namespace

TEST_CASE("spherical 2-means matches the exhaustive oracle", "[topic]") {
    auto points = two_cluster_points();
    auto model = fit_topic_model_from_embeddings(points, 2, 7, "test");
    auto best = veil::test::oracle::brute_force_two_means(points);

    REQUIRE(model.centroids.size() == 2);
    // Match centroids to the oracle's by best cosine; order may differ.
    for (const auto& c : model.centroids) {
        double best_sim = -2.0;
        for (const auto& o : best.centroids)
            best_sim = std::max(best_sim, cosine_similarity(c, o));
        CHECK(best_sim >= 1.0 - 1e-6);
    }
}

TEST_CASE("fitting is deterministic under a seed", "[topic]") {
    auto a = fit_topic_model_from_embeddings(two_cluster_points(), 2, 9, "t");
    auto b = fit_topic_model_from_embeddings(two_cluster_points(), 2, 9, "t");
    REQUIRE(a.centroids.size() == b.centroids.size());
    for (std::size_t c = 0; c < a.centroids.size(); ++c)
        for (std::size_t d = 0; d < a.centroids[c].size(); ++d)
            CHECK(a.centroids[c][d] == b.centroids[c][d]);
}

TEST_CASE("K larger than the corpus is an error", "[topic]") {
    CHECK_THROWS_AS(
        fit_topic_model_from_embeddings(two_cluster_points(), 7, 1, "t"),
        std::invalid_argument);
}

TEST_CASE("topic vectors are softmaxed similarities", "[topic]") {
    TopicModel model;
    model.k = 2;
    model.centroids = {{1.0, 0.0}, {0.0, 1.0}};
    model.embedding_provider_id = "raw";

    // Embedding equal to centroid 0: sims (1, 0) -> (e/(e+1), 1/(e+1)).
    class RawProvider final : public EmbeddingProvider {
    public:
        std::string id() const override { return "raw"; }
        Vec embed(const std::string& text) const override {
            return text == "x" ? Vec{1.0, 0.0} : Vec{0.0, 1.0};
        }
    } provider;

    auto tv = topic_vector("x", model, provider);
    REQUIRE(tv.probabilities.size() == 2);
    double e = std::exp(1.0);
    CHECK(tv.probabilities[0] ==
          Catch::Approx(e / (e + 1.0)).margin(1e-12));
    CHECK(tv.probabilities[1] ==
          Catch::Approx(1.0 / (e + 1.0)).margin(1e-12));
    CHECK(tv.probabilities[0] + tv.probabilities[1] ==
          Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("hashed tf-idf embeddings are deterministic unit vectors",
          "[topic]") {
    HashedTfidfProvider provider(512);
    provider.fit({"alpha beta gamma", "alpha delta", "epsilon zeta"});
    auto a = provider.embed("alpha beta");
    auto b = provider.embed("alpha beta");
    CHECK(a == b);
    CHECK(norm(a) == Catch::Approx(1.0).margin(1e-9));
    CHECK(provider.embed("").empty() == false);
    CHECK(norm(provider.embed("")) == 0.0);
}

TEST_CASE("probability vectors of one-hot topics are distance 1", "[topic]") {
    TopicVector a{{1.0, 0.0, 0.0}};
    TopicVector b{{0.0, 1.0, 0.0}};
    CHECK(topic_distance(a, b) == Catch::Approx(1.0).margin(1e-12));
    CHECK(topic_distance(a, a) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("distance is symmetric and bounded for probability vectors",
          "[topic]") {
    veil::SplitMix64 rng(31);
    for (int round = 0; round < 100; ++round) {
        auto draw = [&]() {
            TopicVector tv;
            double total = 0.0;
            for (int k = 0; k < 5; ++k) {
                double v = rng.next_unit() + 1e-9;
                tv.probabilities.push_back(v);
                total += v;
            }
            for (auto& p : tv.probabilities) p /= total;
            return tv;
        };
        auto p = draw(), q = draw();
        double pq = topic_distance(p, q), qp = topic_distance(q, p);
        CHECK(pq == Catch::Approx(qp).margin(1e-12));
        CHECK(pq >= 0.0);
        CHECK(pq <= 1.0 + 1e-12);
    }
}
