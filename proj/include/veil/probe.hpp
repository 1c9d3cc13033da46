#pragma once

// Trainability probe: predict the original conversation's sentiment
// compound from the sanitized text only. Hashed bag-of-words features feed
// a closed-form ridge regression (normal equations, Tikhonov lambda*I,
// unregularized bias); held-out MAE is the reported metric.
//
// The solve runs in the dual: with centered features Xc and targets yc,
// alpha = (Xc Xc^T + lambda I)^-1 yc and w = Xc^T alpha, which is exact and
// avoids forming the D x D system for sparse high-dimensional features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "veil/rng.hpp"
#include "veil/text.hpp"

namespace veil::probe {

inline constexpr std::size_t kDefaultDim = 16384;
inline constexpr double kDefaultLambda = 1.0;

struct FeatureVector {
    std::vector<double> values;  // length D
};

// Lowercase word tokens hashed into D buckets with +-1 sign hashing,
// L2-normalized unless all-zero. D must be a power of two.
inline FeatureVector featurize(std::string_view text, std::size_t dim) {
    if (dim == 0 || (dim & (dim - 1)) != 0)
        throw std::invalid_argument("feature dimension must be a power of two");
    FeatureVector fv;
    fv.values.assign(dim, 0.0);
    for (const auto& tok : normalized_tokens(text)) {
        std::uint64_t h = fnv1a64(tok);
        double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
        fv.values[h & (dim - 1)] += sign;
    }
    double norm2 = 0.0;
    for (double v : fv.values) norm2 += v * v;
    if (norm2 > 0.0) {
        double inv = 1.0 / std::sqrt(norm2);
        for (double& v : fv.values) v *= inv;
    }
    return fv;
}

// (sanitized text, original-compound target). The probe interface only
// accepts sanitized text; original text never enters featurization.
struct TrainPair {
    std::string sanitized_text;
    double target = 0.0;
};

struct RidgeModel {
    std::vector<double> weights;  // length D
    double bias = 0.0;
    double lambda = kDefaultLambda;
    std::size_t dim = kDefaultDim;
};

namespace detail {

// Cholesky solve of S x = b for symmetric positive-definite S (in place).
inline std::vector<double> cholesky_solve(std::vector<std::vector<double>> S,
                                          std::vector<double> b) {
    const std::size_t n = S.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = S[i][j];
            for (std::size_t k = 0; k < j; ++k) sum -= S[i][k] * S[j][k];
            if (i == j) {
                if (sum <= 0.0)
                    throw std::runtime_error(
                        "ridge system is numerically singular; use lambda > 0");
                S[i][i] = std::sqrt(sum);
            } else {
                S[i][j] = sum / S[j][j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= S[i][k] * b[k];
        b[i] = sum / S[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double sum = b[i];
        for (std::size_t k = i + 1; k < n; ++k) sum -= S[k][i] * b[k];
        b[i] = sum / S[i][i];
    }
    return b;
}

}  // namespace detail

namespace detail {

// Sorted (bucket, value) pairs; documents touch few buckets, so rows stay
// far below D entries.
using SparseRow = std::vector<std::pair<std::size_t, double>>;

inline SparseRow sparse_featurize(std::string_view text, std::size_t dim) {
    auto dense = featurize(text, dim).values;
    SparseRow row;
    for (std::size_t d = 0; d < dim; ++d)
        if (dense[d] != 0.0) row.emplace_back(d, dense[d]);
    return row;
}

inline double sparse_dot(const SparseRow& a, const SparseRow& b) {
    double out = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) out += a[i++].second * b[j++].second;
        else if (a[i].first < b[j].first) ++i;
        else ++j;
    }
    return out;
}

}  // namespace detail

// Deterministic closed-form fit via the dual normal equations: with
// centered rows Xc, alpha = (Xc Xc^T + lambda I)^-1 (y - mean(y)) and
// w = Xc^T alpha, exact and O(n^2) in memory instead of O(D^2). The seed
// parameter is part of the stable interface; the solver draws nothing
// from it.
inline RidgeModel fit_probe(const std::vector<TrainPair>& train_pairs,
                            std::size_t dim = kDefaultDim,
                            double lambda = kDefaultLambda,
                            std::uint64_t /*seed*/ = 0) {
    const std::size_t n = train_pairs.size();
    if (n < 2)
        throw std::invalid_argument("fit_probe requires >= 2 training pairs");
    if (!(lambda > 0.0))
        throw std::invalid_argument(
            "ridge requires lambda > 0; lambda = 0 is singular");

    std::vector<detail::SparseRow> X(n);
    std::vector<double> y(n);
    std::vector<double> mean(dim, 0.0);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        X[i] = detail::sparse_featurize(train_pairs[i].sanitized_text, dim);
        y[i] = train_pairs[i].target;
        y_mean += y[i];
        for (const auto& [d, v] : X[i]) mean[d] += v;
    }
    y_mean /= static_cast<double>(n);
    for (auto& m : mean) m /= static_cast<double>(n);

    // Gram matrix of centered rows plus lambda on the diagonal.
    double mu_dot_mu = 0.0;
    for (std::size_t d = 0; d < dim; ++d) mu_dot_mu += mean[d] * mean[d];
    std::vector<double> x_dot_mu(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [d, v] : X[i]) x_dot_mu[i] += v * mean[d];
    std::vector<std::vector<double>> K(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double k = detail::sparse_dot(X[i], X[j]) - x_dot_mu[i] -
                       x_dot_mu[j] + mu_dot_mu;
            K[i][j] = k;
            K[j][i] = k;
        }
        K[i][i] += lambda;
    }

    std::vector<double> yc(n);
    for (std::size_t i = 0; i < n; ++i) yc[i] = y[i] - y_mean;
    auto alpha = detail::cholesky_solve(std::move(K), std::move(yc));

    RidgeModel model;
    model.dim = dim;
    model.lambda = lambda;
    model.weights.assign(dim, 0.0);
    double alpha_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        alpha_sum += alpha[i];
        for (const auto& [d, v] : X[i]) model.weights[d] += alpha[i] * v;
    }
    for (std::size_t d = 0; d < dim; ++d)
        model.weights[d] -= alpha_sum * mean[d];
    double w_dot_mu = 0.0;
    for (std::size_t d = 0; d < dim; ++d)
        w_dot_mu += model.weights[d] * mean[d];
    model.bias = y_mean - w_dot_mu;
    return model;
}

inline double predict(const RidgeModel& model, std::string_view sanitized_text) {
    auto fv = featurize(sanitized_text, model.dim);
    double out = model.bias;
    for (std::size_t d = 0; d < model.dim; ++d)
        out += model.weights[d] * fv.values[d];
    return out;
}

inline double probe_mae(const RidgeModel& model,
                        const std::vector<TrainPair>& test_pairs) {
    if (test_pairs.empty())
        throw std::invalid_argument("probe_mae requires >= 1 test pair");
    double sum = 0.0;
    for (const auto& p : test_pairs)
        sum += std::abs(predict(model, p.sanitized_text) - p.target);
    return sum / static_cast<double>(test_pairs.size());
}

// MAE of the best constant predictor (the exact minimizer is a median).
inline double best_constant_mae(const std::vector<TrainPair>& pairs) {
    if (pairs.empty())
        throw std::invalid_argument("best_constant_mae over empty set");
    std::vector<double> targets;
    targets.reserve(pairs.size());
    for (const auto& p : pairs) targets.push_back(p.target);
    std::sort(targets.begin(), targets.end());
    double median = targets[targets.size() / 2];
    if (targets.size() % 2 == 0)
        median = 0.5 * (median + targets[targets.size() / 2 - 1]);
    double sum = 0.0;
    for (double t : targets) sum += std::abs(t - median);
    return sum / static_cast<double>(targets.size());
}

}  // namespace veil::probe
