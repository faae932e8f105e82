#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ssplan/errors.hpp"

namespace ssplan {

/// Linear scorer w.x + b. The only model family in this project; quit and
/// click models differ in their training loss, not their shape.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;

    double score(const std::vector<double>& x) const {
        double s = bias;
        for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i];
        return s;
    }
};

struct TrainOptions {
    double learning_rate = 0.1;
    int epochs = 200;
    double l2 = 1e-4;
    std::uint64_t seed = 0; // kept for API symmetry; training is full-batch
};

namespace detail {

inline void check_training_data(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels) {
    if (features.empty()) throw data_error("no training samples");
    if (features.size() != labels.size()) throw data_error("features/labels size mismatch");
    const std::size_t dim = features.front().size();
    if (dim == 0) throw data_error("zero-dimensional features");
    for (const auto& x : features) {
        if (x.size() != dim) throw data_error("inconsistent feature dimension");
        for (double v : x)
            if (!std::isfinite(v)) throw data_error("non-finite feature value");
    }
    for (int y : labels)
        if (y != 0 && y != 1) throw data_error("labels must be 0 or 1");
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace detail

/// L2-regularized logistic regression by deterministic full-batch gradient
/// descent with a 1/sqrt(epoch) step decay. Steps that would increase the
/// objective are halved until they do not, so the training loss is
/// non-increasing across epochs.
inline LinearModel train_logistic(const std::vector<std::vector<double>>& features,
                                  const std::vector<int>& labels, const TrainOptions& opts) {
    detail::check_training_data(features, labels);
    const std::size_t n = features.size();
    const std::size_t dim = features.front().size();
    LinearModel model;
    model.weights.assign(dim, 0.0);

    auto loss_of = [&](const LinearModel& m) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = m.score(features[i]);
            // -log p(y|z) written in a numerically stable form
            loss += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
        }
        loss /= static_cast<double>(n);
        double reg = 0.0;
        for (double w : m.weights) reg += w * w;
        return loss + 0.5 * opts.l2 * reg;
    };

    std::vector<double> grad(dim);
    double prev_loss = loss_of(model);
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double err = detail::sigmoid(model.score(features[i])) - labels[i];
            for (std::size_t j = 0; j < dim; ++j) grad[j] += err * features[i][j];
            grad_bias += err;
        }
        for (std::size_t j = 0; j < dim; ++j)
            grad[j] = grad[j] / static_cast<double>(n) + opts.l2 * model.weights[j];
        grad_bias /= static_cast<double>(n);

        double step = opts.learning_rate / std::sqrt(static_cast<double>(epoch));
        LinearModel candidate = model;
        for (int halving = 0; halving < 40; ++halving) {
            for (std::size_t j = 0; j < dim; ++j)
                candidate.weights[j] = model.weights[j] - step * grad[j];
            candidate.bias = model.bias - step * grad_bias;
            const double candidate_loss = loss_of(candidate);
            if (candidate_loss <= prev_loss + 1e-12) {
                model = candidate;
                prev_loss = candidate_loss;
                break;
            }
            step *= 0.5;
        }
    }
    return model;
}

/// L2-regularized hinge-loss classifier by deterministic full-batch
/// subgradient descent, same decay schedule. Labels in {0,1} are mapped to
/// {-1,+1} margins internally.
inline LinearModel train_hinge(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& labels, const TrainOptions& opts) {
    detail::check_training_data(features, labels);
    const std::size_t n = features.size();
    const std::size_t dim = features.front().size();
    LinearModel model;
    model.weights.assign(dim, 0.0);

    std::vector<double> grad(dim);
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = labels[i] ? 1.0 : -1.0;
            if (y * model.score(features[i]) < 1.0) {
                for (std::size_t j = 0; j < dim; ++j) grad[j] -= y * features[i][j];
                grad_bias -= y;
            }
        }
        const double step = opts.learning_rate / std::sqrt(static_cast<double>(epoch));
        for (std::size_t j = 0; j < dim; ++j) {
            grad[j] = grad[j] / static_cast<double>(n) + opts.l2 * model.weights[j];
            model.weights[j] -= step * grad[j];
        }
        model.bias -= step * grad_bias / static_cast<double>(n);
    }
    return model;
}

/// Rank AUC of scores against binary labels; tied scores contribute 1/2 via
/// midranks.
inline double rank_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw data_error("scores/labels size mismatch");
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (int y : labels) positives += y != 0;
    if (positives == 0 || positives == n)
        throw degenerate_data_error("AUC needs both labels present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        if (scores[lhs] != scores[rhs]) return scores[lhs] < scores[rhs];
        return lhs < rhs;
    });

    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) positive_rank_sum += midrank;
        i = j;
    }
    const double n_pos = static_cast<double>(positives);
    const double n_neg = static_cast<double>(n - positives);
    return (positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

} // namespace ssplan
