#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ssplan/linear_model.hpp"
#include "ssplan/rng.hpp"

using namespace ssplan;
using Catch::Matchers::WithinAbs;

namespace {

// External copy of the training objective so monotonicity can be checked
// without trusting the trainer's internals.
double logistic_objective(const LinearModel& m, const std::vector<std::vector<double>>& X,
                          const std::vector<int>& y, double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double z = m.score(X[i]);
        loss += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(X.size());
    double reg = 0.0;
    for (double w : m.weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

} // namespace

TEST_CASE("logistic training separates trivially separable data") {
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 100; ++i) {
        X.push_back({-1.0});
        y.push_back(0);
        X.push_back({1.0});
        y.push_back(1);
    }
    const LinearModel m = train_logistic(X, y, TrainOptions{});
    CHECK(m.weights[0] > 0.0);
    std::vector<double> scores;
    for (const auto& x : X) scores.push_back(m.score(x));
    CHECK_THAT(rank_auc(scores, y), WithinAbs(1.0, 1e-12));
}

TEST_CASE("logistic training collapses to the prior on one-class data") {
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        X.push_back({rng.normal(), rng.normal()});
        y.push_back(0);
    }
    TrainOptions opts;
    opts.l2 = 1e-3;
    const LinearModel m = train_logistic(X, y, opts);
    for (const auto& x : X) CHECK(1.0 / (1.0 + std::exp(-m.score(x))) < 0.5);
}

TEST_CASE("logistic training loss is non-increasing in epochs") {
    Rng rng(32);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        const double a = rng.normal(), b = rng.normal();
        X.push_back({a, b});
        y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-(0.8 * a - 0.5 * b + 0.2)))) ? 1 : 0);
    }
    TrainOptions opts;
    double prev = logistic_objective(LinearModel{{0.0, 0.0}, 0.0}, X, y, opts.l2);
    for (int epochs : {1, 5, 20, 80, 200}) {
        opts.epochs = epochs;
        const double loss = logistic_objective(train_logistic(X, y, opts), X, y, opts.l2);
        CHECK(loss <= prev + 1e-6);
        prev = loss;
    }
}

TEST_CASE("training data validation") {
    CHECK_THROWS_AS(train_logistic({}, {}, TrainOptions{}), data_error);
    CHECK_THROWS_AS(train_logistic({{1.0}}, {1, 0}, TrainOptions{}), data_error);
    CHECK_THROWS_AS(train_logistic({{std::nan("")}}, {1}, TrainOptions{}), data_error);
    CHECK_THROWS_AS(train_logistic({{1.0}, {1.0, 2.0}}, {0, 1}, TrainOptions{}), data_error);
    CHECK_THROWS_AS(train_hinge({{1.0}}, {2}, TrainOptions{}), data_error);
}

TEST_CASE("hinge training finds the separating direction and is deterministic") {
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    Rng rng(33);
    for (int i = 0; i < 100; ++i) {
        const double cls = i % 2 ? 1.0 : -1.0;
        X.push_back({cls * 2.0 + 0.3 * rng.normal(), 0.3 * rng.normal()});
        y.push_back(i % 2);
    }
    const LinearModel a = train_hinge(X, y, TrainOptions{});
    CHECK(a.weights[0] > 0.0);
    int correct = 0;
    for (std::size_t i = 0; i < X.size(); ++i)
        correct += (a.score(X[i]) > 0.0) == (y[i] == 1);
    CHECK(correct >= 95);

    const LinearModel b = train_hinge(X, y, TrainOptions{});
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
}

TEST_CASE("rank_auc basics") {
    CHECK_THAT(rank_auc({0.1, 0.9, 0.2, 0.8}, {0, 1, 0, 1}), WithinAbs(1.0, 1e-12));
    CHECK_THAT(rank_auc({0.9, 0.1, 0.8, 0.2}, {0, 1, 0, 1}), WithinAbs(0.0, 1e-12));
    // All scores tied: every pair contributes 1/2.
    CHECK_THAT(rank_auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}), WithinAbs(0.5, 1e-12));
    CHECK_THROWS_AS(rank_auc({0.1, 0.2}, {1, 1}), degenerate_data_error);
}

TEST_CASE("rank_auc of independent scores hovers at one half") {
    Rng rng(34);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 20000; ++i) {
        scores.push_back(rng.uniform01());
        labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    CHECK_THAT(rank_auc(scores, labels), WithinAbs(0.5, 0.05));
}
