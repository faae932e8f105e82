#pragma once

#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "ssplan/calibration.hpp"
#include "ssplan/dataset.hpp"
#include "ssplan/errors.hpp"
#include "ssplan/linear_model.hpp"
#include "ssplan/mdp.hpp"
#include "ssplan/rng.hpp"

namespace ssplan {

struct SimConfig {
    int num_users = 500;
    int catalog_size = 5000;
    int feature_dim = 16; // item attributes; instances add step + exposure features
    int bag_size = 6;     // items per logged page
    int max_pages = 12;
    int horizon = 20;
    double rho = 0.2;         // click/continue score correlation
    double noise_scale = 1.0; // item feature spread
    std::uint64_t seed = 7;
    int num_candidates = 100; // per-user planning candidate set
    int num_categories = 20;
    // planted-witness log generation (MIL diagnostics)
    int planted_sessions = 2500;
    double planted_separation = 3.0;

    void validate() const {
        if (num_users < 1 || catalog_size < 1 || feature_dim < 2 || bag_size < 1 ||
            max_pages < 1 || horizon < 1 || num_candidates < 1 || num_categories < 1 ||
            planted_sessions < 1)
            throw config_error("simulator config values must be positive");
        if (rho < -1.0 || rho > 1.0) throw config_error("rho must lie in [-1, 1]");
        if (noise_scale <= 0.0) throw config_error("noise_scale must be positive");
        if (planted_separation <= 0.0) throw config_error("planted_separation must be positive");
        if (num_candidates > catalog_size)
            throw config_error("num_candidates cannot exceed catalog_size");
    }
};

struct CatalogItem {
    std::vector<double> features;
    int category = 0;
    std::string id;
};

/// Hidden user model: true click/continue probabilities are logistic in a
/// linear score over [item features, step index, category exposure]. The
/// continue direction is rho * click direction plus an orthogonal
/// complement, so `rho` tunes how related the two probabilities are.
struct GroundTruth {
    std::vector<CatalogItem> catalog;
    std::vector<double> click_weights;    // feature_dim + 2, step then exposure last
    std::vector<double> continue_weights; // same layout
    double click_bias = 0.0;
    double continue_bias = 0.0;
    double rho = 0.0;
    double step_scale = 50.0;
    int feature_dim = 0;
    int num_categories = 0;
    std::uint64_t seed = 0;

    std::vector<std::string> feature_schema() const {
        std::vector<std::string> names;
        for (int j = 0; j < feature_dim; ++j) names.push_back("f" + std::to_string(j));
        names.push_back("step");
        names.push_back("category_exposure");
        return names;
    }

    // Full instance feature vector for item shown at 1-based step position.
    std::vector<double> instance_features(const CatalogItem& item, int step,
                                          double exposure) const {
        std::vector<double> x = item.features;
        x.push_back(static_cast<double>(step) / step_scale);
        x.push_back(exposure);
        return x;
    }

    double true_click_prob(const std::vector<double>& x) const {
        return prob(click_weights, click_bias, x);
    }
    double true_continue_prob(const std::vector<double>& x) const {
        return prob(continue_weights, continue_bias, x);
    }

  private:
    static double prob(const std::vector<double>& w, double bias,
                       const std::vector<double>& x) {
        double z = bias;
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
        const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                  : std::exp(z) / (1.0 + std::exp(z));
        return std::clamp(p, 1e-6, 1.0 - 1e-6);
    }
};

/// Per-session planning context: what the user has been exposed to before
/// the session (frozen during planning) and their candidate item pool.
struct UserContext {
    std::string user_id;
    std::vector<double> category_exposure; // normalized count per category
    std::vector<int> candidates;           // catalog indices
};

namespace detail {

// Base score scales and interactive-feature coefficients of the hidden
// model. Chosen so that continue probabilities sit low enough for sessions
// to end within a few pages while keeping a wide quit spread across items.
constexpr double kClickScale = 1.2;
constexpr double kContinueScale = 1.0;
constexpr double kClickBias = -1.0;
constexpr double kContinueBias = -1.5;
constexpr double kClickStepCoef = -0.1;
constexpr double kContinueStepCoef = -0.35;
constexpr double kExposureCoefFactor = 0.3;
constexpr int kExposureLevels = 8;

inline std::vector<double> random_unit(Rng& rng, int dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& c : v) {
            c = rng.normal();
            norm += c * c;
        }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (double& c : v) c /= norm;
    return v;
}

} // namespace detail

/// Deterministically samples the catalog and the hidden probability model.
inline GroundTruth generate_ground_truth(const SimConfig& config) {
    config.validate();
    Rng rng(derive_seed(config.seed, "ground-truth"));
    GroundTruth gt;
    gt.feature_dim = config.feature_dim;
    gt.num_categories = config.num_categories;
    gt.rho = config.rho;
    gt.seed = config.seed;

    gt.catalog.reserve(config.catalog_size);
    for (int i = 0; i < config.catalog_size; ++i) {
        CatalogItem item;
        item.features.resize(config.feature_dim);
        for (double& v : item.features) v = config.noise_scale * rng.normal();
        item.category = rng.uniform_int(config.num_categories);
        item.id = "item_" + std::to_string(i);
        gt.catalog.push_back(std::move(item));
    }

    // Orthonormal click/continue directions in item-feature space.
    const std::vector<double> click_dir = detail::random_unit(rng, config.feature_dim);
    std::vector<double> ortho = detail::random_unit(rng, config.feature_dim);
    double dot = 0.0;
    for (int j = 0; j < config.feature_dim; ++j) dot += ortho[j] * click_dir[j];
    double norm = 0.0;
    for (int j = 0; j < config.feature_dim; ++j) {
        ortho[j] -= dot * click_dir[j];
        norm += ortho[j] * ortho[j];
    }
    norm = std::sqrt(norm);
    for (double& v : ortho) v /= norm;

    const double mix = std::sqrt(1.0 - config.rho * config.rho);
    gt.click_weights.resize(config.feature_dim + 2);
    gt.continue_weights.resize(config.feature_dim + 2);
    for (int j = 0; j < config.feature_dim; ++j) {
        gt.click_weights[j] = detail::kClickScale * click_dir[j];
        gt.continue_weights[j] =
            detail::kContinueScale * (config.rho * click_dir[j] + mix * ortho[j]);
    }
    gt.click_weights[config.feature_dim] = detail::kClickStepCoef;
    gt.continue_weights[config.feature_dim] = detail::kContinueStepCoef;
    // Exposure coefficients proportional to the score scales so that rho = 1
    // makes the two scores exactly comonotone within a step.
    gt.click_weights[config.feature_dim + 1] =
        detail::kExposureCoefFactor * detail::kClickScale;
    gt.continue_weights[config.feature_dim + 1] =
        detail::kExposureCoefFactor * detail::kContinueScale;
    gt.click_bias = detail::kClickBias;
    gt.continue_bias = detail::kContinueBias;
    return gt;
}

/// Users are a pure function of (config, user index): exposure profile plus
/// a candidate pool sampled without replacement.
inline std::vector<UserContext> generate_users(const GroundTruth& gt, const SimConfig& config) {
    config.validate();
    std::vector<UserContext> users;
    users.reserve(config.num_users);
    for (int u = 0; u < config.num_users; ++u) {
        Rng rng(derive_seed(config.seed, "user", static_cast<std::uint64_t>(u)));
        UserContext ctx;
        ctx.user_id = "user_" + std::to_string(u);
        ctx.category_exposure.resize(config.num_categories);
        for (double& e : ctx.category_exposure)
            e = static_cast<double>(rng.uniform_int(detail::kExposureLevels)) /
                static_cast<double>(detail::kExposureLevels);
        std::unordered_set<int> seen;
        while (static_cast<int>(ctx.candidates.size()) < config.num_candidates) {
            const int pick = rng.uniform_int(static_cast<int>(gt.catalog.size()));
            if (seen.insert(pick).second) ctx.candidates.push_back(pick);
        }
        users.push_back(std::move(ctx));
    }
    return users;
}

/// One logged browse session per user. Pages of `bag_size` items are drawn
/// from the catalog; every instance gets a true continue label and a click
/// label from the hidden model; a page keeps the session alive iff at least
/// one instance continues, so bag labels are MIL-consistent by construction.
/// The session ends at its first negative bag or after max_pages (truncated,
/// no negative bag).
inline std::vector<SessionLog> generate_sessions(const GroundTruth& gt, const SimConfig& config) {
    config.validate();
    const std::vector<UserContext> users = generate_users(gt, config);
    std::vector<SessionLog> sessions;
    sessions.reserve(users.size());
    for (std::size_t u = 0; u < users.size(); ++u) {
        Rng rng(derive_seed(config.seed, "session", static_cast<std::uint64_t>(u)));
        const UserContext& user = users[u];
        SessionLog log;
        log.user_id = user.user_id;
        int step = 1;
        for (int page = 0; page < config.max_pages; ++page) {
            Bag bag;
            std::vector<std::uint8_t> clicks, continues;
            for (int slot = 0; slot < config.bag_size; ++slot, ++step) {
                const int idx = rng.uniform_int(static_cast<int>(gt.catalog.size()));
                const CatalogItem& item = gt.catalog[idx];
                Instance instance;
                instance.features =
                    gt.instance_features(item, step, user.category_exposure[item.category]);
                instance.item_id = item.id;
                instance.category_id = "cat_" + std::to_string(item.category);
                const std::uint8_t cont =
                    rng.bernoulli(gt.true_continue_prob(instance.features)) ? 1 : 0;
                const std::uint8_t click =
                    rng.bernoulli(gt.true_click_prob(instance.features)) ? 1 : 0;
                bag.instances.push_back(std::move(instance));
                continues.push_back(cont);
                clicks.push_back(click);
            }
            bool any_continue = false;
            for (std::uint8_t c : continues) any_continue |= c != 0;
            bag.positive = any_continue;
            log.bags.push_back(std::move(bag));
            log.clicks.push_back(std::move(clicks));
            log.true_continue.push_back(std::move(continues));
            if (!any_continue) break;
        }
        sessions.push_back(std::move(log));
    }
    return sessions;
}

/// Planted-witness logs for MIL diagnostics: every positive bag holds
/// exactly one instance from the positive cluster (the planted witness, at
/// a random slot) among negative-cluster instances; negative bags are all
/// negative-cluster. Cluster means sit `planted_separation` apart along a
/// seeded direction.
inline std::vector<SessionLog> generate_planted_sessions(const SimConfig& config) {
    config.validate();
    Rng dir_rng(derive_seed(config.seed, "planted-direction"));
    const std::vector<double> axis = detail::random_unit(dir_rng, config.feature_dim);
    const double half = 0.5 * config.planted_separation;

    std::vector<SessionLog> sessions;
    sessions.reserve(config.planted_sessions);
    for (int s = 0; s < config.planted_sessions; ++s) {
        Rng rng(derive_seed(config.seed, "planted", static_cast<std::uint64_t>(s)));
        SessionLog log;
        log.user_id = "planted_" + std::to_string(s);
        int n_pos = 1;
        while (n_pos < 6 && rng.bernoulli(0.55)) ++n_pos;

        auto draw = [&](bool positive_cluster) {
            Instance instance;
            instance.features.resize(config.feature_dim);
            const double shift = positive_cluster ? half : -half;
            for (int j = 0; j < config.feature_dim; ++j)
                instance.features[j] = shift * axis[j] + rng.normal();
            instance.category_id = "cat_0";
            return instance;
        };

        for (int b = 0; b <= n_pos; ++b) {
            const bool positive = b < n_pos;
            const int witness_slot = positive ? rng.uniform_int(config.bag_size) : -1;
            Bag bag;
            bag.positive = positive;
            std::vector<std::uint8_t> clicks, continues;
            for (int slot = 0; slot < config.bag_size; ++slot) {
                Instance instance = draw(slot == witness_slot);
                instance.item_id = "p" + std::to_string(s) + "_" + std::to_string(b) + "_" +
                                   std::to_string(slot);
                bag.instances.push_back(std::move(instance));
                continues.push_back(slot == witness_slot ? 1 : 0);
                clicks.push_back(rng.bernoulli(0.15) ? 1 : 0);
            }
            log.bags.push_back(std::move(bag));
            log.clicks.push_back(std::move(clicks));
            log.true_continue.push_back(std::move(continues));
        }
        sessions.push_back(std::move(log));
    }
    return sessions;
}

/// Trained scorers plus calibrations, as persisted by the training and
/// calibration commands.
struct TrainedScorers {
    LinearModel click_model;
    Calibration click_cal;
    LinearModel continue_model; // scores "keeps browsing"
    Calibration continue_cal;
    std::vector<std::string> feature_schema;
};

namespace detail {

template <typename RewardFn, typename ContinueFn>
MdpModel produce_mdp_impl(const GroundTruth& gt, const UserContext& user, int horizon,
                          RewardFn&& reward_prob, ContinueFn&& continue_prob) {
    if (horizon < 1) throw config_error("horizon must be >= 1");
    if (user.candidates.empty()) throw data_error("user has no candidate items");
    const int K = static_cast<int>(user.candidates.size());
    MdpModel model = MdpModel::zeros(horizon, K);
    for (int a = 0; a < K; ++a) model.item_ids[a] = gt.catalog[user.candidates[a]].id;
    for (int t = 0; t < horizon; ++t)
        for (int a = 0; a < K; ++a) {
            const CatalogItem& item = gt.catalog[user.candidates[a]];
            const std::vector<double> x =
                gt.instance_features(item, t + 1, user.category_exposure[item.category]);
            model.reward_at(t, a) = reward_prob(x);
            model.quit_at(t, a) = 1.0 - continue_prob(x);
        }
    return model;
}

} // namespace detail

/// Personalized MDP with the hidden model as the probability source; the
/// evaluation oracle.
inline MdpModel produce_mdp_ground_truth(const GroundTruth& gt, const UserContext& user,
                                         int horizon) {
    return detail::produce_mdp_impl(
        gt, user, horizon, [&](const std::vector<double>& x) { return gt.true_click_prob(x); },
        [&](const std::vector<double>& x) { return gt.true_continue_prob(x); });
}

/// Personalized MDP filled from trained, calibrated scorers. Rewards are
/// calibrated click probabilities; quit entries are one minus the
/// calibrated continue probability.
inline MdpModel produce_mdp_trained(const TrainedScorers& scorers, const GroundTruth& gt,
                                    const UserContext& user, int horizon) {
    const std::vector<std::string> expected = gt.feature_schema();
    if (scorers.feature_schema != expected)
        throw schema_error("model feature schema does not match the simulator schema");
    if (scorers.click_model.weights.size() != expected.size() ||
        scorers.continue_model.weights.size() != expected.size())
        throw schema_error("model weight dimension does not match the feature schema");
    return detail::produce_mdp_impl(
        gt, user, horizon,
        [&](const std::vector<double>& x) {
            return apply_platt(scorers.click_cal, scorers.click_model.score(x));
        },
        [&](const std::vector<double>& x) {
            return apply_platt(scorers.continue_cal, scorers.continue_model.score(x));
        });
}

struct RolloutResult {
    int ipv = 0; // clicks collected
    int bl = 0;  // items viewed before quitting
};

/// Samples one user walk along the planned path under the hidden model:
/// view item, maybe click, then continue or quit. Stops at the first quit
/// or the end of the path.
inline RolloutResult rollout(const GroundTruth& gt, const std::vector<int>& path,
                             const UserContext& user, std::uint64_t seed) {
    if (path.empty()) throw path_error("rollout path is empty");
    Rng rng(seed);
    RolloutResult result;
    for (std::size_t t = 0; t < path.size(); ++t) {
        const int a = path[t];
        if (a < 0 || a >= static_cast<int>(user.candidates.size()))
            throw path_error("rollout path index out of range");
        const CatalogItem& item = gt.catalog[user.candidates[a]];
        const std::vector<double> x = gt.instance_features(
            item, static_cast<int>(t) + 1, user.category_exposure[item.category]);
        result.bl = static_cast<int>(t) + 1;
        if (rng.bernoulli(gt.true_click_prob(x))) ++result.ipv;
        if (t + 1 < path.size() && !rng.bernoulli(gt.true_continue_prob(x))) break;
    }
    return result;
}

} // namespace ssplan
