#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ssplan/errors.hpp"
#include "ssplan/mdp.hpp"
#include "ssplan/planner.hpp"
#include "ssplan/rng.hpp"
#include "ssplan/simulator.hpp"

namespace ssplan {

/// Across-user summary of how spread out each user's candidate quit
/// probabilities are. Reports both the mean of per-user std/mean ratios and
/// the ratio of the two averages, since the two disagree in general.
struct DiscriminationStats {
    double mean_std = 0.0;
    double mean_of_means = 0.0;
    double mean_ratio = 0.0;     // average of per-user std/mean
    double ratio_of_means = 0.0; // mean_std / mean_of_means
};

inline DiscriminationStats discrimination_stats(const std::vector<std::vector<double>>& quit_lists) {
    if (quit_lists.empty()) throw data_error("no quit lists");
    DiscriminationStats stats;
    for (const auto& list : quit_lists) {
        if (list.empty()) throw data_error("empty quit list");
        const double mean = std::accumulate(list.begin(), list.end(), 0.0) / list.size();
        double var = 0.0;
        for (double q : list) var += (q - mean) * (q - mean);
        const double std_dev = std::sqrt(var / list.size());
        stats.mean_std += std_dev;
        stats.mean_of_means += mean;
        stats.mean_ratio += mean > 0.0 ? std_dev / mean : 0.0;
    }
    const double n = static_cast<double>(quit_lists.size());
    stats.mean_std /= n;
    stats.mean_of_means /= n;
    stats.mean_ratio /= n;
    stats.ratio_of_means = stats.mean_of_means > 0.0 ? stats.mean_std / stats.mean_of_means : 0.0;
    return stats;
}

struct RelatednessStats {
    double jaccard = 0.0;
    double ndcg = 0.0;
};

namespace detail {

// Indices of the top-k values, ranked descending, lower index on ties.
inline std::vector<int> top_k_indices(const std::vector<double>& values, int k) {
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int lhs, int rhs) { return values[lhs] > values[rhs]; });
    order.resize(k);
    return order;
}

} // namespace detail

/// Similarity between the top-L items by reward and the top-L by continue
/// probability, averaged across users. NDCG uses binary gain on the shared
/// items at their positions in the continue-ranked list, discounted by
/// 1/log2(rank+1) and normalized by the all-shared ideal.
inline RelatednessStats weak_relatedness(const std::vector<std::vector<double>>& rewards,
                                         const std::vector<std::vector<double>>& continue_probs,
                                         int top_l = 20) {
    if (rewards.empty() || rewards.size() != continue_probs.size())
        throw data_error("weak_relatedness needs matching per-user lists");
    if (top_l < 1) throw config_error("top_l must be positive");
    RelatednessStats stats;
    double ideal = 0.0;
    for (int r = 1; r <= top_l; ++r) ideal += 1.0 / std::log2(static_cast<double>(r) + 1.0);

    for (std::size_t u = 0; u < rewards.size(); ++u) {
        if (rewards[u].size() != continue_probs[u].size())
            throw data_error("reward/continue list size mismatch");
        if (static_cast<int>(rewards[u].size()) < top_l)
            throw data_error("fewer candidates than top_l");
        const std::vector<int> by_reward = detail::top_k_indices(rewards[u], top_l);
        const std::vector<int> by_continue = detail::top_k_indices(continue_probs[u], top_l);
        std::vector<int> reward_set = by_reward;
        std::sort(reward_set.begin(), reward_set.end());

        int shared = 0;
        double dcg = 0.0;
        for (int rank = 0; rank < top_l; ++rank) {
            if (std::binary_search(reward_set.begin(), reward_set.end(), by_continue[rank])) {
                ++shared;
                dcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
            }
        }
        stats.jaccard += static_cast<double>(shared) / static_cast<double>(2 * top_l - shared);
        stats.ndcg += dcg / ideal;
    }
    stats.jaccard /= static_cast<double>(rewards.size());
    stats.ndcg /= static_cast<double>(rewards.size());
    return stats;
}

/// Probability source for personalized MDPs: the simulator's hidden model,
/// or trained+calibrated scorers.
struct MdpProducer {
    const GroundTruth* gt = nullptr;
    const TrainedScorers* scorers = nullptr; // null -> ground-truth source

    MdpModel operator()(const UserContext& user, int horizon) const {
        if (scorers != nullptr) return produce_mdp_trained(*scorers, *gt, user, horizon);
        return produce_mdp_ground_truth(*gt, user, horizon);
    }
    std::string source_name() const { return scorers ? "trained" : "ground_truth"; }
};

struct EvalRow {
    std::string strategy;
    int horizon = 0;
    bool dedup = false;
    double mean_ipv = 0.0;
    double mean_bl = 0.0;
    double ctr = 0.0; // mean_ipv / mean_bl
    int users = 0;
    int failures = 0;
};

struct NoisePoint {
    int level = 0; // m, noise half-width 0.02*m
    std::string strategy;
    double mean_revenue = 0.0; // expected engagement under the clean model
};

struct EvalReport {
    std::string score_source;
    std::uint64_t seed = 0;
    std::vector<EvalRow> rows;
    std::vector<NoisePoint> noise;
    DiscriminationStats discrimination;
    RelatednessStats relatedness;
    bool has_stats = false;
};

struct EvalOptions {
    std::vector<int> horizons{20, 50};
    int beam_size = 5;
    bool dedup = false;
    int noise_max = 10;
    std::uint64_t seed = 7;
};

namespace detail {

inline Plan run_strategy(const MdpModel& model, const std::string& strategy, int beam_size) {
    if (strategy == "ssp") return ssp_plan(model).plan;
    if (strategy == "greedy") return greedy_plan(model);
    if (strategy == "beam") return beam_search_plan(model, beam_size);
    if (strategy == "ssp_dedup") return ssp_plan_dedup(model);
    if (strategy == "greedy_dedup") return greedy_dedup_plan(model);
    if (strategy == "beam_dedup") return beam_search_dedup_plan(model, beam_size);
    throw config_error("unknown strategy: " + strategy);
}

inline std::vector<std::string> strategy_set(bool dedup) {
    if (dedup) return {"ssp_dedup", "beam_dedup", "greedy_dedup"};
    return {"ssp", "beam", "greedy"};
}

} // namespace detail

/// Plans every strategy for every user at every horizon and accumulates the
/// closed-form engagement measures under the same model used for planning.
/// Per-user failures are counted, not fatal.
inline EvalReport run_offline_comparison(const MdpProducer& producer,
                                         const std::vector<UserContext>& users,
                                         const EvalOptions& options) {
    if (users.empty()) throw data_error("no users to evaluate");
    EvalReport report;
    report.score_source = producer.source_name();
    report.seed = options.seed;
    const std::vector<std::string> strategies = detail::strategy_set(options.dedup);
    for (int horizon : options.horizons) {
        std::vector<double> sum_ipv(strategies.size(), 0.0), sum_bl(strategies.size(), 0.0);
        std::vector<int> ok(strategies.size(), 0), failed(strategies.size(), 0);
        for (const UserContext& user : users) {
            std::optional<MdpModel> model;
            try {
                model.emplace(producer(user, horizon));
            } catch (const std::exception&) {
                for (std::size_t s = 0; s < strategies.size(); ++s) ++failed[s];
                continue;
            }
            for (std::size_t s = 0; s < strategies.size(); ++s) {
                try {
                    const Plan plan = detail::run_strategy(*model, strategies[s], options.beam_size);
                    sum_ipv[s] += plan.expected_ipv;
                    sum_bl[s] += plan.expected_bl;
                    ++ok[s];
                } catch (const std::exception&) {
                    ++failed[s];
                }
            }
        }
        for (std::size_t s = 0; s < strategies.size(); ++s) {
            EvalRow row;
            row.strategy = strategies[s];
            row.horizon = horizon;
            row.dedup = options.dedup;
            row.users = ok[s];
            row.failures = failed[s];
            if (ok[s] > 0) {
                row.mean_ipv = sum_ipv[s] / ok[s];
                row.mean_bl = sum_bl[s] / ok[s];
                row.ctr = row.mean_ipv / row.mean_bl;
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

/// Noise study: plan on a perturbed copy of each user's model, score the
/// planned path with the clean model. At level 0 this reproduces the
/// noiseless comparison exactly.
inline std::vector<NoisePoint> run_noise_sweep(const MdpProducer& producer,
                                               const std::vector<UserContext>& users, int horizon,
                                               const EvalOptions& options) {
    if (users.empty()) throw data_error("no users to evaluate");
    if (options.noise_max < 0 || options.noise_max > 10)
        throw config_error("noise_max must be in 0..10");
    const std::vector<std::string> strategies = detail::strategy_set(false);
    const int levels = options.noise_max + 1;
    std::vector<double> sum(static_cast<std::size_t>(levels) * strategies.size(), 0.0);

    for (std::size_t u = 0; u < users.size(); ++u) {
        const MdpModel clean = producer(users[u], horizon);
        for (int m = 0; m < levels; ++m) {
            const MdpModel noisy =
                perturb_model(clean, m, derive_seed(options.seed, "noise", u * 64 + m));
            for (std::size_t s = 0; s < strategies.size(); ++s) {
                const Plan plan = detail::run_strategy(noisy, strategies[s], options.beam_size);
                sum[m * strategies.size() + s] += expected_ipv(clean, plan.path);
            }
        }
    }
    std::vector<NoisePoint> points;
    for (int m = 0; m < levels; ++m)
        for (std::size_t s = 0; s < strategies.size(); ++s)
            points.push_back(NoisePoint{m, strategies[s],
                                        sum[m * strategies.size() + s] /
                                            static_cast<double>(users.size())});
    return points;
}

/// Dataset characteristic statistics from each user's step-1 model row:
/// quit-probability discrimination and the reward/continue relatedness of
/// the top-L candidate lists.
inline std::pair<DiscriminationStats, RelatednessStats>
dataset_stats(const MdpProducer& producer, const std::vector<UserContext>& users, int top_l = 20) {
    std::vector<std::vector<double>> quit_lists, rewards, continues;
    for (const UserContext& user : users) {
        const MdpModel model = producer(user, 1);
        std::vector<double> quit_row(model.num_items), reward_row(model.num_items),
            continue_row(model.num_items);
        for (int a = 0; a < model.num_items; ++a) {
            quit_row[a] = model.quit_at(0, a);
            reward_row[a] = model.reward_at(0, a);
            continue_row[a] = 1.0 - model.quit_at(0, a);
        }
        quit_lists.push_back(std::move(quit_row));
        rewards.push_back(std::move(reward_row));
        continues.push_back(std::move(continue_row));
    }
    return {discrimination_stats(quit_lists), weak_relatedness(rewards, continues, top_l)};
}

} // namespace ssplan
