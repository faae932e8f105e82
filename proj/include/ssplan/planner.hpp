#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ssplan/errors.hpp"
#include "ssplan/mdp.hpp"
#include "ssplan/rng.hpp"

namespace ssplan {

struct PlannerConfig {
    int beam_size = 5;
    bool dedup = false;
};

struct SspResult {
    Plan plan;
    StateValueTable table;
};

namespace detail {

inline void check_model_shape(const MdpModel& model) {
    if (model.horizon < 1 || model.num_items < 1)
        throw model_error("planner requires horizon >= 1 and num_items >= 1");
}

inline void check_dedup_feasible(const MdpModel& model) {
    if (model.num_items < model.horizon)
        throw infeasible_error("dedup planning needs num_items >= horizon");
}

inline Plan make_plan(const MdpModel& model, std::vector<int> path, std::string strategy,
                      int beam_size = 0) {
    Plan plan;
    plan.path = std::move(path);
    plan.expected_ipv = expected_ipv(model, plan.path);
    plan.expected_bl = expected_bl(model, plan.path);
    plan.expected_ctr = expected_ctr(plan.expected_ipv, plan.expected_bl);
    plan.strategy = std::move(strategy);
    plan.beam_size = beam_size;
    return plan;
}

// Backward induction over the chain-with-absorbing-state structure.
// values[t] = V*(s_{t+1}) in 0-based step indexing; values[T] = 0 is the
// absorbing state. The last step never continues, so its value is the plain
// reward maximum and the stored quit row for it is never used.
//
// The argmax scan runs four independent comparison chains to keep the
// reduction off the critical path; all tie-breaks still resolve to the
// lowest item index.
inline StateValueTable backward_induction(const MdpModel& model) {
    const int T = model.horizon;
    const int K = model.num_items;
    StateValueTable table;
    table.values.assign(T + 1, 0.0);
    table.argmax_actions.assign(T, 0);
    for (int t = T - 1; t >= 0; --t) {
        const double* reward_row = model.reward.data() + static_cast<std::size_t>(t) * K;
        const double* quit_row = model.quit.data() + static_cast<std::size_t>(t) * K;
        double best = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        if (t == T - 1) {
            // Last step: the session ends with certainty, so the value is
            // the reward alone and the stored quit row is never read.
            for (int a = 0; a < K; ++a)
                if (reward_row[a] > best) {
                    best = reward_row[a];
                    best_a = a;
                }
        } else {
            const double v_next = table.values[t + 1];
            double lane_best[4] = {best, best, best, best};
            int lane_arg[4] = {0, 0, 0, 0};
            int a = 0;
            for (; a + 4 <= K; a += 4) {
                for (int lane = 0; lane < 4; ++lane) {
                    const double v = reward_row[a + lane] + (1.0 - quit_row[a + lane]) * v_next;
                    if (v > lane_best[lane]) { // strict: first maximum wins within a lane
                        lane_best[lane] = v;
                        lane_arg[lane] = a + lane;
                    }
                }
            }
            for (int lane = 0; lane < 4; ++lane)
                if (lane_best[lane] > best ||
                    (lane_best[lane] == best && lane_arg[lane] < best_a)) {
                    best = lane_best[lane];
                    best_a = lane_arg[lane];
                }
            for (; a < K; ++a) {
                const double v = reward_row[a] + (1.0 - quit_row[a]) * v_next;
                if (v > best) {
                    best = v;
                    best_a = a;
                }
            }
        }
        table.values[t] = best;
        table.argmax_actions[t] = best_a;
    }
    return table;
}

// Per-step action scores under the optimal continuation, i.e. the
// quantities maximized during backward induction.
inline std::vector<double> action_values_at(const MdpModel& model, const StateValueTable& table,
                                            int t) {
    const int K = model.num_items;
    std::vector<double> q(K);
    const double v_next = (t == model.horizon - 1) ? 0.0 : table.values[t + 1];
    for (int a = 0; a < K; ++a)
        q[a] = (t == model.horizon - 1) ? model.reward_at(t, a)
                                        : model.reward_at(t, a) + (1.0 - model.quit_at(t, a)) * v_next;
    return q;
}

} // namespace detail

/// Exact solution of the expected-engagement maximization by backward
/// dynamic programming. Runs in O(T*K). Ties break to the lowest item index.
inline SspResult ssp_plan(const MdpModel& model) {
    detail::check_model_shape(model);
    StateValueTable table = detail::backward_induction(model);
    SspResult result;
    result.plan = detail::make_plan(model, table.argmax_actions, "ssp");
    result.table = std::move(table);
    return result;
}

/// Per-step argmax of immediate reward; quit probabilities are ignored when
/// choosing but still enter the returned expected values.
inline Plan greedy_plan(const MdpModel& model) {
    detail::check_model_shape(model);
    std::vector<int> path(model.horizon, 0);
    for (int t = 0; t < model.horizon; ++t) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < model.num_items; ++a) {
            if (model.reward_at(t, a) > best) {
                best = model.reward_at(t, a);
                path[t] = a;
            }
        }
    }
    return detail::make_plan(model, std::move(path), "greedy");
}

namespace detail {

struct BeamEntry {
    double ipv = 0.0;
    double survival = 1.0;
    std::vector<int> path;
};

inline bool beam_better(const BeamEntry& lhs, const BeamEntry& rhs) {
    if (lhs.ipv != rhs.ipv) return lhs.ipv > rhs.ipv;
    return lhs.path < rhs.path; // lexicographically smaller wins ties
}

inline Plan beam_search_impl(const MdpModel& model, int beam_size, bool dedup) {
    check_model_shape(model);
    if (beam_size < 1) throw config_error("beam size must be >= 1");
    if (dedup) check_dedup_feasible(model);

    std::vector<BeamEntry> beam{BeamEntry{}};
    std::vector<BeamEntry> next;
    for (int t = 0; t < model.horizon; ++t) {
        next.clear();
        for (const BeamEntry& entry : beam) {
            for (int a = 0; a < model.num_items; ++a) {
                if (dedup &&
                    std::find(entry.path.begin(), entry.path.end(), a) != entry.path.end())
                    continue;
                BeamEntry ext;
                ext.ipv = entry.ipv + entry.survival * model.reward_at(t, a);
                ext.survival = entry.survival * (1.0 - model.quit_at(t, a));
                ext.path = entry.path;
                ext.path.push_back(a);
                next.push_back(std::move(ext));
            }
        }
        std::sort(next.begin(), next.end(), beam_better);
        if (static_cast<int>(next.size()) > beam_size) next.resize(beam_size);
        beam.swap(next);
    }
    return make_plan(model, beam.front().path, dedup ? "beam_dedup" : "beam", beam_size);
}

} // namespace detail

/// Left-to-right beam over path prefixes scored by their partial expected
/// engagement; keeps the top `beam_size` prefixes per depth. O(S*T*K) plus
/// the per-depth sort.
inline Plan beam_search_plan(const MdpModel& model, int beam_size) {
    return detail::beam_search_impl(model, beam_size, /*dedup=*/false);
}

/// Exhaustive maximizer over all K^T paths. Test oracle; guarded to small
/// instances.
inline Plan brute_force_plan(const MdpModel& model) {
    detail::check_model_shape(model);
    double paths = 1.0;
    for (int t = 0; t < model.horizon; ++t) {
        paths *= model.num_items;
        if (paths > 1e6) throw size_error("brute_force_plan: K^T exceeds 1e6");
    }
    std::vector<int> path(model.horizon, 0), best;
    double best_value = -1.0;
    while (true) {
        const double v = expected_ipv(model, path);
        if (v > best_value) { // first maximum found is lexicographically smallest
            best_value = v;
            best = path;
        }
        int pos = model.horizon - 1;
        while (pos >= 0 && path[pos] == model.num_items - 1) path[pos--] = 0;
        if (pos < 0) break;
        ++path[pos];
    }
    return detail::make_plan(model, std::move(best), "brute_force");
}

/// Duplicate-free compromise: a backward phase computes the unconstrained
/// optimal values (an upper bound once dedup applies) and keeps the top-T
/// actions per step ranked by their backed-up score; a forward phase then
/// picks, step by step, the best candidate not used yet, removing each pick
/// from the remaining steps' lists. Not the constrained optimum.
inline Plan ssp_plan_dedup(const MdpModel& model) {
    detail::check_model_shape(model);
    detail::check_dedup_feasible(model);
    const int T = model.horizon;
    const StateValueTable table = detail::backward_induction(model);

    std::vector<std::vector<double>> step_scores(T);
    std::vector<std::vector<int>> candidates(T);
    for (int t = 0; t < T; ++t) {
        step_scores[t] = detail::action_values_at(model, table, t);
        std::vector<int> order(model.num_items);
        for (int a = 0; a < model.num_items; ++a) order[a] = a;
        std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
            return step_scores[t][lhs] > step_scores[t][rhs];
        });
        order.resize(T); // keep the optimal T items per step
        candidates[t] = std::move(order);
    }

    std::vector<bool> used(model.num_items, false);
    std::vector<int> path;
    path.reserve(T);
    for (int t = 0; t < T; ++t) {
        int pick = -1;
        for (int a : candidates[t]) {
            if (!used[a]) {
                pick = a;
                break;
            }
        }
        if (pick < 0) {
            // Candidate list exhausted; fall back to the best unused action.
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < model.num_items; ++a) {
                if (!used[a] && step_scores[t][a] > best) {
                    best = step_scores[t][a];
                    pick = a;
                }
            }
        }
        used[pick] = true;
        path.push_back(pick);
    }
    return detail::make_plan(model, std::move(path), "ssp_dedup");
}

/// Greedy with previously chosen items excluded from each step's candidates.
inline Plan greedy_dedup_plan(const MdpModel& model) {
    detail::check_model_shape(model);
    detail::check_dedup_feasible(model);
    std::vector<bool> used(model.num_items, false);
    std::vector<int> path;
    path.reserve(model.horizon);
    for (int t = 0; t < model.horizon; ++t) {
        double best = -std::numeric_limits<double>::infinity();
        int pick = -1;
        for (int a = 0; a < model.num_items; ++a) {
            if (!used[a] && model.reward_at(t, a) > best) {
                best = model.reward_at(t, a);
                pick = a;
            }
        }
        used[pick] = true;
        path.push_back(pick);
    }
    return detail::make_plan(model, std::move(path), "greedy_dedup");
}

/// Beam search constrained to repeat-free prefixes.
inline Plan beam_search_dedup_plan(const MdpModel& model, int beam_size) {
    return detail::beam_search_impl(model, beam_size, /*dedup=*/true);
}

/// Entry-wise Uniform(-0.02m, +0.02m) noise on both matrices, clamped back
/// to [0,1]. m = 0 returns an exact copy. Deterministic in `seed`; entries
/// are perturbed in row-major order, rewards first.
inline MdpModel perturb_model(const MdpModel& model, int noise_level, std::uint64_t seed) {
    if (noise_level < 0 || noise_level > 10)
        throw config_error("noise level must be in 0..10");
    MdpModel noisy = model;
    if (noise_level == 0) return noisy;
    const double half_width = 0.02 * noise_level;
    Rng rng(seed);
    auto jitter = [&](double v) {
        return std::clamp(v + rng.uniform(-half_width, half_width), 0.0, 1.0);
    };
    for (double& v : noisy.reward) v = jitter(v);
    for (double& v : noisy.quit) v = jitter(v);
    return noisy;
}

} // namespace ssplan
