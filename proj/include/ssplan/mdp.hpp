#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ssplan/errors.hpp"

namespace ssplan {

/// A personalized browse-session MDP. States are the step indices 1..T plus
/// an absorbing "user left" state; showing item a at step t yields an
/// immediate engagement probability reward(t, a) and moves the user to the
/// absorbing state with probability quit(t, a), otherwise to step t+1.
///
/// Steps are 0-based in code. Row T-1 of `quit` is stored for uniformity but
/// never enters a survival product: the session always terminates after the
/// last step.
struct MdpModel {
    int horizon = 0;   // T, number of steps
    int num_items = 0; // K, size of the action space
    std::vector<double> reward; // T x K, row-major
    std::vector<double> quit;   // T x K, row-major
    std::vector<std::string> item_ids; // column -> catalog item, size K

    double reward_at(int t, int a) const { return reward[static_cast<std::size_t>(t) * num_items + a]; }
    double quit_at(int t, int a) const { return quit[static_cast<std::size_t>(t) * num_items + a]; }
    double& reward_at(int t, int a) { return reward[static_cast<std::size_t>(t) * num_items + a]; }
    double& quit_at(int t, int a) { return quit[static_cast<std::size_t>(t) * num_items + a]; }

    static MdpModel zeros(int horizon, int num_items) {
        MdpModel m;
        m.horizon = horizon;
        m.num_items = num_items;
        const std::size_t n = static_cast<std::size_t>(horizon) * static_cast<std::size_t>(num_items);
        m.reward.assign(n, 0.0);
        m.quit.assign(n, 0.0);
        m.item_ids.reserve(num_items);
        for (int a = 0; a < num_items; ++a) m.item_ids.push_back("item_" + std::to_string(a));
        return m;
    }

    // Throws model_error on any invariant violation. Intended for
    // construction and deserialization boundaries, not per-call hot paths.
    void validate() const {
        if (horizon < 1 || num_items < 1)
            throw model_error("MdpModel requires horizon >= 1 and num_items >= 1");
        const std::size_t n = static_cast<std::size_t>(horizon) * static_cast<std::size_t>(num_items);
        if (reward.size() != n || quit.size() != n)
            throw model_error("MdpModel matrix sizes do not match horizon x num_items");
        if (item_ids.size() != static_cast<std::size_t>(num_items))
            throw model_error("MdpModel item_ids size does not match num_items");
        for (double v : reward)
            if (!(v >= 0.0 && v <= 1.0)) throw model_error("reward entry outside [0,1]");
        for (double v : quit)
            if (!(v >= 0.0 && v <= 1.0)) throw model_error("quit entry outside [0,1]");
    }
};

/// An ordered item path together with its expected engagement under the
/// model that produced it.
struct Plan {
    std::vector<int> path;     // item column indices, length <= T
    double expected_ipv = 0.0; // expected cumulative clicks
    double expected_bl = 0.0;  // expected browse length
    double expected_ctr = 0.0; // expected_ipv / expected_bl
    std::string strategy;      // "ssp" | "greedy" | "beam" | ... (for reports)
    int beam_size = 0;         // 0 when not a beam strategy
};

/// Optimal state values and the per-step argmax actions from backward
/// induction. values[t] is V*(s_{t+1}) for t in [0, T); values[T] is the
/// absorbing-state value, always 0.
struct StateValueTable {
    std::vector<double> values;
    std::vector<int> argmax_actions;
};

namespace detail {
inline void check_path(const MdpModel& model, const std::vector<int>& path) {
    if (path.empty()) throw path_error("path is empty");
    if (static_cast<int>(path.size()) > model.horizon)
        throw path_error("path longer than model horizon");
    for (int a : path)
        if (a < 0 || a >= model.num_items) throw path_error("path index out of range");
}
} // namespace detail

/// Expected cumulative engagement of showing `path` in order:
///   sum_t reward(t, a_t) * prod_{i<t} (1 - quit(i, a_i)).
inline double expected_ipv(const MdpModel& model, const std::vector<int>& path) {
    detail::check_path(model, path);
    double total = 0.0;
    double survival = 1.0; // P(user still browsing at step t)
    for (std::size_t t = 0; t < path.size(); ++t) {
        total += survival * model.reward_at(static_cast<int>(t), path[t]);
        survival *= 1.0 - model.quit_at(static_cast<int>(t), path[t]);
    }
    return total;
}

/// Expected number of items viewed: sum_t prod_{i<t} (1 - quit(i, a_i)).
/// Always in [1, len(path)] since the first item is viewed unconditionally.
inline double expected_bl(const MdpModel& model, const std::vector<int>& path) {
    detail::check_path(model, path);
    double total = 0.0;
    double survival = 1.0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        total += survival;
        survival *= 1.0 - model.quit_at(static_cast<int>(t), path[t]);
    }
    return total;
}

inline double expected_ctr(double ipv, double bl) {
    if (!(bl > 0.0)) throw data_error("expected_ctr requires bl > 0");
    return ipv / bl;
}

/// P(browse length >= t) for t = 1..len(path). First entry is always 1 and
/// the sequence is non-increasing; these are exactly the weights applied to
/// the per-step rewards in expected_ipv.
inline std::vector<double> survival_distribution(const MdpModel& model, const std::vector<int>& path) {
    detail::check_path(model, path);
    std::vector<double> out;
    out.reserve(path.size());
    double survival = 1.0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        out.push_back(survival);
        survival *= 1.0 - model.quit_at(static_cast<int>(t), path[t]);
    }
    return out;
}

} // namespace ssplan
