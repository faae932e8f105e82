#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssplan/errors.hpp"

namespace ssplan {

// One item shown inside a page. Features are the full model input vector
// (item attributes plus interactive features such as step index and
// category-exposure count).
struct Instance {
    std::vector<double> features;
    std::string item_id;
    std::string category_id;
};

// A page of items shown between two user requests. `positive` means the
// user kept browsing after seeing this page.
struct Bag {
    std::vector<Instance> instances;
    bool positive = false;
};

// A bag-labeled browse session. All bags are positive except the last; a
// truncated session (user never observed quitting) has no negative bag.
// `clicks` parallels bags/instances with per-instance click labels.
// `true_continue` is a simulator-only diagnostic marking the instances that
// actually kept the user (the planted witnesses); trainers must ignore it.
struct SessionLog {
    std::string user_id;
    std::vector<Bag> bags;
    std::vector<std::vector<std::uint8_t>> clicks;
    std::vector<std::vector<std::uint8_t>> true_continue;
};

// Structural checks: non-empty bags, the negative bag (if any) unique and
// last, click labels aligned when present.
inline void validate_session(const SessionLog& session) {
    if (session.bags.empty()) throw data_error("session has no bags");
    for (std::size_t b = 0; b < session.bags.size(); ++b) {
        const Bag& bag = session.bags[b];
        if (bag.instances.empty()) throw data_error("bag has no instances");
        if (!bag.positive && b + 1 != session.bags.size())
            throw data_error("negative bag must be the last bag of its session");
    }
    if (!session.clicks.empty()) {
        if (session.clicks.size() != session.bags.size())
            throw data_error("click labels misaligned with bags");
        for (std::size_t b = 0; b < session.bags.size(); ++b)
            if (session.clicks[b].size() != session.bags[b].instances.size())
                throw data_error("click labels misaligned with instances");
    }
}

inline void validate_sessions(const std::vector<SessionLog>& sessions) {
    if (sessions.empty()) throw data_error("empty session list");
    for (const SessionLog& s : sessions) validate_session(s);
}

// Deterministic leading/trailing split by session position. The trailing
// `holdout_fraction` of sessions is reserved for calibration.
inline std::pair<std::vector<SessionLog>, std::vector<SessionLog>>
split_sessions(const std::vector<SessionLog>& sessions, double holdout_fraction) {
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
        throw config_error("holdout fraction must be in [0, 1)");
    const std::size_t holdout =
        static_cast<std::size_t>(holdout_fraction * static_cast<double>(sessions.size()));
    const std::size_t train = sessions.size() - holdout;
    return {std::vector<SessionLog>(sessions.begin(), sessions.begin() + train),
            std::vector<SessionLog>(sessions.begin() + train, sessions.end())};
}

} // namespace ssplan
