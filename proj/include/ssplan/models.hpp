#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ssplan/calibration.hpp"
#include "ssplan/dataset.hpp"
#include "ssplan/errors.hpp"
#include "ssplan/linear_model.hpp"

namespace ssplan {

/// Linear-kernel normalized-set-kernel representation of a bag: the sum of
/// its instance vectors scaled to unit Euclidean norm. A zero-sum bag maps
/// to the zero vector.
inline std::vector<double> nsk_bag_representation(const Bag& bag) {
    if (bag.instances.empty()) throw data_error("NSK of an empty bag");
    std::vector<double> rep(bag.instances.front().features.size(), 0.0);
    for (const Instance& inst : bag.instances) {
        if (inst.features.size() != rep.size())
            throw data_error("inconsistent feature dimension inside bag");
        for (std::size_t j = 0; j < rep.size(); ++j) rep[j] += inst.features[j];
    }
    double norm = 0.0;
    for (double v : rep) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& v : rep) v /= norm;
    return rep;
}

/// Highest instance score inside the bag; matches the MIL assumption that a
/// bag is as positive as its best instance.
inline double bag_score(const LinearModel& model, const Bag& bag) {
    if (bag.instances.empty()) throw data_error("bag_score of an empty bag");
    double best = model.score(bag.instances.front().features);
    for (std::size_t i = 1; i < bag.instances.size(); ++i)
        best = std::max(best, model.score(bag.instances[i].features));
    return best;
}

/// Rank AUC over (bag_score, bag label) pairs.
inline double bag_level_auc(const LinearModel& model, const std::vector<Bag>& bags) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(bags.size());
    labels.reserve(bags.size());
    for (const Bag& bag : bags) {
        scores.push_back(bag_score(model, bag));
        labels.push_back(bag.positive ? 1 : 0);
    }
    return rank_auc(scores, labels);
}

inline std::vector<Bag> collect_bags(const std::vector<SessionLog>& sessions) {
    std::vector<Bag> bags;
    for (const SessionLog& s : sessions)
        for (const Bag& b : s.bags) bags.push_back(b);
    return bags;
}

/// Trains the click model on every logged instance with its click label.
/// Single-class data is an error only when no regularizer pins the optimum;
/// with l2 > 0 the fit collapses to the prior, which is well-defined.
inline LinearModel train_click_model(const std::vector<SessionLog>& sessions,
                                     const TrainOptions& opts) {
    validate_sessions(sessions);
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (const SessionLog& s : sessions) {
        if (s.clicks.size() != s.bags.size())
            throw data_error("session lacks click labels");
        for (std::size_t b = 0; b < s.bags.size(); ++b)
            for (std::size_t i = 0; i < s.bags[b].instances.size(); ++i) {
                features.push_back(s.bags[b].instances[i].features);
                labels.push_back(s.clicks[b][i]);
            }
    }
    bool has_pos = false, has_neg = false;
    for (int y : labels) (y ? has_pos : has_neg) = true;
    if ((!has_pos || !has_neg) && opts.l2 <= 0.0)
        throw degenerate_data_error("single-class click data without regularization");
    return train_logistic(features, labels, opts);
}

struct QuitTrainOptions {
    TrainOptions inner;
    int max_outer_iters = 50;
};

struct MilTrainResult {
    LinearModel model;
    int outer_iterations = 0;
    bool converged = false;
};

namespace detail {

inline void check_bag_labels(const std::vector<SessionLog>& sessions) {
    validate_sessions(sessions);
    bool has_pos = false, has_neg = false;
    for (const SessionLog& s : sessions)
        for (const Bag& b : s.bags) (b.positive ? has_pos : has_neg) = true;
    if (!has_neg) throw degenerate_data_error("quit training needs at least one negative bag");
    if (!has_pos) throw degenerate_data_error("quit training needs at least one positive bag");
}

// Witness per positive bag under the current model: the instance with the
// maximum score, earliest position on ties. Indexed in session-major order.
inline std::vector<int> select_witnesses(const LinearModel& model,
                                         const std::vector<SessionLog>& sessions) {
    std::vector<int> witnesses;
    for (const SessionLog& s : sessions)
        for (const Bag& bag : s.bags) {
            if (!bag.positive) continue;
            int best = 0;
            double best_score = model.score(bag.instances.front().features);
            for (std::size_t i = 1; i < bag.instances.size(); ++i) {
                const double score = model.score(bag.instances[i].features);
                if (score > best_score) {
                    best_score = score;
                    best = static_cast<int>(i);
                }
            }
            witnesses.push_back(best);
        }
    return witnesses;
}

// Training set for one MI-SVM iteration: each positive bag contributes its
// witness as a positive; negative bags contribute every instance as a
// negative. Built in session order so that with singleton bags it is
// identical to the naive bag-label assignment.
inline void build_witness_set(const std::vector<SessionLog>& sessions,
                              const std::vector<int>& witnesses,
                              std::vector<std::vector<double>>& features,
                              std::vector<int>& labels) {
    features.clear();
    labels.clear();
    std::size_t w = 0;
    for (const SessionLog& s : sessions)
        for (const Bag& bag : s.bags) {
            if (bag.positive) {
                features.push_back(bag.instances[witnesses[w++]].features);
                labels.push_back(1);
            } else {
                for (const Instance& inst : bag.instances) {
                    features.push_back(inst.features);
                    labels.push_back(0);
                }
            }
        }
}

} // namespace detail

/// MI-SVM style quit-model training. An initial bag-level classifier is fit
/// on NSK representations; then, per outer iteration, each positive bag is
/// represented by its highest-scoring instance (the witness) and an
/// instance-level hinge classifier is retrained on witnesses plus all
/// negative-bag instances, until the witness selection repeats.
inline MilTrainResult train_quit_model_mil(const std::vector<SessionLog>& sessions,
                                           const QuitTrainOptions& opts) {
    detail::check_bag_labels(sessions);

    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (const SessionLog& s : sessions)
        for (const Bag& bag : s.bags) {
            features.push_back(nsk_bag_representation(bag));
            labels.push_back(bag.positive ? 1 : 0);
        }
    LinearModel model = train_hinge(features, labels, opts.inner);

    MilTrainResult result;
    std::vector<int> previous;
    for (int iter = 1; iter <= opts.max_outer_iters; ++iter) {
        result.outer_iterations = iter;
        const std::vector<int> witnesses = detail::select_witnesses(model, sessions);
        if (iter > 1 && witnesses == previous) {
            result.converged = true;
            break;
        }
        detail::build_witness_set(sessions, witnesses, features, labels);
        model = train_hinge(features, labels, opts.inner);
        previous = witnesses;
    }
    result.model = std::move(model);
    return result;
}

/// Baseline that assigns every instance its bag's label and trains one
/// hinge classifier; the comparison point for the MIL method.
inline LinearModel train_quit_model_no_mil(const std::vector<SessionLog>& sessions,
                                           const QuitTrainOptions& opts) {
    detail::check_bag_labels(sessions);
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (const SessionLog& s : sessions)
        for (const Bag& bag : s.bags)
            for (const Instance& inst : bag.instances) {
                features.push_back(inst.features);
                labels.push_back(bag.positive ? 1 : 0);
            }
    return train_hinge(features, labels, opts.inner);
}

/// Instance-level (score, label) pairs for quit-model calibration using only
/// bag-level supervision: witnesses of positive bags count as continue=1,
/// all instances of negative bags as 0.
inline void witness_calibration_pairs(const LinearModel& model,
                                      const std::vector<SessionLog>& sessions,
                                      std::vector<double>& scores, std::vector<int>& labels) {
    scores.clear();
    labels.clear();
    const std::vector<int> witnesses = detail::select_witnesses(model, sessions);
    std::size_t w = 0;
    for (const SessionLog& s : sessions)
        for (const Bag& bag : s.bags) {
            if (bag.positive) {
                scores.push_back(model.score(bag.instances[witnesses[w++]].features));
                labels.push_back(1);
            } else {
                for (const Instance& inst : bag.instances) {
                    scores.push_back(model.score(inst.features));
                    labels.push_back(0);
                }
            }
        }
}

} // namespace ssplan
