#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ssplan/errors.hpp"

namespace ssplan {

/// Platt scaling parameters: P(y=1 | f) = 1 / (1 + exp(A*f + B)). A fits
/// negative when higher scores mean higher positive probability.
struct Calibration {
    double A = 0.0;
    double B = 0.0;
};

/// Calibrated probability, clamped away from 0 and 1 so downstream products
/// and logs stay finite.
inline double apply_platt(const Calibration& cal, double f) {
    const double z = cal.A * f + cal.B;
    double p;
    if (z >= 0.0) {
        const double e = std::exp(-z);
        p = e / (1.0 + e);
    } else {
        p = 1.0 / (1.0 + std::exp(z));
    }
    return std::clamp(p, 1e-6, 1.0 - 1e-6);
}

/// Maximum-likelihood fit of the two Platt parameters by Newton's method
/// with backtracking, using Platt's smoothed targets (n+ + 1)/(n+ + 2) and
/// 1/(n- + 2). Deterministic.
inline Calibration fit_platt(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw data_error("scores/labels size mismatch");
    if (scores.size() < 10) throw data_error("fit_platt needs at least 10 points");
    for (double f : scores)
        if (!std::isfinite(f)) throw data_error("non-finite score");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y != 0;
    if (n_pos == 0 || n_pos == n) throw degenerate_data_error("fit_platt needs both labels");

    const double hi_target = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(n_pos) + 2.0);
    const double lo_target = 1.0 / (static_cast<double>(n - n_pos) + 2.0);
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = labels[i] ? hi_target : lo_target;

    double a = 0.0;
    double b = std::log((static_cast<double>(n - n_pos) + 1.0) / (static_cast<double>(n_pos) + 1.0));

    auto objective = [&](double av, double bv) {
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = av * scores[i] + bv;
            // -[t log p + (1-t) log(1-p)] with p = 1/(1+exp(z)), stable form
            obj += target[i] * z + std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
        }
        return obj;
    };

    double obj = objective(a, b);
    for (int iter = 0; iter < 100; ++iter) {
        double g_a = 0.0, g_b = 0.0, h_aa = 1e-12, h_ab = 0.0, h_bb = 1e-12;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * scores[i] + b;
            const double p = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
            const double d = target[i] - p;
            g_a += scores[i] * d;
            g_b += d;
            const double w = p * (1.0 - p);
            h_aa += scores[i] * scores[i] * w;
            h_ab += scores[i] * w;
            h_bb += w;
        }
        if (std::abs(g_a) < 1e-10 && std::abs(g_b) < 1e-10) break;
        const double det = h_aa * h_bb - h_ab * h_ab;
        double step_a = -(h_bb * g_a - h_ab * g_b) / det;
        double step_b = -(-h_ab * g_a + h_aa * g_b) / det;
        double stepsize = 1.0;
        while (stepsize > 1e-10) {
            const double trial = objective(a + stepsize * step_a, b + stepsize * step_b);
            if (trial < obj + 1e-12) {
                a += stepsize * step_a;
                b += stepsize * step_b;
                obj = trial;
                break;
            }
            stepsize *= 0.5;
        }
        if (stepsize <= 1e-10) break;
    }
    return Calibration{a, b};
}

/// RMSE between per-bin mean prediction and per-bin empirical positive rate
/// over `num_bins` equal-count score bins.
inline double binned_calibration_rmse(const std::vector<double>& predicted,
                                      const std::vector<int>& labels, int num_bins) {
    if (num_bins < 2) throw config_error("binned_calibration_rmse needs num_bins >= 2");
    if (predicted.size() != labels.size()) throw data_error("predicted/labels size mismatch");
    if (predicted.size() < static_cast<std::size_t>(num_bins))
        throw data_error("fewer points than bins");
    const std::size_t n = predicted.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        if (predicted[lhs] != predicted[rhs]) return predicted[lhs] < predicted[rhs];
        return lhs < rhs;
    });
    double sq_sum = 0.0;
    for (int bin = 0; bin < num_bins; ++bin) {
        const std::size_t lo = n * bin / num_bins;
        const std::size_t hi = n * (bin + 1) / num_bins;
        double mean_pred = 0.0, pos_rate = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            mean_pred += predicted[order[k]];
            pos_rate += labels[order[k]];
        }
        const double count = static_cast<double>(hi - lo);
        mean_pred /= count;
        pos_rate /= count;
        sq_sum += (mean_pred - pos_rate) * (mean_pred - pos_rate);
    }
    return std::sqrt(sq_sum / num_bins);
}

} // namespace ssplan
