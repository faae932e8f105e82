#pragma once

#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "ssplan/errors.hpp"
#include "ssplan/linear_model.hpp"
#include "ssplan/models.hpp"
#include "ssplan/planner.hpp"
#include "ssplan/simulator.hpp"

namespace ssplan {

/// Resolved run configuration: one flat key-value file with sections, plus
/// dotted-key overrides from the command line. Unknown keys are rejected.
/// All randomness derives from the single [run] seed.
struct RunConfig {
    std::uint64_t seed = 7;
    std::string out_dir = "out";
    std::string sim_mode = "organic"; // or "planted"

    SimConfig sim;
    TrainOptions train;
    int max_outer_iters = 50;
    double holdout_fraction = 0.2;

    PlannerConfig planner;
    std::string strategy = "ssp"; // for cmd_plan

    std::vector<int> horizons{20, 50};
    std::string eval_source = "ground_truth"; // or "trained"
    int noise_max = 10;
    int top_l = 20;

    void validate() const {
        sim.validate();
        if (sim_mode != "organic" && sim_mode != "planted")
            throw config_error("sim.mode must be organic or planted");
        if (eval_source != "ground_truth" && eval_source != "trained")
            throw config_error("eval.source must be ground_truth or trained");
        if (strategy != "ssp" && strategy != "greedy" && strategy != "beam")
            throw config_error("planner.strategy must be ssp, greedy or beam");
        if (planner.beam_size < 1) throw config_error("planner.beam_size must be >= 1");
        if (horizons.empty()) throw config_error("eval.horizons must not be empty");
        for (int h : horizons)
            if (h < 1) throw config_error("horizons must be positive");
        if (noise_max < 0 || noise_max > 10) throw config_error("eval.noise_max must be in 0..10");
        if (top_l < 1) throw config_error("eval.top_l must be >= 1");
        if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
            throw config_error("train.holdout_fraction must be in [0, 1)");
        if (max_outer_iters < 1) throw config_error("train.max_outer_iters must be >= 1");
        if (train.epochs < 1) throw config_error("train.epochs must be >= 1");
        if (train.learning_rate <= 0.0) throw config_error("train.learning_rate must be > 0");
        if (train.l2 < 0.0) throw config_error("train.l2 must be >= 0");
    }

    QuitTrainOptions quit_options() const {
        QuitTrainOptions opts;
        opts.inner = train;
        opts.max_outer_iters = max_outer_iters;
        return opts;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw config_error("");
        return v;
    } catch (const std::exception&) {
        throw config_error("config key " + key + ": expected integer, got '" + value + "'");
    }
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw config_error("");
        return v;
    } catch (const std::exception&) {
        throw config_error("config key " + key + ": expected number, got '" + value + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error("config key " + key + ": expected bool, got '" + value + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::istringstream in(value);
    std::string part;
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (!part.empty()) out.push_back(static_cast<int>(parse_int(key, part)));
    }
    if (out.empty()) throw config_error("config key " + key + ": empty list");
    return out;
}

} // namespace detail

/// Applies one dotted key, e.g. "sim.rho" = "0.3". Throws config_error on
/// unknown keys or malformed values.
inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "run.out_dir") cfg.out_dir = value;
    else if (key == "sim.mode") cfg.sim_mode = value;
    else if (key == "sim.num_users") cfg.sim.num_users = static_cast<int>(parse_int(key, value));
    else if (key == "sim.catalog_size") cfg.sim.catalog_size = static_cast<int>(parse_int(key, value));
    else if (key == "sim.feature_dim") cfg.sim.feature_dim = static_cast<int>(parse_int(key, value));
    else if (key == "sim.bag_size") cfg.sim.bag_size = static_cast<int>(parse_int(key, value));
    else if (key == "sim.max_pages") cfg.sim.max_pages = static_cast<int>(parse_int(key, value));
    else if (key == "sim.horizon") cfg.sim.horizon = static_cast<int>(parse_int(key, value));
    else if (key == "sim.rho") cfg.sim.rho = parse_double(key, value);
    else if (key == "sim.noise_scale") cfg.sim.noise_scale = parse_double(key, value);
    else if (key == "sim.num_candidates") cfg.sim.num_candidates = static_cast<int>(parse_int(key, value));
    else if (key == "sim.num_categories") cfg.sim.num_categories = static_cast<int>(parse_int(key, value));
    else if (key == "sim.planted_sessions") cfg.sim.planted_sessions = static_cast<int>(parse_int(key, value));
    else if (key == "sim.planted_separation") cfg.sim.planted_separation = parse_double(key, value);
    else if (key == "train.learning_rate") cfg.train.learning_rate = parse_double(key, value);
    else if (key == "train.epochs") cfg.train.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "train.l2") cfg.train.l2 = parse_double(key, value);
    else if (key == "train.max_outer_iters") cfg.max_outer_iters = static_cast<int>(parse_int(key, value));
    else if (key == "train.holdout_fraction") cfg.holdout_fraction = parse_double(key, value);
    else if (key == "planner.beam_size") cfg.planner.beam_size = static_cast<int>(parse_int(key, value));
    else if (key == "planner.dedup") cfg.planner.dedup = parse_bool(key, value);
    else if (key == "planner.strategy") cfg.strategy = value;
    else if (key == "eval.horizons") cfg.horizons = parse_int_list(key, value);
    else if (key == "eval.source") cfg.eval_source = value;
    else if (key == "eval.noise_max") cfg.noise_max = static_cast<int>(parse_int(key, value));
    else if (key == "eval.top_l") cfg.top_l = static_cast<int>(parse_int(key, value));
    else throw config_error("unknown config key: " + key);
}

/// Parses the INI-style config text: [section] headers, key = value lines,
/// comments starting with # or ;.
inline RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config line " + std::to_string(line_no) + ": bad section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty())
            throw config_error("config line " + std::to_string(line_no) + ": key outside section");
        apply_config_key(cfg, section + "." + key, value);
    }
    return cfg;
}

namespace detail {

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Canonical serialization of the experiment parameters. out_dir is
/// deliberately excluded: it is environment, not experiment, and must not
/// change the config hash.
inline std::string resolved_config_text(const RunConfig& cfg) {
    using detail::format_double;
    std::ostringstream out;
    out << "[run]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "\n[sim]\n";
    out << "mode = " << cfg.sim_mode << "\n";
    out << "num_users = " << cfg.sim.num_users << "\n";
    out << "catalog_size = " << cfg.sim.catalog_size << "\n";
    out << "feature_dim = " << cfg.sim.feature_dim << "\n";
    out << "bag_size = " << cfg.sim.bag_size << "\n";
    out << "max_pages = " << cfg.sim.max_pages << "\n";
    out << "horizon = " << cfg.sim.horizon << "\n";
    out << "rho = " << format_double(cfg.sim.rho) << "\n";
    out << "noise_scale = " << format_double(cfg.sim.noise_scale) << "\n";
    out << "num_candidates = " << cfg.sim.num_candidates << "\n";
    out << "num_categories = " << cfg.sim.num_categories << "\n";
    out << "planted_sessions = " << cfg.sim.planted_sessions << "\n";
    out << "planted_separation = " << format_double(cfg.sim.planted_separation) << "\n";
    out << "\n[train]\n";
    out << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
    out << "epochs = " << cfg.train.epochs << "\n";
    out << "l2 = " << format_double(cfg.train.l2) << "\n";
    out << "max_outer_iters = " << cfg.max_outer_iters << "\n";
    out << "holdout_fraction = " << format_double(cfg.holdout_fraction) << "\n";
    out << "\n[planner]\n";
    out << "beam_size = " << cfg.planner.beam_size << "\n";
    out << "dedup = " << (cfg.planner.dedup ? "true" : "false") << "\n";
    out << "strategy = " << cfg.strategy << "\n";
    out << "\n[eval]\n";
    out << "horizons = ";
    for (std::size_t i = 0; i < cfg.horizons.size(); ++i)
        out << (i ? "," : "") << cfg.horizons[i];
    out << "\n";
    out << "source = " << cfg.eval_source << "\n";
    out << "noise_max = " << cfg.noise_max << "\n";
    out << "top_l = " << cfg.top_l << "\n";
    return out.str();
}

inline std::string config_hash(const RunConfig& cfg) {
    const std::string text = resolved_config_text(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace ssplan
