#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssplan/evaluation.hpp"
#include "ssplan/io.hpp"
#include "ssplan/models.hpp"
#include "ssplan/planner.hpp"
#include "ssplan/run_config.hpp"
#include "ssplan/simulator.hpp"

namespace ssplan {

inline ArtifactMeta make_meta(const RunConfig& cfg) {
    return ArtifactMeta{config_hash(cfg), cfg.seed};
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

// Root seed fan-out: the simulator and trainers all derive their streams
// from [run] seed through tagged derive_seed calls.
inline RunConfig finalize_config(RunConfig cfg) {
    cfg.sim.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

inline void write_resolved_config(const RunConfig& cfg) {
    atomic_write_file(out_path(cfg, "config.resolved.ini"), resolved_config_text(cfg));
}

/// simulate: ground truth + users + one session log (organic or planted).
inline int cmd_simulate(const RunConfig& raw_cfg) {
    const RunConfig cfg = finalize_config(raw_cfg);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);
    if (cfg.sim_mode == "planted") {
        const auto sessions = generate_planted_sessions(cfg.sim);
        write_sessions_jsonl(out_path(cfg, "sessions.jsonl"), sessions);
    } else {
        const GroundTruth gt = generate_ground_truth(cfg.sim);
        const auto users = generate_users(gt, cfg.sim);
        const auto sessions = generate_sessions(gt, cfg.sim);
        save_json_file(out_path(cfg, "ground_truth.json"), ground_truth_to_json(gt, meta));
        save_json_file(out_path(cfg, "users.json"), users_to_json(users, meta));
        write_sessions_jsonl(out_path(cfg, "sessions.jsonl"), sessions);
    }
    save_json_file(out_path(cfg, "sessions.meta.json"), meta_to_json(meta));
    return 0;
}

/// train: click model plus MIL and no-MIL quit models from a session log.
/// Models are written uncalibrated; a training report carries the holdout
/// bag-level AUCs and MIL convergence facts.
inline int cmd_train(const RunConfig& raw_cfg, const std::string& log_path) {
    const RunConfig cfg = finalize_config(raw_cfg);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);

    const auto sessions = read_sessions_jsonl(log_path);
    const auto [train_part, holdout] = split_sessions(sessions, cfg.holdout_fraction);
    if (train_part.empty()) throw data_error("training split is empty");

    const LinearModel click = train_click_model(train_part, cfg.train);
    const MilTrainResult mil = train_quit_model_mil(train_part, cfg.quit_options());
    const LinearModel no_mil = train_quit_model_no_mil(train_part, cfg.quit_options());

    std::vector<std::string> schema;
    const std::size_t dim = train_part.front().bags.front().instances.front().features.size();
    for (std::size_t j = 0; j < dim; ++j) schema.push_back("f" + std::to_string(j));
    if (dim >= 2) {
        schema[dim - 2] = "step";
        schema[dim - 1] = "category_exposure";
    }

    save_json_file(out_path(cfg, "click_model.json"),
                   model_file_to_json(ModelFile{"click", click, std::nullopt, schema}, meta));
    save_json_file(out_path(cfg, "quit_model_mil.json"),
                   model_file_to_json(ModelFile{"quit", mil.model, std::nullopt, schema}, meta));
    save_json_file(out_path(cfg, "quit_model_no_mil.json"),
                   model_file_to_json(ModelFile{"quit", no_mil, std::nullopt, schema}, meta));

    const auto& eval_sessions = holdout.empty() ? train_part : holdout;
    const auto eval_bags = collect_bags(eval_sessions);
    std::vector<double> click_scores;
    std::vector<int> click_labels;
    for (const SessionLog& s : eval_sessions)
        for (std::size_t b = 0; b < s.bags.size(); ++b)
            for (std::size_t i = 0; i < s.bags[b].instances.size(); ++i) {
                click_scores.push_back(click.score(s.bags[b].instances[i].features));
                click_labels.push_back(s.clicks[b][i]);
            }

    json report{{"train_sessions", train_part.size()},
                {"holdout_sessions", holdout.size()},
                {"evaluated_on", holdout.empty() ? "train" : "holdout"},
                {"mil_outer_iterations", mil.outer_iterations},
                {"mil_converged", mil.converged},
                {"bag_auc_mil", bag_level_auc(mil.model, eval_bags)},
                {"bag_auc_no_mil", bag_level_auc(no_mil, eval_bags)},
                {"click_instance_auc", rank_auc(click_scores, click_labels)},
                {"meta", meta_to_json(meta)}};
    save_json_file(out_path(cfg, "training_report.json"), report);
    return 0;
}

/// calibrate: fit Platt parameters for one model file on the holdout tail
/// of a log and report binned RMSE before/after. Click models calibrate
/// against click labels; quit models against witness pseudo-labels, the
/// only instance-level supervision bag labels can provide.
inline int cmd_calibrate(const RunConfig& raw_cfg, const std::string& model_path,
                         const std::string& log_path) {
    const RunConfig cfg = finalize_config(raw_cfg);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);

    ModelFile mf = model_file_from_json(load_json_file(model_path));
    const auto sessions = read_sessions_jsonl(log_path);
    const auto [train_part, holdout] = split_sessions(sessions, cfg.holdout_fraction);
    const auto& cal_sessions = holdout.empty() ? train_part : holdout;

    std::vector<double> scores;
    std::vector<int> labels;
    if (mf.kind == "click") {
        for (const SessionLog& s : cal_sessions)
            for (std::size_t b = 0; b < s.bags.size(); ++b)
                for (std::size_t i = 0; i < s.bags[b].instances.size(); ++i) {
                    scores.push_back(mf.model.score(s.bags[b].instances[i].features));
                    labels.push_back(s.clicks[b][i]);
                }
    } else if (mf.kind == "quit") {
        witness_calibration_pairs(mf.model, cal_sessions, scores, labels);
    } else {
        throw schema_error("model kind must be click or quit, got " + mf.kind);
    }

    mf.calibration = fit_platt(scores, labels);
    std::vector<double> before, after;
    before.reserve(scores.size());
    after.reserve(scores.size());
    for (double f : scores) {
        before.push_back(std::clamp(1.0 / (1.0 + std::exp(-f)), 1e-6, 1.0 - 1e-6));
        after.push_back(apply_platt(*mf.calibration, f));
    }
    const int bins = 10;
    const double rmse_before = binned_calibration_rmse(before, labels, bins);
    const double rmse_after = binned_calibration_rmse(after, labels, bins);

    const std::filesystem::path in_path(model_path);
    const std::string stem = (in_path.parent_path() / in_path.stem()).string();
    save_json_file(stem + ".calibrated.json", model_file_to_json(mf, meta));
    json report{{"model", in_path.filename().string()},
                {"kind", mf.kind},
                {"calibration", {{"A", mf.calibration->A}, {"B", mf.calibration->B}}},
                {"num_bins", bins},
                {"points", scores.size()},
                {"rmse_before", rmse_before},
                {"rmse_after", rmse_after},
                {"meta", meta_to_json(meta)}};
    save_json_file(stem + ".calibration_report.json", report);
    return 0;
}

inline TrainedScorers load_scorers(const std::string& click_path, const std::string& quit_path) {
    const ModelFile click = model_file_from_json(load_json_file(click_path));
    const ModelFile quit = model_file_from_json(load_json_file(quit_path));
    if (click.kind != "click") throw schema_error(click_path + ": expected a click model");
    if (quit.kind != "quit") throw schema_error(quit_path + ": expected a quit model");
    if (!click.calibration) throw schema_error(click_path + ": model is not calibrated");
    if (!quit.calibration) throw schema_error(quit_path + ": model is not calibrated");
    if (click.feature_schema != quit.feature_schema)
        throw schema_error("click and quit models disagree on the feature schema");
    TrainedScorers scorers;
    scorers.click_model = click.model;
    scorers.click_cal = *click.calibration;
    scorers.continue_model = quit.model;
    scorers.continue_cal = *quit.calibration;
    scorers.feature_schema = click.feature_schema;
    return scorers;
}

struct SourceFiles {
    std::string gt_path;
    std::string users_path;
    std::string click_model_path; // empty unless eval_source == trained
    std::string quit_model_path;
};

namespace detail {

struct LoadedSource {
    GroundTruth gt;
    std::vector<UserContext> users;
    std::optional<TrainedScorers> scorers;

    MdpProducer producer() const {
        return MdpProducer{&gt, scorers ? &*scorers : nullptr};
    }
};

inline LoadedSource load_source(const RunConfig& cfg, const SourceFiles& files) {
    LoadedSource src;
    src.gt = ground_truth_from_json(load_json_file(files.gt_path));
    src.users = users_from_json(load_json_file(files.users_path));
    if (src.users.empty()) throw data_error("users file holds no users");
    if (cfg.eval_source == "trained")
        src.scorers = load_scorers(files.click_model_path, files.quit_model_path);
    return src;
}

} // namespace detail

/// plan on a serialized MdpModel file with the configured strategy.
inline int cmd_plan_mdp(const RunConfig& raw_cfg, const std::string& mdp_path) {
    const RunConfig cfg = finalize_config(raw_cfg);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);
    const MdpModel model = mdp_from_json(load_json_file(mdp_path));
    const std::string strategy =
        cfg.planner.dedup ? cfg.strategy + "_dedup" : cfg.strategy;
    const Plan plan = detail::run_strategy(model, strategy, cfg.planner.beam_size);
    save_json_file(out_path(cfg, "plan.json"), plan_to_json(plan, model.item_ids, meta));
    return 0;
}

/// plan per user from a probability source; one plan JSON object per line.
inline int cmd_plan_users(const RunConfig& raw_cfg, const SourceFiles& files) {
    const RunConfig cfg = finalize_config(raw_cfg);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);
    const auto src = detail::load_source(cfg, files);
    const MdpProducer produce = src.producer();
    const std::string strategy =
        cfg.planner.dedup ? cfg.strategy + "_dedup" : cfg.strategy;

    std::ostringstream lines;
    for (const UserContext& user : src.users) {
        const MdpModel model = produce(user, cfg.sim.horizon);
        const Plan plan = detail::run_strategy(model, strategy, cfg.planner.beam_size);
        json j = plan_to_json(plan, model.item_ids);
        j["user_id"] = user.user_id;
        lines << j.dump() << "\n";
    }
    atomic_write_file(out_path(cfg, "plans.jsonl"), lines.str());
    save_json_file(out_path(cfg, "plans.meta.json"), meta_to_json(meta));
    return 0;
}

/// evaluate: strategy comparison table over the configured horizons.
inline int cmd_evaluate(const RunConfig& raw_cfg, const SourceFiles& files) {
    const RunConfig cfg = finalize_config(raw_cfg);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);
    const auto src = detail::load_source(cfg, files);

    EvalOptions options;
    options.horizons = cfg.horizons;
    options.beam_size = cfg.planner.beam_size;
    options.dedup = cfg.planner.dedup;
    options.noise_max = cfg.noise_max;
    options.seed = cfg.seed;
    const EvalReport report = run_offline_comparison(src.producer(), src.users, options);
    save_json_file(out_path(cfg, "eval_report.json"), eval_report_to_json(report, meta));
    atomic_write_file(out_path(cfg, "eval_report.txt"), eval_report_to_table(report));
    return 0;
}

/// noise-sweep: plan under perturbed models, score under clean ones. Uses
/// the hidden model as probability source regardless of eval.source, since
/// the study needs a clean reference value.
inline int cmd_noise_sweep(const RunConfig& raw_cfg, const SourceFiles& files) {
    RunConfig plain = raw_cfg;
    plain.eval_source = "ground_truth";
    const RunConfig cfg = finalize_config(plain);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);
    const auto src = detail::load_source(cfg, files);

    EvalOptions options;
    options.beam_size = cfg.planner.beam_size;
    options.noise_max = cfg.noise_max;
    options.seed = cfg.seed;
    const auto points = run_noise_sweep(src.producer(), src.users, cfg.sim.horizon, options);

    EvalReport report;
    report.score_source = "ground_truth";
    report.seed = cfg.seed;
    report.noise = points;
    save_json_file(out_path(cfg, "noise_curves.json"), eval_report_to_json(report, meta));
    atomic_write_file(out_path(cfg, "noise_curves.csv"), noise_points_to_csv(points, meta));
    return 0;
}

/// stats: quit-probability discrimination and reward/continue relatedness
/// of the produced models.
inline int cmd_stats(const RunConfig& raw_cfg, const SourceFiles& files) {
    const RunConfig cfg = finalize_config(raw_cfg);
    const ArtifactMeta meta = make_meta(cfg);
    write_resolved_config(cfg);
    const auto src = detail::load_source(cfg, files);
    const auto [disc, rel] = dataset_stats(src.producer(), src.users, cfg.top_l);

    EvalReport report;
    report.score_source = src.producer().source_name();
    report.seed = cfg.seed;
    report.discrimination = disc;
    report.relatedness = rel;
    report.has_stats = true;
    save_json_file(out_path(cfg, "stats_report.json"), eval_report_to_json(report, meta));

    std::ostringstream text;
    char buf[96];
    std::snprintf(buf, sizeof buf, "quit: std=%.4f mean=%.4f std/mean=%.4f (pooled %.4f)\n",
                  disc.mean_std, disc.mean_of_means, disc.mean_ratio, disc.ratio_of_means);
    text << buf;
    std::snprintf(buf, sizeof buf, "top-%d overlap: jaccard=%.4f ndcg=%.4f\n", cfg.top_l,
                  rel.jaccard, rel.ndcg);
    text << buf;
    atomic_write_file(out_path(cfg, "stats_report.txt"), text.str());
    return 0;
}

} // namespace ssplan
