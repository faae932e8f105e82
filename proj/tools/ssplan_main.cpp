// Command-line front end for the session planning toolkit:
//   simulate -> train -> calibrate -> plan / evaluate / noise-sweep / stats
// All commands read one config file ([run]/[sim]/[train]/[planner]/[eval]
// sections), accept dotted-key overrides via --set, and write their
// artifacts plus the resolved config under --out.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssplan/commands.hpp"

namespace {

using ssplan::RunConfig;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::int64_t seed = -1;
    std::string strategy;
    int beam_size = 0;
    bool dedup = false;
    int horizon = 0;
    int noise_max = -1;
};

RunConfig build_config(const GlobalArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty())
        cfg = ssplan::parse_run_config(ssplan::read_file(args.config_path));
    for (const std::string& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ssplan::config_error("--set expects key=value, got '" + kv + "'");
        ssplan::apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.strategy.empty()) cfg.strategy = args.strategy;
    if (args.beam_size > 0) cfg.planner.beam_size = args.beam_size;
    if (args.dedup) cfg.planner.dedup = true;
    if (args.horizon > 0) cfg.sim.horizon = args.horizon;
    if (args.noise_max >= 0) cfg.noise_max = args.noise_max;
    return cfg;
}

void default_source_paths(const RunConfig& cfg, ssplan::SourceFiles& files) {
    if (files.gt_path.empty()) files.gt_path = ssplan::out_path(cfg, "ground_truth.json");
    if (files.users_path.empty()) files.users_path = ssplan::out_path(cfg, "users.json");
    if (files.click_model_path.empty())
        files.click_model_path = ssplan::out_path(cfg, "click_model.calibrated.json");
    if (files.quit_model_path.empty())
        files.quit_model_path = ssplan::out_path(cfg, "quit_model_mil.calibrated.json");
}

int fail(const std::exception& e, const char* category, int code) {
    const nlohmann::ordered_json record{
        {"error", e.what()}, {"category", category}, {"exit_code", code}};
    std::fprintf(stderr, "%s\n", record.dump().c_str());
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ssplan::config_error& e) {
        return fail(e, "config", 2);
    } catch (const ssplan::io_error& e) {
        return fail(e, "io", 3);
    } catch (const ssplan::schema_error& e) {
        return fail(e, "schema", 4);
    } catch (const ssplan::degenerate_data_error& e) {
        return fail(e, "degenerate_data", 5);
    } catch (const ssplan::data_error& e) {
        return fail(e, "data", 5);
    } catch (const ssplan::model_error& e) {
        return fail(e, "model", 6);
    } catch (const ssplan::path_error& e) {
        return fail(e, "path", 6);
    } catch (const ssplan::infeasible_error& e) {
        return fail(e, "infeasible", 6);
    } catch (const ssplan::size_error& e) {
        return fail(e, "size", 6);
    } catch (const std::exception& e) {
        return fail(e, "internal", 1);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ssplan: plan browse sessions that maximize expected cumulative engagement"};
    app.require_subcommand(1);
    app.fallthrough(true);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "run config file (INI sections)");
    app.add_option("--seed", args.seed, "override run.seed");
    app.add_option("--out", args.out_dir, "override run.out_dir");
    app.add_option("--set", args.overrides, "override a dotted config key, e.g. sim.rho=0.5");
    app.add_option("--strategy", args.strategy, "planning strategy: ssp | greedy | beam");
    app.add_option("--beam-size", args.beam_size, "beam width for the beam strategy");
    app.add_flag("--dedup", args.dedup, "forbid repeated items in planned paths");
    app.add_option("--horizon", args.horizon, "planning horizon T");
    app.add_option("--noise-max", args.noise_max, "largest noise level m for sweeps");

    auto* simulate = app.add_subcommand("simulate", "generate ground truth, users and session logs");

    std::string log_path;
    auto* train = app.add_subcommand("train", "train click and quit models from a session log");
    train->add_option("--log", log_path, "session log (JSONL); default <out>/sessions.jsonl");

    std::string model_path;
    auto* calibrate = app.add_subcommand("calibrate", "fit Platt scaling for a trained model");
    calibrate->add_option("--model", model_path, "model file to calibrate")->required();
    calibrate->add_option("--log", log_path, "session log; default <out>/sessions.jsonl");

    ssplan::SourceFiles files;
    std::string mdp_path;
    auto* plan = app.add_subcommand("plan", "plan recommendation paths");
    plan->add_option("--mdp", mdp_path, "plan a single serialized MdpModel file");
    plan->add_option("--gt", files.gt_path, "ground truth file");
    plan->add_option("--users", files.users_path, "users file");
    plan->add_option("--click-model", files.click_model_path, "calibrated click model");
    plan->add_option("--quit-model", files.quit_model_path, "calibrated quit model");

    auto* evaluate = app.add_subcommand("evaluate", "offline strategy comparison");
    evaluate->add_option("--gt", files.gt_path, "ground truth file");
    evaluate->add_option("--users", files.users_path, "users file");
    evaluate->add_option("--click-model", files.click_model_path, "calibrated click model");
    evaluate->add_option("--quit-model", files.quit_model_path, "calibrated quit model");

    auto* sweep = app.add_subcommand("noise-sweep", "plan under noisy models, score under clean ones");
    sweep->add_option("--gt", files.gt_path, "ground truth file");
    sweep->add_option("--users", files.users_path, "users file");

    auto* stats = app.add_subcommand("stats", "discrimination and relatedness statistics");
    stats->add_option("--gt", files.gt_path, "ground truth file");
    stats->add_option("--users", files.users_path, "users file");
    stats->add_option("--click-model", files.click_model_path, "calibrated click model");
    stats->add_option("--quit-model", files.quit_model_path, "calibrated quit model");

    CLI11_PARSE(app, argc, argv);

    return guarded([&]() -> int {
        RunConfig cfg = build_config(args);
        if (simulate->parsed()) return ssplan::cmd_simulate(cfg);
        if (train->parsed()) {
            if (log_path.empty()) log_path = ssplan::out_path(cfg, "sessions.jsonl");
            return ssplan::cmd_train(cfg, log_path);
        }
        if (calibrate->parsed()) {
            if (log_path.empty()) log_path = ssplan::out_path(cfg, "sessions.jsonl");
            return ssplan::cmd_calibrate(cfg, model_path, log_path);
        }
        if (plan->parsed()) {
            if (!mdp_path.empty()) return ssplan::cmd_plan_mdp(cfg, mdp_path);
            default_source_paths(cfg, files);
            return ssplan::cmd_plan_users(cfg, files);
        }
        if (evaluate->parsed()) {
            default_source_paths(cfg, files);
            return ssplan::cmd_evaluate(cfg, files);
        }
        if (sweep->parsed()) {
            default_source_paths(cfg, files);
            return ssplan::cmd_noise_sweep(cfg, files);
        }
        if (stats->parsed()) {
            default_source_paths(cfg, files);
            return ssplan::cmd_stats(cfg, files);
        }
        throw ssplan::config_error("no subcommand given");
    });
}
