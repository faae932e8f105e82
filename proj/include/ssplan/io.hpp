#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssplan/dataset.hpp"
#include "ssplan/errors.hpp"
#include "ssplan/evaluation.hpp"
#include "ssplan/mdp.hpp"
#include "ssplan/simulator.hpp"

namespace ssplan {

using json = nlohmann::ordered_json;

// Stamp carried by every JSON artifact so runs can be traced back to their
// resolved configuration.
struct ArtifactMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
};

inline json meta_to_json(const ArtifactMeta& meta) {
    return json{{"config_hash", meta.config_hash}, {"seed", meta.seed}};
}

// ---------------------------------------------------------------------------
// files

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Write-temp-then-rename so partially written artifacts never appear under
// their final name.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot write file: " + tmp.string());
        out << content;
        if (!out.flush()) throw io_error("failed writing file: " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw schema_error("invalid JSON in " + what + ": " + e.what());
    }
}

inline json load_json_file(const std::string& path) { return parse_json(read_file(path), path); }

inline void save_json_file(const std::string& path, const json& j) {
    atomic_write_file(path, j.dump(2) + "\n");
}

namespace detail {

template <typename T>
T get_field(const json& j, const char* key, const std::string& what) {
    if (!j.contains(key)) throw schema_error(what + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(what + ": bad field '" + key + "': " + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// MdpModel <-> JSON (reward/quit as row-major T x K arrays)

inline json mdp_to_json(const MdpModel& model, const std::optional<ArtifactMeta>& meta = {}) {
    json j{{"horizon", model.horizon},
           {"num_items", model.num_items},
           {"item_ids", model.item_ids},
           {"reward", model.reward},
           {"quit", model.quit}};
    if (meta) j["meta"] = meta_to_json(*meta);
    return j;
}

inline MdpModel mdp_from_json(const json& j) {
    MdpModel model;
    model.horizon = detail::get_field<int>(j, "horizon", "MdpModel");
    model.num_items = detail::get_field<int>(j, "num_items", "MdpModel");
    model.item_ids = detail::get_field<std::vector<std::string>>(j, "item_ids", "MdpModel");
    model.reward = detail::get_field<std::vector<double>>(j, "reward", "MdpModel");
    model.quit = detail::get_field<std::vector<double>>(j, "quit", "MdpModel");
    try {
        model.validate();
    } catch (const model_error& e) {
        throw schema_error(std::string("MdpModel: ") + e.what());
    }
    return model;
}

// ---------------------------------------------------------------------------
// Plan -> JSON (paths serialized as item ids)

inline json plan_to_json(const Plan& plan, const std::vector<std::string>& item_ids,
                         const std::optional<ArtifactMeta>& meta = {}) {
    std::vector<std::string> path_ids;
    path_ids.reserve(plan.path.size());
    for (int a : plan.path) path_ids.push_back(item_ids[a]);
    json j{{"path", path_ids},
           {"expected_ipv", plan.expected_ipv},
           {"expected_bl", plan.expected_bl},
           {"expected_ctr", plan.expected_ctr},
           {"strategy", plan.strategy}};
    if (plan.beam_size > 0) j["beam_size"] = plan.beam_size;
    if (meta) j["meta"] = meta_to_json(*meta);
    return j;
}

// ---------------------------------------------------------------------------
// linear model + calibration files

struct ModelFile {
    std::string kind; // "click" | "quit"
    LinearModel model;
    std::optional<Calibration> calibration;
    std::vector<std::string> feature_schema;
};

inline json model_file_to_json(const ModelFile& mf, const std::optional<ArtifactMeta>& meta = {}) {
    json j{{"kind", mf.kind}, {"weights", mf.model.weights}, {"bias", mf.model.bias}};
    if (mf.calibration)
        j["calibration"] = json{{"A", mf.calibration->A}, {"B", mf.calibration->B}};
    else
        j["calibration"] = nullptr;
    j["feature_schema"] = mf.feature_schema;
    if (meta) j["meta"] = meta_to_json(*meta);
    return j;
}

inline ModelFile model_file_from_json(const json& j) {
    ModelFile mf;
    mf.kind = detail::get_field<std::string>(j, "kind", "model file");
    mf.model.weights = detail::get_field<std::vector<double>>(j, "weights", "model file");
    mf.model.bias = detail::get_field<double>(j, "bias", "model file");
    mf.feature_schema =
        detail::get_field<std::vector<std::string>>(j, "feature_schema", "model file");
    if (mf.feature_schema.size() != mf.model.weights.size())
        throw schema_error("model file: feature_schema does not match weights");
    if (j.contains("calibration") && !j.at("calibration").is_null()) {
        const json& c = j.at("calibration");
        mf.calibration = Calibration{detail::get_field<double>(c, "A", "calibration"),
                                     detail::get_field<double>(c, "B", "calibration")};
    }
    return mf;
}

// ---------------------------------------------------------------------------
// ground truth and users

inline json ground_truth_to_json(const GroundTruth& gt,
                                 const std::optional<ArtifactMeta>& meta = {}) {
    json catalog = json::array();
    for (const CatalogItem& item : gt.catalog)
        catalog.push_back(
            json{{"id", item.id}, {"category", item.category}, {"features", item.features}});
    json j{{"feature_dim", gt.feature_dim},
           {"num_categories", gt.num_categories},
           {"rho", gt.rho},
           {"step_scale", gt.step_scale},
           {"click_weights", gt.click_weights},
           {"continue_weights", gt.continue_weights},
           {"click_bias", gt.click_bias},
           {"continue_bias", gt.continue_bias},
           {"seed", gt.seed},
           {"catalog", std::move(catalog)}};
    if (meta) j["meta"] = meta_to_json(*meta);
    return j;
}

inline GroundTruth ground_truth_from_json(const json& j) {
    GroundTruth gt;
    gt.feature_dim = detail::get_field<int>(j, "feature_dim", "ground truth");
    gt.num_categories = detail::get_field<int>(j, "num_categories", "ground truth");
    gt.rho = detail::get_field<double>(j, "rho", "ground truth");
    gt.step_scale = detail::get_field<double>(j, "step_scale", "ground truth");
    gt.click_weights = detail::get_field<std::vector<double>>(j, "click_weights", "ground truth");
    gt.continue_weights =
        detail::get_field<std::vector<double>>(j, "continue_weights", "ground truth");
    gt.click_bias = detail::get_field<double>(j, "click_bias", "ground truth");
    gt.continue_bias = detail::get_field<double>(j, "continue_bias", "ground truth");
    gt.seed = detail::get_field<std::uint64_t>(j, "seed", "ground truth");
    if (!j.contains("catalog") || !j.at("catalog").is_array())
        throw schema_error("ground truth: missing catalog");
    for (const json& item_json : j.at("catalog")) {
        CatalogItem item;
        item.id = detail::get_field<std::string>(item_json, "id", "catalog item");
        item.category = detail::get_field<int>(item_json, "category", "catalog item");
        item.features = detail::get_field<std::vector<double>>(item_json, "features", "catalog item");
        if (static_cast<int>(item.features.size()) != gt.feature_dim)
            throw schema_error("catalog item feature dimension mismatch");
        gt.catalog.push_back(std::move(item));
    }
    return gt;
}

inline json users_to_json(const std::vector<UserContext>& users,
                          const std::optional<ArtifactMeta>& meta = {}) {
    json arr = json::array();
    for (const UserContext& u : users)
        arr.push_back(json{{"user_id", u.user_id},
                           {"category_exposure", u.category_exposure},
                           {"candidates", u.candidates}});
    json j{{"users", std::move(arr)}};
    if (meta) j["meta"] = meta_to_json(*meta);
    return j;
}

inline std::vector<UserContext> users_from_json(const json& j) {
    if (!j.contains("users") || !j.at("users").is_array())
        throw schema_error("users file: missing users array");
    std::vector<UserContext> users;
    for (const json& u : j.at("users")) {
        UserContext ctx;
        ctx.user_id = detail::get_field<std::string>(u, "user_id", "user");
        ctx.category_exposure =
            detail::get_field<std::vector<double>>(u, "category_exposure", "user");
        ctx.candidates = detail::get_field<std::vector<int>>(u, "candidates", "user");
        users.push_back(std::move(ctx));
    }
    return users;
}

// ---------------------------------------------------------------------------
// session logs (JSON Lines, one session per line)

inline json session_to_json(const SessionLog& session) {
    json bags = json::array();
    for (std::size_t b = 0; b < session.bags.size(); ++b) {
        const Bag& bag = session.bags[b];
        json instances = json::array();
        for (std::size_t i = 0; i < bag.instances.size(); ++i) {
            const Instance& inst = bag.instances[i];
            json instance{{"item_id", inst.item_id},
                          {"category_id", inst.category_id},
                          {"features", inst.features}};
            instance["click"] = session.clicks.empty() ? 0 : session.clicks[b][i];
            instance["true_continue"] =
                session.true_continue.empty() ? 0 : session.true_continue[b][i];
            instances.push_back(std::move(instance));
        }
        bags.push_back(json{{"label", bag.positive ? "pos" : "neg"},
                            {"instances", std::move(instances)}});
    }
    return json{{"user_id", session.user_id}, {"bags", std::move(bags)}};
}

inline SessionLog session_from_json(const json& j) {
    SessionLog session;
    session.user_id = detail::get_field<std::string>(j, "user_id", "session");
    if (!j.contains("bags") || !j.at("bags").is_array())
        throw schema_error("session: missing bags array");
    for (const json& bag_json : j.at("bags")) {
        const std::string label = detail::get_field<std::string>(bag_json, "label", "bag");
        if (label != "pos" && label != "neg") throw schema_error("bag label must be pos or neg");
        Bag bag;
        bag.positive = label == "pos";
        std::vector<std::uint8_t> clicks, continues;
        if (!bag_json.contains("instances") || !bag_json.at("instances").is_array())
            throw schema_error("bag: missing instances array");
        for (const json& inst_json : bag_json.at("instances")) {
            Instance inst;
            inst.item_id = detail::get_field<std::string>(inst_json, "item_id", "instance");
            inst.category_id = detail::get_field<std::string>(inst_json, "category_id", "instance");
            inst.features = detail::get_field<std::vector<double>>(inst_json, "features", "instance");
            clicks.push_back(inst_json.value("click", 0) ? 1 : 0);
            continues.push_back(inst_json.value("true_continue", 0) ? 1 : 0);
            bag.instances.push_back(std::move(inst));
        }
        session.bags.push_back(std::move(bag));
        session.clicks.push_back(std::move(clicks));
        session.true_continue.push_back(std::move(continues));
    }
    try {
        validate_session(session);
    } catch (const data_error& e) {
        throw schema_error(std::string("session: ") + e.what());
    }
    return session;
}

inline void write_sessions_jsonl(const std::string& path, const std::vector<SessionLog>& sessions) {
    std::ostringstream out;
    for (const SessionLog& s : sessions) out << session_to_json(s).dump() << "\n";
    atomic_write_file(path, out.str());
}

inline std::vector<SessionLog> read_sessions_jsonl(const std::string& path) {
    const std::string content = read_file(path);
    std::vector<SessionLog> sessions;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        sessions.push_back(
            session_from_json(parse_json(line, path + ":" + std::to_string(line_no))));
    }
    if (sessions.empty()) throw schema_error("no sessions in " + path);
    return sessions;
}

// ---------------------------------------------------------------------------
// evaluation reports

inline json eval_report_to_json(const EvalReport& report,
                                const std::optional<ArtifactMeta>& meta = {}) {
    json rows = json::array();
    for (const EvalRow& row : report.rows)
        rows.push_back(json{{"strategy", row.strategy},
                            {"horizon", row.horizon},
                            {"dedup", row.dedup},
                            {"mean_ipv", row.mean_ipv},
                            {"mean_bl", row.mean_bl},
                            {"ctr", row.ctr},
                            {"users", row.users},
                            {"failures", row.failures}});
    json j{{"score_source", report.score_source}, {"seed", report.seed}, {"rows", std::move(rows)}};
    if (!report.noise.empty()) {
        json noise = json::array();
        for (const NoisePoint& p : report.noise)
            noise.push_back(
                json{{"m", p.level}, {"strategy", p.strategy}, {"revenue", p.mean_revenue}});
        j["noise"] = std::move(noise);
    }
    if (report.has_stats) {
        j["stats"] = json{{"quit_std", report.discrimination.mean_std},
                          {"quit_mean", report.discrimination.mean_of_means},
                          {"quit_std_over_mean", report.discrimination.mean_ratio},
                          {"quit_std_over_mean_pooled", report.discrimination.ratio_of_means},
                          {"jaccard", report.relatedness.jaccard},
                          {"ndcg", report.relatedness.ndcg}};
    }
    if (meta) j["meta"] = meta_to_json(*meta);
    return j;
}

/// Plain-text comparison table, one strategy per row, IPV/BL/CTR column
/// triple per horizon.
inline std::string eval_report_to_table(const EvalReport& report) {
    std::vector<int> horizons;
    for (const EvalRow& row : report.rows)
        if (std::find(horizons.begin(), horizons.end(), row.horizon) == horizons.end())
            horizons.push_back(row.horizon);
    std::vector<std::string> strategies;
    for (const EvalRow& row : report.rows)
        if (std::find(strategies.begin(), strategies.end(), row.strategy) == strategies.end())
            strategies.push_back(row.strategy);
    // Display in the conventional order: baselines first, exact solver last.
    std::stable_sort(strategies.begin(), strategies.end(),
                     [](const std::string& lhs, const std::string& rhs) {
                         auto rank = [](const std::string& s) {
                             if (s.rfind("greedy", 0) == 0) return 0;
                             if (s.rfind("beam", 0) == 0) return 1;
                             return 2;
                         };
                         return rank(lhs) < rank(rhs);
                     });

    char buf[160];
    std::ostringstream out;
    out << "Method        ";
    for (int h : horizons) {
        std::snprintf(buf, sizeof buf, "  T=%-3d IPV      BL     CTR", h);
        out << buf;
    }
    out << "\n";
    for (const std::string& strategy : strategies) {
        std::snprintf(buf, sizeof buf, "%-14s", strategy.c_str());
        out << buf;
        for (int h : horizons) {
            const EvalRow* found = nullptr;
            for (const EvalRow& row : report.rows)
                if (row.strategy == strategy && row.horizon == h) found = &row;
            if (found != nullptr) {
                std::snprintf(buf, sizeof buf, "  %9.4f %7.2f %7.4f", found->mean_ipv,
                              found->mean_bl, found->ctr);
                out << buf;
            }
        }
        out << "\n";
    }
    return out.str();
}

inline std::string noise_points_to_csv(const std::vector<NoisePoint>& points,
                                       const ArtifactMeta& meta) {
    std::ostringstream out;
    out << "# config_hash=" << meta.config_hash << " seed=" << meta.seed << "\n";
    out << "m,strategy,revenue\n";
    for (const NoisePoint& p : points) {
        char buf[40];
        const auto res = std::to_chars(buf, buf + sizeof buf, p.mean_revenue);
        out << p.level << ',' << p.strategy << ',' << std::string_view(buf, res.ptr - buf)
            << "\n";
    }
    return out.str();
}

} // namespace ssplan
