#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ssplan/io.hpp"
#include "ssplan/planner.hpp"
#include "test_support.hpp"

using namespace ssplan;
using Catch::Matchers::WithinAbs;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("ssplan_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("MdpModel JSON round-trip is lossless at double precision") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const MdpModel m = testsup::random_model(5, 7, derive_seed(7, "io-mdp", trial));
        const std::string text = mdp_to_json(m).dump();
        const MdpModel back = mdp_from_json(parse_json(text, "test"));
        CHECK(back.horizon == m.horizon);
        CHECK(back.num_items == m.num_items);
        CHECK(back.item_ids == m.item_ids);
        CHECK(back.reward == m.reward); // bitwise
        CHECK(back.quit == m.quit);
    }
}

TEST_CASE("MdpModel JSON schema violations") {
    const MdpModel m = testsup::worked_example();
    json j = mdp_to_json(m);
    j.erase("quit");
    CHECK_THROWS_AS(mdp_from_json(j), schema_error);
    j = mdp_to_json(m);
    j["reward"][0] = 1.7; // outside [0,1]
    CHECK_THROWS_AS(mdp_from_json(j), schema_error);
    j = mdp_to_json(m);
    j["num_items"] = 5; // matrix sizes no longer match
    CHECK_THROWS_AS(mdp_from_json(j), schema_error);
}

TEST_CASE("plan serialization uses item ids") {
    const MdpModel m = testsup::worked_example();
    const json j = plan_to_json(ssp_plan(m).plan, m.item_ids);
    CHECK(j.at("path") == json::array({"B", "A"}));
    CHECK_THAT(j.at("expected_ipv").get<double>(), WithinAbs(0.75, 1e-9));
    CHECK(j.at("strategy") == "ssp");
    CHECK_FALSE(j.contains("beam_size"));
    const json jb = plan_to_json(beam_search_plan(m, 2), m.item_ids);
    CHECK(jb.at("beam_size") == 2);
}

TEST_CASE("model file round-trip with and without calibration") {
    ModelFile mf;
    mf.kind = "quit";
    mf.model.weights = {0.25, -1.5, 3.0};
    mf.model.bias = -0.125;
    mf.feature_schema = {"f0", "step", "category_exposure"};
    ModelFile back = model_file_from_json(model_file_to_json(mf));
    CHECK(back.kind == "quit");
    CHECK(back.model.weights == mf.model.weights);
    CHECK(back.model.bias == mf.model.bias);
    CHECK_FALSE(back.calibration.has_value());

    mf.calibration = Calibration{-2.25, 0.5};
    back = model_file_from_json(model_file_to_json(mf));
    REQUIRE(back.calibration.has_value());
    CHECK(back.calibration->A == -2.25);
    CHECK(back.calibration->B == 0.5);

    json j = model_file_to_json(mf);
    j["weights"].push_back(1.0); // now longer than the schema
    CHECK_THROWS_AS(model_file_from_json(j), schema_error);
}

TEST_CASE("ground truth and users round-trip preserves produced models") {
    SimConfig cfg;
    cfg.catalog_size = 120;
    cfg.num_users = 6;
    const GroundTruth gt = generate_ground_truth(cfg);
    const auto users = generate_users(gt, cfg);

    const GroundTruth gt_back = ground_truth_from_json(parse_json(ground_truth_to_json(gt).dump(), "gt"));
    const auto users_back = users_from_json(parse_json(users_to_json(users).dump(), "users"));
    REQUIRE(users_back.size() == users.size());

    const MdpModel a = produce_mdp_ground_truth(gt, users[2], 6);
    const MdpModel b = produce_mdp_ground_truth(gt_back, users_back[2], 6);
    CHECK(a.reward == b.reward);
    CHECK(a.quit == b.quit);
    CHECK(a.item_ids == b.item_ids);
}

TEST_CASE("session JSONL round-trip") {
    TempDir dir;
    SimConfig cfg;
    cfg.num_users = 25;
    cfg.catalog_size = 200;
    const GroundTruth gt = generate_ground_truth(cfg);
    const auto sessions = generate_sessions(gt, cfg);
    const std::string path = dir.file("sessions.jsonl");
    write_sessions_jsonl(path, sessions);
    const auto back = read_sessions_jsonl(path);
    REQUIRE(back.size() == sessions.size());
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        CHECK(back[s].user_id == sessions[s].user_id);
        REQUIRE(back[s].bags.size() == sessions[s].bags.size());
        CHECK(back[s].clicks == sessions[s].clicks);
        CHECK(back[s].true_continue == sessions[s].true_continue);
        for (std::size_t b = 0; b < sessions[s].bags.size(); ++b) {
            CHECK(back[s].bags[b].positive == sessions[s].bags[b].positive);
            REQUIRE(back[s].bags[b].instances.size() == sessions[s].bags[b].instances.size());
            for (std::size_t i = 0; i < sessions[s].bags[b].instances.size(); ++i) {
                CHECK(back[s].bags[b].instances[i].features ==
                      sessions[s].bags[b].instances[i].features);
                CHECK(back[s].bags[b].instances[i].item_id ==
                      sessions[s].bags[b].instances[i].item_id);
            }
        }
    }
}

TEST_CASE("session parsing rejects malformed structure") {
    CHECK_THROWS_AS(session_from_json(parse_json(R"({"user_id":"u"})", "t")), schema_error);
    CHECK_THROWS_AS(
        session_from_json(parse_json(
            R"({"user_id":"u","bags":[{"label":"maybe","instances":[]}]})", "t")),
        schema_error);
    // Negative bag not last.
    CHECK_THROWS_AS(
        session_from_json(parse_json(
            R"({"user_id":"u","bags":[
                {"label":"neg","instances":[{"item_id":"a","category_id":"c","features":[1.0]}]},
                {"label":"pos","instances":[{"item_id":"b","category_id":"c","features":[1.0]}]}]})",
            "t")),
        schema_error);
}

TEST_CASE("missing files raise io_error") {
    CHECK_THROWS_AS(read_file("/nonexistent/ssplan.json"), io_error);
    CHECK_THROWS_AS(load_json_file("/nonexistent/ssplan.json"), io_error);
}

TEST_CASE("eval report renderings") {
    EvalReport report;
    report.score_source = "ground_truth";
    report.seed = 7;
    report.rows = {{"ssp", 20, false, 2.5, 3.5, 2.5 / 3.5, 100, 0},
                   {"beam", 20, false, 2.0, 3.0, 2.0 / 3.0, 100, 0},
                   {"greedy", 20, false, 1.5, 1.7, 1.5 / 1.7, 100, 0}};
    report.noise = {{0, "ssp", 2.5}, {0, "greedy", 1.5}, {1, "ssp", 2.4}, {1, "greedy", 1.5}};

    const std::string table = eval_report_to_table(report);
    CHECK(table.find("greedy") < table.find("beam"));
    CHECK(table.find("beam") < table.find("ssp"));
    CHECK(table.find("T=20") != std::string::npos);

    const std::string csv = noise_points_to_csv(report.noise, ArtifactMeta{"deadbeef", 7});
    CHECK(csv.find("# config_hash=deadbeef seed=7\n") == 0);
    CHECK(csv.find("m,strategy,revenue\n") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);

    const json j = eval_report_to_json(report, ArtifactMeta{"deadbeef", 7});
    CHECK(j.at("rows").size() == 3);
    CHECK(j.at("noise").size() == 4);
    CHECK(j.at("meta").at("config_hash") == "deadbeef");
}

TEST_CASE("atomic_write_file creates parents and replaces content") {
    TempDir dir;
    const std::string path = dir.file("nested/dir/file.txt");
    atomic_write_file(path, "one");
    CHECK(read_file(path) == "one");
    atomic_write_file(path, "two");
    CHECK(read_file(path) == "two");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
}
