#include "posg/harness.hpp"

#include "posg/demos.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace posg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "posg_harness_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string expert_demo_file() {
    static const std::string path = [] {
        const std::string p = (scratch_dir() / "expert.jsonl").string();
        demos::save_demos(demos::generate("kdt-small", "expert", 6, 0), p);
        return p;
    }();
    return path;
}

config::ExperimentConfig tiny_config(const std::string& name) {
    config::ExperimentConfig cfg;
    cfg.env_preset = "kdt-small";
    cfg.algorithm = "posg";
    cfg.iterations = 3;
    cfg.seeds = {0, 1};
    cfg.out_dir = (scratch_dir() / name).string();
    cfg.demo_file = expert_demo_file();
    cfg.demo_limit = 1;
    cfg.ppo.update_frequency = 4;
    cfg.ppo.epochs_per_update = 2;
    cfg.ppo.minibatch_size = 256;
    cfg.kernel.mode = mmd::BandwidthMode::fixed;
    cfg.kernel.bandwidth = 2.0;
    cfg.feature_map.mode = mmd::FeatureMap::Mode::coordinate_projection;
    cfg.feature_map.projection_indices = {0, 1};
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

} // namespace

TEST_CASE("train writes one row per (iteration, seed) and a manifest") {
    auto cfg = tiny_config("rowcount");
    const auto result = harness::run_train(cfg);
    CHECK(result.rows.size() == 6); // 3 iterations x 2 seeds
    CHECK(fs::exists(fs::path(cfg.out_dir) / "metrics.csv"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "manifest.json"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "config.toml"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "checkpoints" / "policy_seed0.bin"));
    const std::string csv = slurp(result.metrics_path);
    CHECK(csv.find(harness::metrics_header()) == 0);
    for (const auto& row : result.rows) {
        CHECK(row.success_rate >= 0.0);
        CHECK(row.success_rate <= 1.0);
    }
}

TEST_CASE("repeated runs produce byte-identical metrics") {
    auto cfg1 = tiny_config("det_a");
    auto cfg2 = tiny_config("det_b");
    const auto r1 = harness::run_train(cfg1);
    const auto r2 = harness::run_train(cfg2);
    CHECK(slurp(r1.metrics_path) == slurp(r2.metrics_path));
}

TEST_CASE("plain ppo equals posg with the guidance step disabled, bit for bit") {
    auto posg_off = tiny_config("base_posg_off");
    posg_off.algorithm = "posg";
    posg_off.guidance.enabled = false;
    auto plain = tiny_config("base_ppo");
    plain.algorithm = "ppo";
    const auto r1 = harness::run_train(posg_off);
    const auto r2 = harness::run_train(plain);
    CHECK(slurp(r1.metrics_path) == slurp(r2.metrics_path));
}

TEST_CASE("eval") {
    auto cfg = tiny_config("eval_run");
    cfg.seeds = {0};
    const auto train = harness::run_train(cfg);

    harness::EvalRequest req;
    req.checkpoint = train.checkpoint_paths[0];
    req.episodes = 3;
    const auto res = harness::run_eval(req);
    CHECK(res.success_rate >= 0.0);
    CHECK(res.success_rate <= 1.0);
    CHECK(res.mean_mmd_to_demos > 0.0); // untrained-ish policy sits far from demos

    SUBCASE("evaluation is deterministic") {
        const auto res2 = harness::run_eval(req);
        CHECK(res.success_rate == res2.success_rate);
        CHECK(res.mean_return == res2.mean_return);
        CHECK(res.mean_mmd_to_demos == res2.mean_mmd_to_demos);
    }
    SUBCASE("untrained policy has (near) zero success") {
        CHECK(res.success_rate <= 0.2);
    }
    SUBCASE("missing checkpoint is a config error") {
        harness::EvalRequest bad;
        bad.checkpoint = "/nonexistent.bin";
        CHECK_THROWS_AS(harness::run_eval(bad), config::ConfigError);
    }
    SUBCASE("env mismatch is rejected") {
        harness::EvalRequest bad = req;
        bad.env_preset = "pointmass";
        bad.use_manifest = false;
        bad.demo_file = expert_demo_file();
        CHECK_THROWS_AS(harness::run_eval(bad), config::ConfigError);
    }
}

TEST_CASE("ablate") {
    auto cfg = tiny_config("ablate_run");
    cfg.seeds = {0};
    SUBCASE("demo_count axis produces one run per value") {
        const auto res = harness::run_ablate(cfg, "demo_count", {"1", "2"});
        CHECK(res.runs.size() == 2);
        const std::string csv = slurp(res.csv_path);
        CHECK(csv.find("demo_count,1,") != std::string::npos);
        CHECK(csv.find("demo_count,2,") != std::string::npos);
    }
    SUBCASE("empty values list is a config error") {
        CHECK_THROWS_AS(harness::run_ablate(cfg, "demo_count", {}), config::ConfigError);
    }
    SUBCASE("unknown axis is a config error") {
        CHECK_THROWS_AS(harness::run_ablate(cfg, "lr", {"1"}), config::ConfigError);
    }
    SUBCASE("demo_quality resolves through the configured map") {
        CHECK_THROWS_AS(harness::run_ablate(cfg, "demo_quality", {"expert"}),
                        config::ConfigError); // no [demo_files] configured
        cfg.demo_files_by_quality["expert"] = expert_demo_file();
        const auto res = harness::run_ablate(cfg, "demo_quality", {"expert"});
        CHECK(res.runs.size() == 1);
    }
}
