#include "posg/harness.hpp"

#include "posg/demos.hpp"
#include "posg/kernels.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace posg::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

std::string metrics_header() {
    return "iteration,seed,success_rate,mean_return,mean_mmd_to_demos,"
           "surrogate_loss,value_loss,clip_fraction";
}

std::string metrics_line(const MetricRow& r) {
    std::string line = std::to_string(r.iteration) + "," + std::to_string(r.seed);
    for (double v : {r.success_rate, r.mean_return, r.mean_mmd_to_demos,
                     r.surrogate_loss, r.value_loss, r.clip_fraction})
        line += "," + fmt(v);
    return line;
}

TrainResult run_train(const config::ExperimentConfig& cfg, bool quiet) {
    cfg.validate();
    TrainResult result;
    result.run_dir = cfg.out_dir;
    fs::create_directories(cfg.out_dir);
    fs::create_directories(fs::path(cfg.out_dir) / "checkpoints");

    {
        std::ofstream cfg_copy(fs::path(cfg.out_dir) / "config.toml");
        cfg_copy << cfg.to_toml();
    }

    result.metrics_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
    std::ofstream metrics(result.metrics_path, std::ios::binary);
    std::ofstream timings(fs::path(cfg.out_dir) / "timings.csv");
    metrics << metrics_header() << "\n";
    timings << "iteration,seed,wall_time\n";

    const ppo::IterationConfig iter_cfg = cfg.iteration_config();

    for (std::uint64_t seed : cfg.seeds) {
        auto env = envs::make_env(cfg.env_preset, cfg.layout_file);
        guidance::DemoSet demos =
            demos::load_demos(cfg.demo_file, cfg.demo_limit, cfg.demo_capacity);
        ppo::Agent agent = ppo::make_agent(*env, cfg.ppo, seed);
        Rng run_rng(mix_seed(seed, 0x72756e5fULL));

        for (int iter = 1; iter <= cfg.iterations; ++iter) {
            const auto t0 = std::chrono::steady_clock::now();
            const ppo::IterationMetrics m =
                ppo::posg_iteration(*env, agent, demos, iter_cfg, run_rng);
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();

            MetricRow row;
            row.iteration = iter;
            row.seed = seed;
            row.success_rate = m.success_rate;
            row.mean_return = m.mean_return;
            row.mean_mmd_to_demos = m.mean_mmd;
            row.surrogate_loss = m.env_update.surrogate;
            row.value_loss = m.env_update.value_loss;
            row.clip_fraction = m.env_update.clip_fraction;
            row.wall_time = elapsed;
            result.rows.push_back(row);

            metrics << metrics_line(row) << "\n";
            metrics.flush();
            timings << row.iteration << "," << row.seed << "," << fmt(elapsed) << "\n";

            if (!quiet && (iter % 10 == 0 || iter == 1)) {
                std::cerr << "seed " << seed << " iter " << iter << " success "
                          << m.success_rate << " return " << m.mean_return << " mmd "
                          << m.mean_mmd << "\n";
            }
        }

        const std::string tag = "_seed" + std::to_string(seed) + ".bin";
        const fs::path ckpt_dir = fs::path(cfg.out_dir) / "checkpoints";
        const std::string policy_path = (ckpt_dir / ("policy" + tag)).string();
        agent.pol.save(policy_path);
        nn::save_net(agent.value_env, (ckpt_dir / ("value_env" + tag)).string());
        nn::save_net(agent.value_gid, (ckpt_dir / ("value_guidance" + tag)).string());
        result.checkpoint_paths.push_back(policy_path);
    }

    json manifest;
    manifest["config"] = "config.toml";
    manifest["env"] = cfg.env_preset;
    manifest["algorithm"] = cfg.algorithm;
    manifest["iterations"] = cfg.iterations;
    manifest["seeds"] = cfg.seeds;
    manifest["demo_file"] = cfg.demo_file;
    manifest["demo_limit"] = cfg.demo_limit;
    manifest["metrics"] = "metrics.csv";
    manifest["timings"] = "timings.csv";
    manifest["kernel_lane"] = kernels::lane_name(kernels::active_lane());
    manifest["kernel_bandwidth"] = cfg.kernel.bandwidth;
    manifest["kernel_bandwidth_mode"] =
        cfg.kernel.mode == mmd::BandwidthMode::fixed ? "fixed" : "median";
    manifest["max_points"] = cfg.max_points;
    manifest["feature_mode"] =
        cfg.feature_map.mode == mmd::FeatureMap::Mode::identity ? "identity"
                                                                : "coordinate_projection";
    manifest["feature_indices"] = cfg.feature_map.projection_indices;
    {
        std::vector<std::string> names;
        for (const std::string& p : result.checkpoint_paths)
            names.push_back(fs::path(p).filename().string());
        manifest["checkpoints"] = names;
    }
    std::ofstream mf(fs::path(cfg.out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";

    return result;
}

EvalResult run_eval(const EvalRequest& req_in) {
    EvalRequest req = req_in;
    if (!fs::exists(req.checkpoint))
        throw config::ConfigError("checkpoint does not exist: " + req.checkpoint);

    if (req.use_manifest) {
        // resolve unset fields from the manifest beside the checkpoint
        for (const fs::path dir : {fs::path(req.checkpoint).parent_path(),
                                   fs::path(req.checkpoint).parent_path().parent_path()}) {
            const fs::path mf_path = dir / "manifest.json";
            if (!fs::exists(mf_path)) continue;
            std::ifstream in(mf_path);
            json mf = json::parse(in);
            if (req.env_preset.empty()) req.env_preset = mf.value("env", "");
            if (req.demo_file.empty()) req.demo_file = mf.value("demo_file", "");
            if (mf.contains("kernel_bandwidth")) {
                req.kernel.bandwidth = mf["kernel_bandwidth"].get<double>();
                req.kernel.mode = mf.value("kernel_bandwidth_mode", "median") == "fixed"
                                      ? mmd::BandwidthMode::fixed
                                      : mmd::BandwidthMode::median_heuristic;
            }
            if (mf.contains("max_points")) req.max_points = mf["max_points"].get<std::size_t>();
            if (mf.contains("feature_mode")) {
                if (mf["feature_mode"] == "coordinate_projection") {
                    req.feature_map.mode = mmd::FeatureMap::Mode::coordinate_projection;
                    req.feature_map.projection_indices =
                        mf["feature_indices"].get<std::vector<std::size_t>>();
                } else {
                    req.feature_map.mode = mmd::FeatureMap::Mode::identity;
                }
            }
            break;
        }
    }
    if (req.env_preset.empty())
        throw config::ConfigError("eval: env preset unknown (no manifest found; pass --env)");

    auto env = envs::make_env(req.env_preset, req.layout_file);
    policy::Policy pol = policy::Policy::load(req.checkpoint);
    if (pol.obs_scale().size() != env->obs_dim())
        throw config::ConfigError("eval: checkpoint does not match env observation size");
    if (pol.kind() == policy::Kind::categorical
            ? (!env->discrete_actions() || pol.net().output_dim() != env->action_count())
            : (env->discrete_actions() || pol.action_dim() != env->action_dim()))
        throw config::ConfigError("eval: checkpoint does not match env action space");

    std::vector<mmd::PointSet> demo_feats;
    if (!req.demo_file.empty()) {
        guidance::DemoSet demos = demos::load_demos(req.demo_file);
        demo_feats = guidance::demo_feature_sets(demos, req.feature_map);
    }

    EvalResult res;
    for (int ep = 0; ep < req.episodes; ++ep) {
        std::vector<double> obs = env->reset(mix_seed(req.seed, ep));
        std::vector<std::vector<double>> observations;
        double ep_return = 0.0;
        bool terminal = false;
        while (true) {
            observations.push_back(obs);
            const policy::Sample s = pol.greedy(obs);
            const envs::StepResult r = env->discrete_actions()
                                           ? env->step_discrete(s.action)
                                           : env->step_continuous(s.action_vec);
            ep_return += r.reward;
            obs = r.obs;
            if (r.done) {
                terminal = r.terminal;
                break;
            }
        }
        res.success_rate += terminal ? 1.0 : 0.0;
        res.mean_return += ep_return;
        if (!demo_feats.empty()) {
            const mmd::PointSet feats =
                mmd::traj_features(observations, req.feature_map);
            res.mean_mmd_to_demos +=
                mmd::dist_to_demoset(feats, demo_feats, req.kernel, req.max_points).first;
        }
    }
    res.success_rate /= req.episodes;
    res.mean_return /= req.episodes;
    res.mean_mmd_to_demos /= req.episodes;
    return res;
}

AblateResult run_ablate(const config::ExperimentConfig& base, const std::string& axis,
                        const std::vector<std::string>& values, bool quiet) {
    if (values.empty()) throw config::ConfigError("ablate: empty values list");
    if (axis != "demo_count" && axis != "demo_quality")
        throw config::ConfigError("ablate: axis must be demo_count or demo_quality");

    AblateResult out;
    fs::create_directories(base.out_dir);
    out.csv_path = (fs::path(base.out_dir) / "ablation.csv").string();
    std::ofstream csv(out.csv_path, std::ios::binary);
    csv << "axis,value," << metrics_header() << "\n";

    for (const std::string& value : values) {
        config::ExperimentConfig cfg = base;
        cfg.out_dir = (fs::path(base.out_dir) / (axis + "_" + value)).string();
        if (axis == "demo_count") {
            std::size_t count = 0;
            try {
                count = static_cast<std::size_t>(std::stoul(value));
            } catch (const std::exception&) {
                throw config::ConfigError("ablate: demo_count value not a number: " + value);
            }
            if (count == 0) throw config::ConfigError("ablate: demo_count must be positive");
            cfg.demo_limit = count;
        } else {
            const auto it = base.demo_files_by_quality.find(value);
            if (it == base.demo_files_by_quality.end())
                throw config::ConfigError("ablate: no demo file configured for quality '" +
                                          value + "'");
            cfg.demo_file = it->second;
        }
        TrainResult run = run_train(cfg, quiet);
        for (const MetricRow& row : run.rows)
            csv << axis << "," << value << "," << metrics_line(row) << "\n";
        out.runs.emplace_back(value, std::move(run));
    }
    return out;
}

} // namespace posg::harness
