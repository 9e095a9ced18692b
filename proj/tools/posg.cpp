#include "posg/config.hpp"
#include "posg/demos.hpp"
#include "posg/harness.hpp"
#include "posg/kernels.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int cmd_train(const std::string& config_path, bool verbose) {
    const auto cfg = posg::config::ExperimentConfig::from_file(config_path);
    const auto result = posg::harness::run_train(cfg, !verbose);
    std::cout << "run directory: " << result.run_dir << "\n";
    std::cout << "metrics: " << result.metrics_path << "\n";
    double final_success = 0.0;
    int tail = 0;
    for (const auto& row : result.rows) {
        if (row.iteration > cfg.iterations - 10) {
            final_success += row.success_rate;
            ++tail;
        }
    }
    if (tail > 0)
        std::cout << "final success rate (last 10 iters, all seeds): "
                  << final_success / tail << "\n";
    return 0;
}

int cmd_gen_demos(const std::string& env, const std::string& quality, std::size_t count,
                  std::uint64_t seed, const std::string& out,
                  const std::string& layout) {
    const auto records = posg::demos::generate(env, quality, count, seed, layout);
    posg::demos::save_demos(records, out);
    double mean_return = 0.0;
    for (const auto& r : records) mean_return += r.return_;
    mean_return /= static_cast<double>(records.size());
    std::cout << "wrote " << records.size() << " " << quality << " demos for " << env
              << " to " << out << " (mean return " << mean_return << ")\n";
    return 0;
}

int cmd_eval(posg::harness::EvalRequest req) {
    const auto res = posg::harness::run_eval(req);
    std::cout << "episodes: " << req.episodes << "\n";
    std::cout << "success_rate: " << res.success_rate << "\n";
    std::cout << "mean_return: " << res.mean_return << "\n";
    std::cout << "mean_mmd_to_demos: " << res.mean_mmd_to_demos << "\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& axis,
               const std::vector<std::string>& values, bool verbose) {
    const auto cfg = posg::config::ExperimentConfig::from_file(config_path);
    const auto res = posg::harness::run_ablate(cfg, axis, values, !verbose);
    std::cout << "ablation csv: " << res.csv_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"smooth-guidance policy optimization lab"};
    app.require_subcommand(1);

    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "per-iteration progress on stderr");

    auto* train = app.add_subcommand("train", "run a training experiment");
    std::string train_config;
    train->add_option("--config", train_config, "TOML experiment config")->required();

    auto* gen = app.add_subcommand("gen-demos", "generate state-only demonstrations");
    std::string gen_env = "kdt-small", gen_quality = "expert", gen_out = "demos.jsonl";
    std::string gen_layout;
    std::size_t gen_count = 6;
    std::uint64_t gen_seed = 0;
    gen->add_option("--env", gen_env, "env preset: kdt | kdt-small | pointmass");
    gen->add_option("--quality", gen_quality, "expert | medium");
    gen->add_option("--count", gen_count, "number of records");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output JSONL path")->required();
    gen->add_option("--layout", gen_layout, "custom layout file");

    auto* eval = app.add_subcommand("eval", "evaluate a saved policy greedily");
    posg::harness::EvalRequest eval_req;
    eval->add_option("--ckpt", eval_req.checkpoint, "policy checkpoint")->required();
    eval->add_option("--episodes", eval_req.episodes, "episodes to run");
    eval->add_option("--seed", eval_req.seed, "evaluation seed");
    eval->add_option("--env", eval_req.env_preset, "env preset (default: manifest)");
    eval->add_option("--demos", eval_req.demo_file, "demo file for the MMD metric");
    eval->add_option("--layout", eval_req.layout_file, "custom layout file");

    auto* ablate = app.add_subcommand("ablate", "sweep one config axis");
    std::string ab_config, ab_axis;
    std::vector<std::string> ab_values;
    ablate->add_option("--config", ab_config, "TOML experiment config")->required();
    ablate->add_option("--axis", ab_axis, "demo_count | demo_quality")->required();
    ablate->add_option("--values", ab_values, "axis values")->required()->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_config, verbose);
        if (gen->parsed())
            return cmd_gen_demos(gen_env, gen_quality, gen_count, gen_seed, gen_out,
                                 gen_layout);
        if (eval->parsed()) return cmd_eval(eval_req);
        if (ablate->parsed()) return cmd_ablate(ab_config, ab_axis, ab_values, verbose);
    } catch (const posg::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
