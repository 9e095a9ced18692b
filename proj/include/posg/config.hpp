#pragma once

#include "posg/guidance.hpp"
#include "posg/mmd.hpp"
#include "posg/ppo.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace posg::config {

using guidance::ConfigError;

struct ExperimentConfig {
    std::string env_preset = "kdt-small";
    std::string layout_file;          // optional custom grid
    std::string algorithm = "posg";   // "posg" or "ppo"
    int iterations = 100;
    std::vector<std::uint64_t> seeds = {0};
    std::string out_dir = "runs/out";
    std::string demo_file;
    std::size_t demo_limit = 0;       // 0 = use every record in the file
    std::size_t demo_capacity = 10;

    ppo::PpoConfig ppo;
    guidance::GuidanceParams guidance;
    mmd::KernelSpec kernel;
    std::size_t max_points = 256;
    mmd::FeatureMap feature_map;

    // demo file per quality tag, consumed by the demo_quality ablation axis
    std::map<std::string, std::string> demo_files_by_quality;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_toml_text(const std::string& text);

    // guidance step active (algorithm "ppo" forces it off)
    bool guidance_active() const;

    void validate() const; // throws ConfigError
    std::string to_toml() const;

    ppo::IterationConfig iteration_config() const;
};

} // namespace posg::config
