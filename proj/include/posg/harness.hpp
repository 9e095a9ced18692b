#pragma once

#include "posg/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace posg::harness {

struct MetricRow {
    int iteration = 0;
    std::uint64_t seed = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_mmd_to_demos = 0.0;
    double surrogate_loss = 0.0;
    double value_loss = 0.0;
    double clip_fraction = 0.0;
    double wall_time = 0.0; // seconds; lands in timings.csv, not metrics.csv
};

// metrics.csv column order (deterministic content; wall time is kept out so a
// rerun with the same config and seed is byte-identical)
std::string metrics_header();
std::string metrics_line(const MetricRow& row);

struct TrainResult {
    std::vector<MetricRow> rows;
    std::string run_dir;
    std::string metrics_path;
    std::vector<std::string> checkpoint_paths;
};

// Full training run: every seed sequentially, metrics flushed per iteration,
// checkpoints and a manifest written into the run directory.
TrainResult run_train(const config::ExperimentConfig& cfg, bool quiet = true);

struct EvalResult {
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_mmd_to_demos = 0.0;
};

struct EvalRequest {
    std::string checkpoint;   // policy file
    std::string env_preset;   // empty = take from the manifest next to it
    std::string layout_file;
    std::string demo_file;    // empty = take from the manifest
    int episodes = 20;
    std::uint64_t seed = 0;
    mmd::KernelSpec kernel;
    mmd::FeatureMap feature_map;
    std::size_t max_points = 256;
    bool use_manifest = true;
};

EvalResult run_eval(const EvalRequest& req);

struct AblateResult {
    std::string csv_path;
    // per value: the training rows
    std::vector<std::pair<std::string, TrainResult>> runs;
};

// axis "demo_count" (values are counts) or "demo_quality" (values are quality
// tags resolved through [demo_files] in the config)
AblateResult run_ablate(const config::ExperimentConfig& base, const std::string& axis,
                        const std::vector<std::string>& values, bool quiet = true);

} // namespace posg::harness
