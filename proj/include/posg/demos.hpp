#pragma once

#include "posg/envs.hpp"
#include "posg/guidance.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace posg::demos {

// One JSONL record. Deliberately has no action field: demonstrations are
// state-only, and the loader rejects files that carry actions.
struct DemoFileRecord {
    std::string env_id;
    std::string quality_tag;
    std::int64_t generator_seed = 0;
    double return_ = 0.0;
    std::vector<std::vector<double>> observations;
};

// BFS action sequence start -> key -> door -> treasure on the given layout
std::vector<int> kdt_expert_actions(const envs::KdtLayout& layout);

// Shortest-path expert replayed through the env; return_ is always the
// treasure bonus.
DemoFileRecord scripted_expert_kdt(const envs::KdtLayout& layout);

// Expert path with probability-noise random detours (re-planned after each
// detour), capped at the episode limit; used for the demo-quality ablation.
DemoFileRecord scripted_medium_kdt(const envs::KdtLayout& layout, double noise,
                                   std::uint64_t seed);

// Proportional controller toward the goal; medium adds Gaussian action noise.
DemoFileRecord scripted_expert_pointmass(const envs::PointMassParams& params);
DemoFileRecord scripted_medium_pointmass(const envs::PointMassParams& params,
                                         double noise_sigma, std::uint64_t seed);

void save_demos(const std::vector<DemoFileRecord>& records, const std::string& path);
std::vector<DemoFileRecord> load_demo_records(const std::string& path);

// Loads records into a DemoSet (capacity grows to fit); limit > 0 keeps only
// the first `limit` records of the file.
guidance::DemoSet load_demos(const std::string& path, std::size_t limit = 0,
                             std::size_t capacity = 0);

std::vector<DemoFileRecord> generate(const std::string& env_preset,
                                     const std::string& quality, std::size_t count,
                                     std::uint64_t seed,
                                     const std::string& layout_file = "");

} // namespace posg::demos
