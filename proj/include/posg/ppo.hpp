#pragma once

#include "posg/envs.hpp"
#include "posg/guidance.hpp"
#include "posg/net.hpp"
#include "posg/policy.hpp"
#include "posg/rng.hpp"

#include <cstdint>
#include <vector>

namespace posg::ppo {

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_ratio = 0.2;
    int epochs_per_update = 10;
    int minibatch_size = 64;
    double learning_rate = 3e-4;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    int update_frequency = 16;    // K: episodes collected per iteration
    double guidance_gamma = 1.0;  // discount for the guidance-reward stream

    void validate() const;
};

// Exactly `episodes` complete episodes (terminal or truncated at the cap),
// sampled with a stream derived from `seed`.
std::vector<guidance::Trajectory> collect_rollouts(envs::Env& env,
                                                   const policy::Policy& pol,
                                                   int episodes, std::uint64_t seed);

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns; // returns-to-go (value regression targets)
};

// One trajectory; bootstrap_value is V(s_T) for truncated episodes, 0 for
// terminal ones.
GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values, double bootstrap_value,
                      double gamma, double gae_lambda);

// Flat variant over done-flag segments (each done treated as terminal).
GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones, double gamma,
                      double gae_lambda);

// (x - mean) / (std + 1e-8) over the whole span; degenerate spans map to zero
std::vector<double> standardize(const std::vector<double>& v);

struct RolloutBatch {
    const std::vector<guidance::Trajectory>* trajectories = nullptr;
    std::vector<std::pair<std::size_t, std::size_t>> index; // (traj, step), flattened
    std::vector<double> log_prob_old;
};

struct UpdateStats {
    double surrogate = 0.0;
    double value_loss = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
};

// Clipped-surrogate policy step plus value regression on one reward stream.
// Advantages must arrive standardized. Throws on numerical divergence.
UpdateStats ppo_update(policy::Policy& pol, nn::AdamState& pol_opt,
                       nn::DenseNet& value_net, nn::AdamState& value_opt,
                       const RolloutBatch& batch,
                       const std::vector<double>& advantages,
                       const std::vector<double>& value_targets,
                       const PpoConfig& cfg, Rng& rng);

struct Agent {
    policy::Policy pol;
    nn::AdamState pol_opt;
    nn::DenseNet value_env;
    nn::AdamState value_env_opt;
    nn::DenseNet value_gid;
    nn::AdamState value_gid_opt;
};

Agent make_agent(const envs::Env& env, const PpoConfig& cfg, std::uint64_t seed);

struct IterationConfig {
    PpoConfig ppo;
    guidance::GuidanceParams guidance;
    mmd::KernelSpec kernel;
    mmd::FeatureMap feature_map;
    std::size_t max_points = 256;
};

struct IterationMetrics {
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_mmd = 0.0;
    UpdateStats env_update;
    UpdateStats guidance_update;
    bool guidance_step_ran = false;
};

// One POSG iteration: collect K episodes, weight them against the demo set,
// update with environmental advantages then with guidance advantages, then
// offer improving trajectories to the demo memory. With guidance disabled the
// second update and the memory offer are skipped and this is plain PPO.
IterationMetrics posg_iteration(envs::Env& env, Agent& agent,
                                guidance::DemoSet& demos,
                                const IterationConfig& cfg, Rng& run_rng);

} // namespace posg::ppo
