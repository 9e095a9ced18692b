#pragma once

#include "posg/mmd.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace posg::guidance {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Step {
    std::vector<double> obs;
    int action = -1;                  // discrete action index, -1 if continuous
    std::vector<double> action_vec;   // continuous action, empty if discrete
    double env_reward = 0.0;
};

struct Trajectory {
    std::vector<Step> steps;
    double return_ = 0.0;             // undiscounted sum of env rewards
    mmd::PointSet features;           // cached feature-map output, may be empty
    std::vector<double> final_obs;    // observation after the last step
    bool terminal = false;            // goal reached (vs. truncated at the cap)
};

// State-only by construction: observations and a scalar return, nothing else.
struct DemoTrajectory {
    std::vector<std::vector<double>> observations;
    double return_ = 0.0;
};

class DemoSet {
public:
    explicit DemoSet(std::size_t capacity = 10);

    // keeps demos sorted by descending return (ties keep insertion order)
    void add(DemoTrajectory demo);

    std::size_t size() const { return demos_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return demos_.size() >= capacity_; }
    const DemoTrajectory& operator[](std::size_t i) const { return demos_[i]; }
    const std::vector<DemoTrajectory>& demos() const { return demos_; }
    double min_return() const;

    // insert iff the set is below capacity or the return strictly exceeds the
    // current minimum (the lowest-return demo is evicted on overflow; ties
    // never evict); returns whether the candidate was inserted
    bool insert_candidate(DemoTrajectory demo);

private:
    std::size_t capacity_;
    std::vector<DemoTrajectory> demos_;
};

enum class GuidanceMode { discrete_table, continuous_per_trajectory };

struct GuidanceParams {
    double k_temp = 5.0;
    double epsilon = 1e-8;
    double alpha = 0.5;
    double beta = 0.5;
    GuidanceMode mode = GuidanceMode::discrete_table;
    bool key_on_state_only = false;   // key on x = f(s) instead of (s, a)
    bool enabled = true;

    void validate() const;
};

// State-action key for the discrete importance table: the discretized
// observation tuple plus the action index (or just the feature tuple when
// key_on_state_only is set).
using StateActionKey = std::vector<long long>;

StateActionKey make_key(const Step& step, const GuidanceParams& params,
                        const mmd::FeatureMap& g);

struct ImportanceTable {
    std::map<StateActionKey, std::vector<double>> entries;
};

struct WeightedBuffer {
    std::vector<Trajectory> trajectories;
    std::vector<std::pair<double, std::size_t>> distances; // (d, nearest demo)
    std::vector<double> weights;                           // omega-hat
    std::vector<double> importance;                        // I = omega-hat * R_j
};

// Fills features (if missing), distances, omega-hat weights and importances
// for the whole rollout buffer. Weights normalize over exactly this buffer:
// omega-hat(tau) = exp(-k d(tau)) / (sum_v exp(-k d(v)) + epsilon).
WeightedBuffer compute_weights(std::vector<Trajectory> buffer, const DemoSet& demos,
                               const GuidanceParams& params,
                               const mmd::KernelSpec& kernel,
                               const mmd::FeatureMap& g, std::size_t max_points);

double joint_return(const Trajectory& traj, const DemoTrajectory& nearest_demo,
                    const GuidanceParams& params);

double trajectory_importance(double weight, double joint_ret);

// Appends each trajectory's importance once per distinct key it visits (a
// repeated visit within one trajectory counts once: the indicator is set
// membership).
void accumulate_discrete(ImportanceTable& table, const WeightedBuffer& buffer,
                         const GuidanceParams& params, const mmd::FeatureMap& g);

struct DiscreteReward {
    double value = 0.0;
    bool cold = false; // key never seen in the table
};

DiscreteReward guidance_reward_discrete(const ImportanceTable& table,
                                        const StateActionKey& key);

// Per-step rewards: every step of trajectory i receives importance[i] / len(i).
std::vector<std::vector<double>> guidance_rewards_continuous(const WeightedBuffer& buffer);

// Per-step rewards for either mode (discrete builds a fresh table from the
// buffer and looks each step up).
std::vector<std::vector<double>> guidance_rewards(const WeightedBuffer& buffer,
                                                  const GuidanceParams& params,
                                                  const mmd::FeatureMap& g);

// Strips actions from the candidate and applies the DemoSet insertion rule.
bool update_demoset(DemoSet& demos, const Trajectory& candidate);

std::vector<mmd::PointSet> demo_feature_sets(const DemoSet& demos,
                                             const mmd::FeatureMap& g);

} // namespace posg::guidance
