#include "posg/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace posg::guidance {

DemoSet::DemoSet(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("demo set capacity must be positive");
}

void DemoSet::add(DemoTrajectory demo) {
    if (demo.observations.empty())
        throw ConfigError("demo trajectory must have at least one observation");
    if (demos_.size() >= capacity_)
        throw ConfigError("demo set already at capacity");
    // first position with strictly smaller return keeps ties in insertion order
    auto it = std::find_if(demos_.begin(), demos_.end(), [&](const DemoTrajectory& d) {
        return d.return_ < demo.return_;
    });
    demos_.insert(it, std::move(demo));
}

double DemoSet::min_return() const {
    if (demos_.empty()) throw ConfigError("demo set is empty");
    return demos_.back().return_;
}

bool DemoSet::insert_candidate(DemoTrajectory demo) {
    if (demos_.size() < capacity_) {
        add(std::move(demo));
        return true;
    }
    if (!(demo.return_ > min_return())) return false;
    demos_.pop_back();
    add(std::move(demo));
    return true;
}

void GuidanceParams::validate() const {
    if (!(k_temp > 0.0)) throw ConfigError("guidance k_temp must be positive");
    if (epsilon < 0.0) throw ConfigError("guidance epsilon must be non-negative");
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
        throw ConfigError("guidance alpha/beta must lie in [0, 1]");
    if (std::abs(alpha + beta - 1.0) > 1e-12)
        throw ConfigError("guidance alpha + beta must equal 1");
}

StateActionKey make_key(const Step& step, const GuidanceParams& params,
                        const mmd::FeatureMap& g) {
    const std::vector<double>& src =
        params.key_on_state_only ? g.apply(step.obs) : step.obs;
    StateActionKey key;
    key.reserve(src.size() + 1);
    for (double v : src) {
        const double r = std::nearbyint(v);
        if (std::abs(v - r) > 1e-9)
            throw ConfigError("discrete guidance mode requires integral observations");
        key.push_back(static_cast<long long>(r));
    }
    if (!params.key_on_state_only) {
        if (step.action < 0)
            throw ConfigError("discrete guidance mode requires discrete actions");
        key.push_back(step.action);
    }
    return key;
}

WeightedBuffer compute_weights(std::vector<Trajectory> buffer, const DemoSet& demos,
                               const GuidanceParams& params,
                               const mmd::KernelSpec& kernel,
                               const mmd::FeatureMap& g, std::size_t max_points) {
    params.validate();
    if (buffer.empty()) throw ConfigError("compute_weights: empty rollout buffer");
    if (demos.size() == 0) throw ConfigError("compute_weights: empty demo set");

    const std::vector<mmd::PointSet> demo_feats = demo_feature_sets(demos, g);

    WeightedBuffer out;
    out.trajectories = std::move(buffer);
    out.distances.reserve(out.trajectories.size());

    for (Trajectory& traj : out.trajectories) {
        if (traj.features.size() == 0) {
            std::vector<std::vector<double>> obs;
            obs.reserve(traj.steps.size());
            for (const Step& s : traj.steps) obs.push_back(s.obs);
            traj.features = mmd::traj_features(obs, g);
        }
        out.distances.push_back(
            mmd::dist_to_demoset(traj.features, demo_feats, kernel, max_points));
    }

    double denom = params.epsilon;
    std::vector<double> numer(out.trajectories.size());
    for (std::size_t i = 0; i < out.trajectories.size(); ++i) {
        numer[i] = std::exp(-params.k_temp * out.distances[i].first);
        denom += numer[i];
    }
    out.weights.resize(numer.size());
    out.importance.resize(numer.size());
    for (std::size_t i = 0; i < numer.size(); ++i) {
        out.weights[i] = numer[i] / denom;
        const DemoTrajectory& nearest = demos[out.distances[i].second];
        out.importance[i] = trajectory_importance(
            out.weights[i], joint_return(out.trajectories[i], nearest, params));
    }
    return out;
}

double joint_return(const Trajectory& traj, const DemoTrajectory& nearest_demo,
                    const GuidanceParams& params) {
    return params.alpha * traj.return_ + params.beta * nearest_demo.return_;
}

double trajectory_importance(double weight, double joint_ret) {
    return weight * joint_ret;
}

void accumulate_discrete(ImportanceTable& table, const WeightedBuffer& buffer,
                         const GuidanceParams& params, const mmd::FeatureMap& g) {
    for (std::size_t i = 0; i < buffer.trajectories.size(); ++i) {
        std::set<StateActionKey> visited;
        for (const Step& step : buffer.trajectories[i].steps)
            visited.insert(make_key(step, params, g));
        for (const StateActionKey& key : visited)
            table.entries[key].push_back(buffer.importance[i]);
    }
}

DiscreteReward guidance_reward_discrete(const ImportanceTable& table,
                                        const StateActionKey& key) {
    auto it = table.entries.find(key);
    if (it == table.entries.end()) return {0.0, true};
    double sum = 0.0;
    for (double v : it->second) sum += v;
    return {sum / static_cast<double>(it->second.size()), false};
}

std::vector<std::vector<double>> guidance_rewards_continuous(const WeightedBuffer& buffer) {
    std::vector<std::vector<double>> out;
    out.reserve(buffer.trajectories.size());
    for (std::size_t i = 0; i < buffer.trajectories.size(); ++i) {
        const std::size_t len = buffer.trajectories[i].steps.size();
        out.emplace_back(len, buffer.importance[i] / static_cast<double>(len));
    }
    return out;
}

std::vector<std::vector<double>> guidance_rewards(const WeightedBuffer& buffer,
                                                  const GuidanceParams& params,
                                                  const mmd::FeatureMap& g) {
    if (params.mode == GuidanceMode::continuous_per_trajectory)
        return guidance_rewards_continuous(buffer);

    ImportanceTable table;
    accumulate_discrete(table, buffer, params, g);
    std::vector<std::vector<double>> out;
    out.reserve(buffer.trajectories.size());
    for (const Trajectory& traj : buffer.trajectories) {
        std::vector<double> rewards;
        rewards.reserve(traj.steps.size());
        for (const Step& step : traj.steps)
            rewards.push_back(
                guidance_reward_discrete(table, make_key(step, params, g)).value);
        out.push_back(std::move(rewards));
    }
    return out;
}

bool update_demoset(DemoSet& demos, const Trajectory& candidate) {
    DemoTrajectory demo;
    demo.return_ = candidate.return_;
    demo.observations.reserve(candidate.steps.size());
    for (const Step& step : candidate.steps) demo.observations.push_back(step.obs);
    return demos.insert_candidate(std::move(demo));
}

std::vector<mmd::PointSet> demo_feature_sets(const DemoSet& demos,
                                             const mmd::FeatureMap& g) {
    std::vector<mmd::PointSet> out;
    out.reserve(demos.size());
    for (const DemoTrajectory& d : demos.demos())
        out.push_back(mmd::traj_features(d.observations, g));
    return out;
}

} // namespace posg::guidance
