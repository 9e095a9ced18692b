#include "posg/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace posg::ppo {

void PpoConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw guidance::ConfigError("gamma must be in (0, 1]");
    if (gae_lambda < 0.0 || gae_lambda > 1.0)
        throw guidance::ConfigError("gae_lambda must be in [0, 1]");
    if (!(clip_ratio > 0.0)) throw guidance::ConfigError("clip_ratio must be positive");
    if (epochs_per_update <= 0) throw guidance::ConfigError("epochs_per_update must be positive");
    if (minibatch_size <= 0) throw guidance::ConfigError("minibatch_size must be positive");
    if (!(learning_rate > 0.0)) throw guidance::ConfigError("learning_rate must be positive");
    if (entropy_coef < 0.0 || value_coef < 0.0)
        throw guidance::ConfigError("entropy/value coefficients must be non-negative");
    if (update_frequency <= 0) throw guidance::ConfigError("update_frequency must be positive");
    if (!(guidance_gamma > 0.0 && guidance_gamma <= 1.0))
        throw guidance::ConfigError("guidance_gamma must be in (0, 1]");
}

std::vector<guidance::Trajectory> collect_rollouts(envs::Env& env,
                                                   const policy::Policy& pol,
                                                   int episodes, std::uint64_t seed) {
    if (episodes <= 0) throw guidance::ConfigError("episodes must be positive");
    std::vector<guidance::Trajectory> out;
    out.reserve(static_cast<std::size_t>(episodes));
    for (int ep = 0; ep < episodes; ++ep) {
        try {
            const std::uint64_t ep_seed = mix_seed(seed, static_cast<std::uint64_t>(ep));
            Rng rng(ep_seed);
            guidance::Trajectory traj;
            std::vector<double> obs = env.reset(ep_seed);
            while (true) {
                const policy::Sample s = pol.sample(obs, rng);
                const envs::StepResult res = env.discrete_actions()
                                                 ? env.step_discrete(s.action)
                                                 : env.step_continuous(s.action_vec);
                traj.steps.push_back({obs, s.action, s.action_vec, res.reward});
                traj.return_ += res.reward;
                obs = res.obs;
                if (res.done) {
                    traj.final_obs = res.obs;
                    traj.terminal = res.terminal;
                    break;
                }
            }
            out.push_back(std::move(traj));
        } catch (const std::exception& e) {
            throw std::runtime_error("rollout episode " + std::to_string(ep) + ": " +
                                     e.what());
        }
    }
    return out;
}

GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values, double bootstrap_value,
                      double gamma, double gae_lambda) {
    if (rewards.size() != values.size())
        throw std::invalid_argument("compute_gae: length mismatch");
    const std::size_t n = rewards.size();
    GaeResult res;
    res.advantages.resize(n);
    res.returns.resize(n);
    double next_value = bootstrap_value;
    double next_adv = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * gae_lambda * next_adv;
        res.advantages[t] = next_adv;
        res.returns[t] = next_adv + values[t];
        next_value = values[t];
    }
    return res;
}

GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones, double gamma,
                      double gae_lambda) {
    if (rewards.size() != values.size() || rewards.size() != dones.size())
        throw std::invalid_argument("compute_gae: length mismatch");
    GaeResult out;
    out.advantages.resize(rewards.size());
    out.returns.resize(rewards.size());
    std::size_t seg_start = 0;
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        if (dones[t] || t + 1 == rewards.size()) {
            const std::size_t len = t - seg_start + 1;
            std::vector<double> r(rewards.begin() + seg_start, rewards.begin() + seg_start + len);
            std::vector<double> v(values.begin() + seg_start, values.begin() + seg_start + len);
            const GaeResult seg = compute_gae(r, v, 0.0, gamma, gae_lambda);
            std::copy(seg.advantages.begin(), seg.advantages.end(),
                      out.advantages.begin() + seg_start);
            std::copy(seg.returns.begin(), seg.returns.end(), out.returns.begin() + seg_start);
            seg_start = t + 1;
        }
    }
    return out;
}

std::vector<double> standardize(const std::vector<double>& v) {
    if (v.empty()) return {};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double denom = std::sqrt(var) + 1e-8;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / denom;
    return out;
}

namespace {

std::vector<double> scale_obs(const std::vector<double>& obs,
                              const std::vector<double>& scale) {
    std::vector<double> out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) out[i] = obs[i] * scale[i];
    return out;
}

double value_of(const nn::DenseNet& net, const std::vector<double>& obs,
                const std::vector<double>& scale, nn::ForwardCache* cache = nullptr) {
    return nn::forward(net, scale_obs(obs, scale), cache)[0];
}

policy::Sample sample_of(const guidance::Step& step) {
    policy::Sample s;
    s.action = step.action;
    s.action_vec = step.action_vec;
    return s;
}

} // namespace

UpdateStats ppo_update(policy::Policy& pol, nn::AdamState& pol_opt,
                       nn::DenseNet& value_net, nn::AdamState& value_opt,
                       const RolloutBatch& batch,
                       const std::vector<double>& advantages,
                       const std::vector<double>& value_targets,
                       const PpoConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t n = batch.index.size();
    if (advantages.size() != n || value_targets.size() != n)
        throw std::invalid_argument("ppo_update: advantage/target length mismatch");
    if (n == 0) throw std::invalid_argument("ppo_update: empty batch");

    const std::vector<double>& scale = pol.obs_scale();
    nn::NetGrads pol_grads, val_grads;
    pol_grads.init_like(pol.net());
    val_grads.init_like(value_net);
    std::vector<double> log_std_grads(pol.log_std().size(), 0.0);

    auto pol_params = pol.param_tensors();
    auto val_params = nn::param_tensors(value_net);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    UpdateStats stats;
    std::size_t visits = 0;

    for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
            const double mbn = static_cast<double>(end - start);

            pol_grads.zero();
            val_grads.zero();
            std::fill(log_std_grads.begin(), log_std_grads.end(), 0.0);

            for (std::size_t k = start; k < end; ++k) {
                const std::size_t idx = order[k];
                const auto [ti, si] = batch.index[idx];
                const guidance::Step& step = (*batch.trajectories)[ti].steps[si];
                const policy::Sample action = sample_of(step);

                const policy::Policy::Eval ev = pol.evaluate(step.obs, action);
                const double ratio = std::exp(ev.log_prob - batch.log_prob_old[idx]);
                const double adv = advantages[idx];
                const double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio,
                                                  1.0 + cfg.clip_ratio);
                const double surr = std::min(ratio * adv, clipped * adv);
                const bool clipped_off = (adv > 0.0 && ratio > 1.0 + cfg.clip_ratio) ||
                                         (adv < 0.0 && ratio < 1.0 - cfg.clip_ratio);
                if (!std::isfinite(surr))
                    throw std::runtime_error("ppo_update: non-finite surrogate");

                // gradients of the negated objective (Adam minimizes)
                const double dlogp = clipped_off ? 0.0 : -(ratio * adv) / mbn;
                const double dent = -cfg.entropy_coef / mbn;
                pol.accumulate_grads(ev, action, dlogp, dent, pol_grads, log_std_grads);

                nn::ForwardCache vcache;
                const double v = value_of(value_net, step.obs, scale, &vcache);
                const double verr = v - value_targets[idx];
                nn::backward(value_net, vcache, {cfg.value_coef * 2.0 * verr / mbn},
                             val_grads);

                stats.surrogate += surr;
                stats.value_loss += verr * verr;
                stats.kl += batch.log_prob_old[idx] - ev.log_prob;
                stats.clip_fraction += std::abs(ratio - 1.0) > cfg.clip_ratio ? 1.0 : 0.0;
                ++visits;
            }

            auto pol_grad_views = nn::grad_tensors(pol_grads);
            if (!log_std_grads.empty())
                pol_grad_views.push_back({log_std_grads.data(), log_std_grads.size()});
            pol_opt.step(pol_params, pol_grad_views);
            value_opt.step(val_params, nn::grad_tensors(val_grads));
        }
    }

    const double inv = 1.0 / static_cast<double>(visits);
    stats.surrogate *= inv;
    stats.value_loss *= inv;
    stats.kl *= inv;
    stats.clip_fraction *= inv;
    return stats;
}

Agent make_agent(const envs::Env& env, const PpoConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng pol_rng(mix_seed(seed, 1));
    Rng venv_rng(mix_seed(seed, 2));
    Rng vgid_rng(mix_seed(seed, 3));

    Agent agent{
        env.discrete_actions()
            ? policy::Policy::make_categorical(env.obs_dim(), env.action_count(),
                                               env.obs_scale(), pol_rng)
            : policy::Policy::make_gaussian(env.obs_dim(), env.action_dim(),
                                            env.obs_scale(), pol_rng),
        {},
        nn::make_mlp(env.obs_dim(), {64, 64}, 1, 1.0, venv_rng),
        {},
        nn::make_mlp(env.obs_dim(), {64, 64}, 1, 1.0, vgid_rng),
        {},
    };
    const nn::AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
    agent.pol_opt = nn::AdamState(agent.pol.param_tensors(), adam);
    auto venv_params = nn::param_tensors(agent.value_env);
    agent.value_env_opt = nn::AdamState(venv_params, adam);
    auto vgid_params = nn::param_tensors(agent.value_gid);
    agent.value_gid_opt = nn::AdamState(vgid_params, adam);
    return agent;
}

IterationMetrics posg_iteration(envs::Env& env, Agent& agent,
                                guidance::DemoSet& demos,
                                const IterationConfig& cfg, Rng& run_rng) {
    cfg.ppo.validate();
    IterationMetrics metrics;

    std::vector<guidance::Trajectory> trajs =
        collect_rollouts(env, agent.pol, cfg.ppo.update_frequency, run_rng.next_u64());

    for (const guidance::Trajectory& t : trajs) {
        metrics.success_rate += t.terminal ? 1.0 : 0.0;
        metrics.mean_return += t.return_;
    }
    metrics.success_rate /= static_cast<double>(trajs.size());
    metrics.mean_return /= static_cast<double>(trajs.size());

    // distances to the demo memory (also the mean-MMD metric for plain PPO)
    guidance::WeightedBuffer buffer =
        guidance::compute_weights(std::move(trajs), demos, cfg.guidance, cfg.kernel,
                                  cfg.feature_map, cfg.max_points);
    for (const auto& d : buffer.distances) metrics.mean_mmd += d.first;
    metrics.mean_mmd /= static_cast<double>(buffer.distances.size());

    // flatten the rollout batch; log-probs and values snapshot the pre-update nets
    RolloutBatch batch;
    batch.trajectories = &buffer.trajectories;
    std::vector<double> env_values, gid_values;
    for (std::size_t ti = 0; ti < buffer.trajectories.size(); ++ti) {
        const guidance::Trajectory& traj = buffer.trajectories[ti];
        for (std::size_t si = 0; si < traj.steps.size(); ++si) {
            batch.index.emplace_back(ti, si);
            batch.log_prob_old.push_back(
                agent.pol.evaluate(traj.steps[si].obs, sample_of(traj.steps[si])).log_prob);
        }
    }
    const std::vector<double>& scale = agent.pol.obs_scale();
    env_values.reserve(batch.index.size());
    for (const auto& [ti, si] : batch.index)
        env_values.push_back(
            value_of(agent.value_env, buffer.trajectories[ti].steps[si].obs, scale));

    const bool guided = cfg.guidance.enabled;

    // guidance rewards, standardized over the batch before advantage estimation
    std::vector<std::vector<double>> gid_rewards;
    bool all_zero = true;
    if (guided) {
        gid_rewards = guidance::guidance_rewards(buffer, cfg.guidance, cfg.feature_map);
        for (const auto& per_traj : gid_rewards)
            for (double r : per_traj)
                if (r != 0.0) all_zero = false;
        if (!all_zero) {
            std::vector<double> flat;
            for (const auto& per_traj : gid_rewards)
                flat.insert(flat.end(), per_traj.begin(), per_traj.end());
            flat = standardize(flat);
            std::size_t pos = 0;
            for (auto& per_traj : gid_rewards)
                for (double& r : per_traj) r = flat[pos++];
            gid_values.reserve(batch.index.size());
            for (const auto& [ti, si] : batch.index)
                gid_values.push_back(
                    value_of(agent.value_gid, buffer.trajectories[ti].steps[si].obs, scale));
        }
    }

    // both advantage sets come from the same pre-update rollout batch
    std::vector<double> adv_env, ret_env, adv_gid, ret_gid;
    std::size_t offset = 0;
    for (std::size_t ti = 0; ti < buffer.trajectories.size(); ++ti) {
        const guidance::Trajectory& traj = buffer.trajectories[ti];
        const std::size_t len = traj.steps.size();
        std::vector<double> rewards(len), values(len);
        for (std::size_t si = 0; si < len; ++si) {
            rewards[si] = traj.steps[si].env_reward;
            values[si] = env_values[offset + si];
        }
        const double env_boot =
            traj.terminal ? 0.0 : value_of(agent.value_env, traj.final_obs, scale);
        const GaeResult env_gae =
            compute_gae(rewards, values, env_boot, cfg.ppo.gamma, cfg.ppo.gae_lambda);
        adv_env.insert(adv_env.end(), env_gae.advantages.begin(), env_gae.advantages.end());
        ret_env.insert(ret_env.end(), env_gae.returns.begin(), env_gae.returns.end());

        if (guided && !all_zero) {
            std::vector<double> gvals(len);
            for (std::size_t si = 0; si < len; ++si) gvals[si] = gid_values[offset + si];
            const double gid_boot =
                traj.terminal ? 0.0 : value_of(agent.value_gid, traj.final_obs, scale);
            const GaeResult gid_gae = compute_gae(gid_rewards[ti], gvals, gid_boot,
                                                  cfg.ppo.guidance_gamma, cfg.ppo.gae_lambda);
            adv_gid.insert(adv_gid.end(), gid_gae.advantages.begin(), gid_gae.advantages.end());
            ret_gid.insert(ret_gid.end(), gid_gae.returns.begin(), gid_gae.returns.end());
        }
        offset += len;
    }

    // step one: environmental rewards
    metrics.env_update = ppo_update(agent.pol, agent.pol_opt, agent.value_env,
                                    agent.value_env_opt, batch, standardize(adv_env),
                                    ret_env, cfg.ppo, run_rng);

    // step two: guidance rewards (skipped when disabled or identically zero)
    if (guided && !all_zero) {
        metrics.guidance_update =
            ppo_update(agent.pol, agent.pol_opt, agent.value_gid, agent.value_gid_opt,
                       batch, standardize(adv_gid), ret_gid, cfg.ppo, run_rng);
        metrics.guidance_step_ran = true;
    }

    // offer improving trajectories to the demo memory, in rollout order
    if (guided) {
        for (const guidance::Trajectory& traj : buffer.trajectories) {
            if (traj.return_ > demos.min_return()) guidance::update_demoset(demos, traj);
        }
    }

    return metrics;
}

} // namespace posg::ppo
