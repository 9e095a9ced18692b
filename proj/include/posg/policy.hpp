#pragma once

#include "posg/net.hpp"
#include "posg/rng.hpp"

#include <string>
#include <vector>

namespace posg::policy {

enum class Kind { categorical, gaussian };

struct Sample {
    int action = -1;                // categorical
    std::vector<double> action_vec; // gaussian
    double log_prob = 0.0;
};

// Policy head over a DenseNet. Categorical reads logits off the net output;
// gaussian reads the mean, with a standalone learned log-sigma vector
// (initialized to ln 0.5). Observations are scaled component-wise before the
// net sees them; everything outside works with raw observations.
class Policy {
public:
    static Policy make_categorical(std::size_t obs_dim, std::size_t n_actions,
                                   std::vector<double> obs_scale, Rng& rng);
    static Policy make_gaussian(std::size_t obs_dim, std::size_t action_dim,
                                std::vector<double> obs_scale, Rng& rng);

    Kind kind() const { return kind_; }
    std::size_t action_dim() const { return action_dim_; }

    Sample sample(const std::vector<double>& obs, Rng& rng) const;
    Sample greedy(const std::vector<double>& obs) const; // argmax / mean action

    double log_prob(const std::vector<double>& obs, const Sample& action) const;

    // Evaluation pass for updates: caches the forward pass, reports log-prob
    // and entropy, and turns d(objective)/d(log_prob) + entropy coefficient
    // into parameter gradients (accumulated into grads / log-sigma grads).
    struct Eval {
        nn::ForwardCache cache;
        std::vector<double> net_out;
        double log_prob = 0.0;
        double entropy = 0.0;
    };
    Eval evaluate(const std::vector<double>& obs, const Sample& action) const;
    void accumulate_grads(const Eval& eval, const Sample& action, double dlogp,
                          double dentropy, nn::NetGrads& net_grads,
                          std::vector<double>& log_std_grads) const;

    nn::DenseNet& net() { return net_; }
    const nn::DenseNet& net() const { return net_; }
    std::vector<double>& log_std() { return log_std_; }
    const std::vector<double>& log_std() const { return log_std_; }
    const std::vector<double>& obs_scale() const { return obs_scale_; }

    // parameters the optimizer walks: net tensors plus log-sigma for gaussian
    std::vector<nn::TensorView> param_tensors();

    void save(const std::string& path) const;
    static Policy load(const std::string& path);

private:
    Policy() = default;

    std::vector<double> scaled(const std::vector<double>& obs) const;

    Kind kind_ = Kind::categorical;
    std::size_t action_dim_ = 0;
    nn::DenseNet net_;
    std::vector<double> log_std_;   // gaussian only
    std::vector<double> obs_scale_;
};

std::vector<double> softmax(const std::vector<double>& logits);

} // namespace posg::policy
