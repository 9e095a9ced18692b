#include "posg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace posg::policy {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5 * ln(2*pi)
constexpr std::size_t kHidden = 64;                    // two layers of 64
constexpr char kLogStdTag[7] = {'L', 'O', 'G', 'S', 'T', 'D', '1'};
constexpr char kScaleTag[7] = {'O', 'B', 'S', 'S', 'C', 'L', '1'};
} // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> probs(logits.size());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

Policy Policy::make_categorical(std::size_t obs_dim, std::size_t n_actions,
                                std::vector<double> obs_scale, Rng& rng) {
    Policy p;
    p.kind_ = Kind::categorical;
    p.action_dim_ = n_actions;
    p.net_ = nn::make_mlp(obs_dim, {kHidden, kHidden}, n_actions, 0.01, rng);
    p.obs_scale_ = std::move(obs_scale);
    return p;
}

Policy Policy::make_gaussian(std::size_t obs_dim, std::size_t action_dim,
                             std::vector<double> obs_scale, Rng& rng) {
    Policy p;
    p.kind_ = Kind::gaussian;
    p.action_dim_ = action_dim;
    p.net_ = nn::make_mlp(obs_dim, {kHidden, kHidden}, action_dim, 0.01, rng);
    p.log_std_.assign(action_dim, std::log(0.5));
    p.obs_scale_ = std::move(obs_scale);
    return p;
}

std::vector<double> Policy::scaled(const std::vector<double>& obs) const {
    if (obs.size() != obs_scale_.size())
        throw std::invalid_argument("policy: observation dimension mismatch");
    std::vector<double> out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) out[i] = obs[i] * obs_scale_[i];
    return out;
}

Sample Policy::sample(const std::vector<double>& obs, Rng& rng) const {
    const std::vector<double> out = nn::forward(net_, scaled(obs));
    Sample s;
    if (kind_ == Kind::categorical) {
        const std::vector<double> probs = softmax(out);
        s.action = static_cast<int>(rng.categorical(probs));
        s.log_prob = std::log(probs[static_cast<std::size_t>(s.action)]);
    } else {
        s.action_vec.resize(action_dim_);
        s.log_prob = 0.0;
        for (std::size_t i = 0; i < action_dim_; ++i) {
            const double sigma = std::exp(log_std_[i]);
            const double z = rng.normal();
            s.action_vec[i] = out[i] + sigma * z;
            s.log_prob += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
        }
    }
    return s;
}

Sample Policy::greedy(const std::vector<double>& obs) const {
    const std::vector<double> out = nn::forward(net_, scaled(obs));
    Sample s;
    if (kind_ == Kind::categorical) {
        s.action = static_cast<int>(
            std::max_element(out.begin(), out.end()) - out.begin());
        s.log_prob = std::log(softmax(out)[static_cast<std::size_t>(s.action)]);
    } else {
        s.action_vec = out;
        for (std::size_t i = 0; i < action_dim_; ++i)
            s.log_prob += -log_std_[i] - kHalfLog2Pi;
    }
    return s;
}

double Policy::log_prob(const std::vector<double>& obs, const Sample& action) const {
    return evaluate(obs, action).log_prob;
}

Policy::Eval Policy::evaluate(const std::vector<double>& obs, const Sample& action) const {
    Eval ev;
    ev.net_out = nn::forward(net_, scaled(obs), &ev.cache);
    if (kind_ == Kind::categorical) {
        const std::vector<double> probs = softmax(ev.net_out);
        if (action.action < 0 || static_cast<std::size_t>(action.action) >= probs.size())
            throw std::invalid_argument("policy: action index out of range");
        ev.log_prob = std::log(probs[static_cast<std::size_t>(action.action)]);
        ev.entropy = 0.0;
        for (double p : probs)
            if (p > 0.0) ev.entropy -= p * std::log(p);
    } else {
        if (action.action_vec.size() != action_dim_)
            throw std::invalid_argument("policy: action dimension mismatch");
        ev.log_prob = 0.0;
        ev.entropy = 0.0;
        for (std::size_t i = 0; i < action_dim_; ++i) {
            const double sigma = std::exp(log_std_[i]);
            const double z = (action.action_vec[i] - ev.net_out[i]) / sigma;
            ev.log_prob += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
            ev.entropy += log_std_[i] + kHalfLog2Pi + 0.5;
        }
    }
    return ev;
}

void Policy::accumulate_grads(const Eval& ev, const Sample& action, double dlogp,
                              double dentropy, nn::NetGrads& net_grads,
                              std::vector<double>& log_std_grads) const {
    std::vector<double> dout(net_.output_dim(), 0.0);
    if (kind_ == Kind::categorical) {
        const std::vector<double> probs = softmax(ev.net_out);
        // d logp(a)/d logit_k = [a == k] - p_k
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double dlogp_k =
                (static_cast<int>(k) == action.action ? 1.0 : 0.0) - probs[k];
            // d H / d logit_k = -p_k (ln p_k + H)
            const double dent_k =
                probs[k] > 0.0 ? -probs[k] * (std::log(probs[k]) + ev.entropy) : 0.0;
            dout[k] = dlogp * dlogp_k + dentropy * dent_k;
        }
    } else {
        for (std::size_t i = 0; i < action_dim_; ++i) {
            const double sigma = std::exp(log_std_[i]);
            const double z = (action.action_vec[i] - ev.net_out[i]) / sigma;
            dout[i] = dlogp * (z / sigma);           // d logp / d mu
            log_std_grads[i] += dlogp * (z * z - 1.0) // d logp / d log-sigma
                                + dentropy;           // d H / d log-sigma = 1
        }
    }
    nn::backward(net_, ev.cache, dout, net_grads);
}

std::vector<nn::TensorView> Policy::param_tensors() {
    std::vector<nn::TensorView> out = nn::param_tensors(net_);
    if (kind_ == Kind::gaussian) out.push_back({log_std_.data(), log_std_.size()});
    return out;
}

namespace {

void write_block(std::ostream& out, const char (&tag)[7], const std::vector<double>& v) {
    out.write(tag, 7);
    const std::uint32_t n = static_cast<std::uint32_t>(v.size());
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * 8));
}

bool read_block(std::istream& in, const char (&tag)[7], std::vector<double>& v) {
    char got[7];
    in.read(got, 7);
    if (!in) return false;
    if (std::memcmp(got, tag, 7) != 0)
        throw std::runtime_error("policy file: unexpected section tag");
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 4);
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n) * 8);
    if (!in) throw std::runtime_error("policy file truncated");
    return true;
}

} // namespace

void Policy::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    nn::save_net(net_, out);
    if (kind_ == Kind::gaussian) write_block(out, kLogStdTag, log_std_);
    write_block(out, kScaleTag, obs_scale_);
}

Policy Policy::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    Policy p;
    p.net_ = nn::load_net(in);
    p.action_dim_ = p.net_.output_dim();
    // the next section is either the gaussian log-sigma block or the scale
    const auto pos = in.tellg();
    char tag[7];
    in.read(tag, 7);
    if (!in) throw std::runtime_error("policy file truncated");
    in.seekg(pos);
    if (std::memcmp(tag, kLogStdTag, 7) == 0) {
        p.kind_ = Kind::gaussian;
        read_block(in, kLogStdTag, p.log_std_);
    } else {
        p.kind_ = Kind::categorical;
    }
    read_block(in, kScaleTag, p.obs_scale_);
    return p;
}

} // namespace posg::policy
