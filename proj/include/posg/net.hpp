#pragma once

#include "posg/rng.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace posg::nn {

enum class Activation { tanh_fn, identity };

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w; // out x in, row-major
    std::vector<double> b;
    Activation act = Activation::identity;
};

struct DenseNet {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.front().in; }
    std::size_t output_dim() const { return layers.back().out; }
};

// Xavier-uniform weights for tanh layers, zero biases; the final layer is
// scaled by final_scale (0.01 for policy heads keeps the initial policy near
// uniform / near zero-mean).
DenseNet make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                  std::size_t output_dim, double final_scale, Rng& rng);

struct ForwardCache {
    // activations[0] is the input; activations[i] the post-activation output
    // of layer i-1
    std::vector<std::vector<double>> activations;
};

std::vector<double> forward(const DenseNet& net, const std::vector<double>& input,
                            ForwardCache* cache = nullptr);

struct NetGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    void init_like(const DenseNet& net);
    void zero();
    void scale(double s);
};

// Reverse-mode gradients for the cached forward pass; accumulates into grads.
// Returns nothing; pass input_grad to also get dL/dinput.
void backward(const DenseNet& net, const ForwardCache& cache,
              const std::vector<double>& output_grad, NetGrads& grads,
              std::vector<double>* input_grad = nullptr);

// Parameter tensors viewed as flat spans, used by the Adam state below.
struct TensorView {
    double* data;
    std::size_t size;
};
std::vector<TensorView> param_tensors(DenseNet& net);
std::vector<TensorView> grad_tensors(NetGrads& grads);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamState {
public:
    AdamState() = default;
    AdamState(const std::vector<TensorView>& params, const AdamConfig& cfg);

    // throws std::runtime_error on non-finite gradients or parameters
    void step(const std::vector<TensorView>& params,
              const std::vector<TensorView>& grads);

    long step_count() const { return t_; }
    AdamConfig& config() { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

// Flat binary file: magic "POSGNN1", layer count, per-layer dims and
// activation tag, then row-major little-endian f64 weights and biases.
void save_net(const DenseNet& net, std::ostream& out);
DenseNet load_net(std::istream& in);
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

bool all_finite(const DenseNet& net);

} // namespace posg::nn
