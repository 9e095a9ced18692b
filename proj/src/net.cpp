#include "posg/net.hpp"

#include "posg/kernels.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace posg::nn {

namespace {
constexpr char kMagic[7] = {'P', 'O', 'S', 'G', 'N', 'N', '1'};
}

DenseNet make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                  std::size_t output_dim, double final_scale, Rng& rng) {
    DenseNet net;
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);

    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.act = (l + 2 == dims.size()) ? Activation::identity : Activation::tanh_fn;
        layer.w.resize(layer.out * layer.in);
        layer.b.assign(layer.out, 0.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        const double scale = (l + 2 == dims.size()) ? final_scale : 1.0;
        for (double& w : layer.w) w = scale * rng.uniform(-limit, limit);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::vector<double> forward(const DenseNet& net, const std::vector<double>& input,
                            ForwardCache* cache) {
    if (input.size() != net.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(input);
    }
    std::vector<double> cur = input;
    std::vector<double> next;
    for (const Layer& layer : net.layers) {
        next.resize(layer.out);
        kernels::affine(layer.w.data(), layer.b.data(), cur.data(), next.data(),
                        layer.out, layer.in);
        if (layer.act == Activation::tanh_fn) {
            for (double& v : next) v = std::tanh(v);
        }
        cur = next;
        if (cache) cache->activations.push_back(cur);
    }
    return cur;
}

void NetGrads::init_like(const DenseNet& net) {
    w.clear();
    b.clear();
    for (const Layer& layer : net.layers) {
        w.emplace_back(layer.w.size(), 0.0);
        b.emplace_back(layer.b.size(), 0.0);
    }
}

void NetGrads::zero() {
    for (auto& t : w) std::fill(t.begin(), t.end(), 0.0);
    for (auto& t : b) std::fill(t.begin(), t.end(), 0.0);
}

void NetGrads::scale(double s) {
    for (auto& t : w)
        for (double& v : t) v *= s;
    for (auto& t : b)
        for (double& v : t) v *= s;
}

void backward(const DenseNet& net, const ForwardCache& cache,
              const std::vector<double>& output_grad, NetGrads& grads,
              std::vector<double>* input_grad) {
    const std::size_t n_layers = net.layers.size();
    if (cache.activations.size() != n_layers + 1)
        throw std::invalid_argument("backward: cache does not match net");
    if (output_grad.size() != net.output_dim())
        throw std::invalid_argument("backward: output gradient shape mismatch");

    std::vector<double> delta = output_grad;
    std::vector<double> prev_delta;
    for (std::size_t li = n_layers; li-- > 0;) {
        const Layer& layer = net.layers[li];
        const std::vector<double>& act_out = cache.activations[li + 1];
        const std::vector<double>& act_in = cache.activations[li];

        // d pre-activation: tanh'(z) = 1 - a^2 on the cached post-activation
        if (layer.act == Activation::tanh_fn) {
            for (std::size_t r = 0; r < layer.out; ++r)
                delta[r] *= 1.0 - act_out[r] * act_out[r];
        }
        kernels::outer_accumulate(grads.w[li].data(), delta.data(), act_in.data(),
                                  layer.out, layer.in);
        for (std::size_t r = 0; r < layer.out; ++r) grads.b[li][r] += delta[r];

        if (li > 0 || input_grad) {
            prev_delta.resize(layer.in);
            kernels::matvec_transpose(layer.w.data(), delta.data(), prev_delta.data(),
                                      layer.out, layer.in);
            delta = prev_delta;
        }
    }
    if (input_grad) *input_grad = delta;
}

std::vector<TensorView> param_tensors(DenseNet& net) {
    std::vector<TensorView> out;
    for (Layer& layer : net.layers) {
        out.push_back({layer.w.data(), layer.w.size()});
        out.push_back({layer.b.data(), layer.b.size()});
    }
    return out;
}

std::vector<TensorView> grad_tensors(NetGrads& grads) {
    std::vector<TensorView> out;
    for (std::size_t i = 0; i < grads.w.size(); ++i) {
        out.push_back({grads.w[i].data(), grads.w[i].size()});
        out.push_back({grads.b[i].data(), grads.b[i].size()});
    }
    return out;
}

AdamState::AdamState(const std::vector<TensorView>& params, const AdamConfig& cfg)
    : cfg_(cfg) {
    for (const TensorView& p : params) {
        m_.emplace_back(p.size, 0.0);
        v_.emplace_back(p.size, 0.0);
    }
}

void AdamState::step(const std::vector<TensorView>& params,
                     const std::vector<TensorView>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("adam: tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size != m_[i].size() || grads[i].size != m_[i].size())
            throw std::invalid_argument("adam: tensor shape mismatch");
        for (std::size_t k = 0; k < grads[i].size; ++k) {
            if (!std::isfinite(grads[i].data[k]))
                throw std::runtime_error("adam: non-finite gradient (numerical divergence)");
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        kernels::adam_update(params[i].data, grads[i].data, m_[i].data(), v_[i].data(),
                             params[i].size, cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps,
                             bc1, bc2);
        for (std::size_t k = 0; k < params[i].size; ++k) {
            if (!std::isfinite(params[i].data[k]))
                throw std::runtime_error("adam: parameter became non-finite");
        }
    }
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw std::runtime_error("net file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& out, const double* data, std::size_t n) {
    // assumes little-endian host, as does the rest of this file format
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
}

void read_f64(std::istream& in, double* data, std::size_t n) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 8));
    if (!in) throw std::runtime_error("net file truncated");
}

} // namespace

void save_net(const DenseNet& net, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& layer : net.layers) {
        write_u32(out, static_cast<std::uint32_t>(layer.out));
        write_u32(out, static_cast<std::uint32_t>(layer.in));
        write_u32(out, layer.act == Activation::tanh_fn ? 1u : 0u);
    }
    for (const Layer& layer : net.layers) {
        write_f64(out, layer.w.data(), layer.w.size());
        write_f64(out, layer.b.data(), layer.b.size());
    }
}

DenseNet load_net(std::istream& in) {
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a POSGNN1 parameter file");
    const std::uint32_t n_layers = read_u32(in);
    DenseNet net;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        Layer layer;
        layer.out = read_u32(in);
        layer.in = read_u32(in);
        layer.act = read_u32(in) == 1u ? Activation::tanh_fn : Activation::identity;
        layer.w.resize(layer.out * layer.in);
        layer.b.resize(layer.out);
        net.layers.push_back(std::move(layer));
    }
    for (Layer& layer : net.layers) {
        read_f64(in, layer.w.data(), layer.w.size());
        read_f64(in, layer.b.data(), layer.b.size());
    }
    return net;
}

void save_net(const DenseNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    save_net(net, out);
}

DenseNet load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    return load_net(in);
}

bool all_finite(const DenseNet& net) {
    for (const Layer& layer : net.layers) {
        for (double v : layer.w)
            if (!std::isfinite(v)) return false;
        for (double v : layer.b)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace posg::nn
