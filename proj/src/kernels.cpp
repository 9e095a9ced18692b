#include "posg/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace posg::kernels {

namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Lane detect_lane() {
    if (const char* env = std::getenv("POSG_KERNEL_LANE")) {
        const std::string v(env);
        if (v == "scalar") return Lane::scalar;
        if (v == "avx2") {
            if (!cpu_has_avx2())
                throw std::runtime_error("POSG_KERNEL_LANE=avx2 but CPU lacks avx2/fma");
            return Lane::avx2;
        }
        throw std::runtime_error("unknown POSG_KERNEL_LANE value: " + v);
    }
    return cpu_has_avx2() ? Lane::avx2 : Lane::scalar;
}

struct LaneState {
    Lane lane;
    const detail::Ops* ops;
};

LaneState& state() {
    static LaneState s = [] {
        const Lane l = detect_lane();
        return LaneState{l, l == Lane::avx2 ? &detail::avx2_ops() : &detail::scalar_ops()};
    }();
    return s;
}

} // namespace

Lane active_lane() { return state().lane; }

bool lane_supported(Lane lane) {
    return lane == Lane::scalar || cpu_has_avx2();
}

void force_lane(Lane lane) {
    if (!lane_supported(lane))
        throw std::runtime_error("kernel lane not supported on this CPU: " + lane_name(lane));
    state().lane = lane;
    state().ops = lane == Lane::avx2 ? &detail::avx2_ops() : &detail::scalar_ops();
}

void reset_lane() {
    const Lane l = detect_lane();
    state().lane = l;
    state().ops = l == Lane::avx2 ? &detail::avx2_ops() : &detail::scalar_ops();
}

std::string lane_name(Lane lane) {
    return lane == Lane::avx2 ? "avx2" : "scalar";
}

double rbf_sum(const double* a, std::size_t na, const double* b, std::size_t nb,
               std::size_t dim, double inv_two_sigma_sq) {
    return state().ops->rbf_sum(a, na, b, nb, dim, inv_two_sigma_sq);
}

void affine(const double* w, const double* bias, const double* x, double* y,
            std::size_t rows, std::size_t cols) {
    state().ops->affine(w, bias, x, y, rows, cols);
}

void matvec_transpose(const double* w, const double* g, double* out,
                      std::size_t rows, std::size_t cols) {
    state().ops->matvec_transpose(w, g, out, rows, cols);
}

void outer_accumulate(double* gw, const double* g, const double* x,
                      std::size_t rows, std::size_t cols) {
    state().ops->outer_accumulate(gw, g, x, rows, cols);
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bias_corr1, double bias_corr2) {
    state().ops->adam_update(p, g, m, v, n, lr, beta1, beta2, eps, bias_corr1,
                             bias_corr2);
}

double dot(const double* a, const double* b, std::size_t n) {
    return state().ops->dot(a, b, n);
}

} // namespace posg::kernels
