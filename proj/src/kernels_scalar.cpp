#include "posg/kernels.hpp"

#include <cmath>

// Reference lane. Plain loops, sequential accumulation order; this is the
// ground truth the AVX2 lane is tested against.

namespace posg::kernels::detail {

namespace {

double rbf_sum_scalar(const double* a, std::size_t na, const double* b,
                      std::size_t nb, std::size_t dim, double inv_two_sigma_sq) {
    double total = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        const double* ai = a + i * dim;
        for (std::size_t j = 0; j < nb; ++j) {
            const double* bj = b + j * dim;
            double d2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = ai[k] - bj[k];
                d2 += diff * diff;
            }
            total += std::exp(-d2 * inv_two_sigma_sq);
        }
    }
    return total;
}

void affine_scalar(const double* w, const double* bias, const double* x,
                   double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        double acc = bias[r];
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

void matvec_transpose_scalar(const double* w, const double* g, double* out,
                             std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) out[c] += gr * wr[c];
    }
}

void outer_accumulate_scalar(double* gw, const double* g, const double* x,
                             std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* gwr = gw + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) gwr[c] += gr * x[c];
    }
}

void adam_update_scalar(double* p, const double* g, double* m, double* v,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        rbf_sum_scalar,     affine_scalar, matvec_transpose_scalar,
        outer_accumulate_scalar, adam_update_scalar, dot_scalar,
    };
    return ops;
}

} // namespace posg::kernels::detail
