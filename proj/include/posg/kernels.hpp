#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops behind the numeric modules. Every primitive has a
// scalar reference implementation and an AVX2 variant; the active lane is
// picked once at startup from CPU features (override with force_lane() or the
// POSG_KERNEL_LANE environment variable, values "scalar"/"avx2").
//
// All lanes accumulate in a fixed order, so results are run-to-run identical
// for a given lane. Lanes agree with each other to ~1e-13 relative (summation
// order differs); the equivalence tests in tests/test_kernels.cpp pin that.

namespace posg::kernels {

enum class Lane { scalar, avx2 };

Lane active_lane();
void force_lane(Lane lane);   // throws std::runtime_error if unsupported
void reset_lane();            // back to auto-detection
bool lane_supported(Lane lane);
std::string lane_name(Lane lane);

// sum over all pairs (i, j) of exp(-||a_i - b_j||^2 * inv_two_sigma_sq);
// a is na x dim row-major, b is nb x dim row-major
double rbf_sum(const double* a, std::size_t na, const double* b, std::size_t nb,
               std::size_t dim, double inv_two_sigma_sq);

// y = W x + b with W rows x cols row-major
void affine(const double* w, const double* bias, const double* x, double* y,
            std::size_t rows, std::size_t cols);

// out = W^T g with W rows x cols row-major, g length rows, out length cols
void matvec_transpose(const double* w, const double* g, double* out,
                      std::size_t rows, std::size_t cols);

// GW += g x^T (rank-1 update), GW rows x cols row-major
void outer_accumulate(double* gw, const double* g, const double* x,
                      std::size_t rows, std::size_t cols);

// element-wise Adam: m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2;
// p -= lr * (m / bc1) / (sqrt(v / bc2) + eps)
void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bias_corr1, double bias_corr2);

double dot(const double* a, const double* b, std::size_t n);

namespace detail {

struct Ops {
    double (*rbf_sum)(const double*, std::size_t, const double*, std::size_t,
                      std::size_t, double);
    void (*affine)(const double*, const double*, const double*, double*,
                   std::size_t, std::size_t);
    void (*matvec_transpose)(const double*, const double*, double*, std::size_t,
                             std::size_t);
    void (*outer_accumulate)(double*, const double*, const double*, std::size_t,
                             std::size_t);
    void (*adam_update)(double*, const double*, double*, double*, std::size_t,
                        double, double, double, double, double, double);
    double (*dot)(const double*, const double*, std::size_t);
};

const Ops& scalar_ops();
const Ops& avx2_ops();

} // namespace detail

} // namespace posg::kernels
