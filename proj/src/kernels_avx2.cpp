#include "posg/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define POSG_HAVE_AVX2_LANE 1
#else
#define POSG_HAVE_AVX2_LANE 0
#endif

// AVX2 lane: 4-wide f64 with FMA. exp() is the Cephes rational approximation
// (max error ~2 ulp), evaluated in-register; the scalar tail paths below use
// the same polynomial so a lane is internally consistent regardless of how the
// trip count splits into vector body and tail.

namespace posg::kernels::detail {

#if POSG_HAVE_AVX2_LANE

namespace {

constexpr double kExpP0 = 1.26177193074810590878e-4;
constexpr double kExpP1 = 3.02994407707441961300e-2;
constexpr double kExpP2 = 9.99999999999999999910e-1;
constexpr double kExpQ0 = 3.00198505138664455042e-6;
constexpr double kExpQ1 = 2.52448340349684104192e-3;
constexpr double kExpQ2 = 2.27265548208155028766e-1;
constexpr double kExpQ3 = 2.00000000000000000005e0;
constexpr double kLog2E = 1.4426950408889634073599;
constexpr double kLn2Hi = 6.93145751953125e-1;
constexpr double kLn2Lo = 1.42860682030941723212e-6;
constexpr double kExpUnderflow = -708.0;
constexpr double kExpOverflowClamp = 709.0;

double cephes_exp_scalar(double x) {
    if (x < kExpUnderflow) return 0.0;
    if (x > kExpOverflowClamp) x = kExpOverflowClamp;
    double px = std::floor(kLog2E * x + 0.5);
    const auto n = static_cast<std::int64_t>(px);
    x -= px * kLn2Hi;
    x -= px * kLn2Lo;
    const double xx = x * x;
    px = x * ((kExpP0 * xx + kExpP1) * xx + kExpP2);
    const double q = ((kExpQ0 * xx + kExpQ1) * xx + kExpQ2) * xx + kExpQ3;
    double e = 1.0 + 2.0 * px / (q - px);
    const std::uint64_t bits = static_cast<std::uint64_t>(n + 1023) << 52;
    double scale;
    static_assert(sizeof(scale) == sizeof(bits));
    __builtin_memcpy(&scale, &bits, sizeof(scale));
    return e * scale;
}

__attribute__((target("avx2,fma"))) inline __m256d exp4(__m256d x) {
    const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(kExpUnderflow), _CMP_LT_OQ);
    x = _mm256_min_pd(x, _mm256_set1_pd(kExpOverflowClamp));

    __m256d px = _mm256_floor_pd(
        _mm256_fmadd_pd(x, _mm256_set1_pd(kLog2E), _mm256_set1_pd(0.5)));
    x = _mm256_fnmadd_pd(px, _mm256_set1_pd(kLn2Hi), x);
    x = _mm256_fnmadd_pd(px, _mm256_set1_pd(kLn2Lo), x);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(kExpP0), xx, _mm256_set1_pd(kExpP1));
    p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(kExpP2));
    p = _mm256_mul_pd(p, x);
    __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(kExpQ0), xx, _mm256_set1_pd(kExpQ1));
    q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(kExpQ2));
    q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(kExpQ3));
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    // scale by 2^n through the exponent bits; n in [-1022, 1023] after clamping
    const __m128i n32 = _mm256_cvtpd_epi32(px);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
    n64 = _mm256_slli_epi64(n64, 52);
    e = _mm256_mul_pd(e, _mm256_castsi256_pd(n64));

    return _mm256_andnot_pd(underflow, e);
}

__attribute__((target("avx2,fma"))) inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

__attribute__((target("avx2,fma")))
double rbf_sum_avx2(const double* a, std::size_t na, const double* b,
                    std::size_t nb, std::size_t dim, double inv_two_sigma_sq) {
    // transpose b so four j-points per feature component load contiguously
    thread_local std::vector<double> bt;
    bt.resize(nb * dim);
    for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t k = 0; k < dim; ++k) bt[k * nb + j] = b[j * dim + k];

    const __m256d neg_scale = _mm256_set1_pd(-inv_two_sigma_sq);
    __m256d vtotal = _mm256_setzero_pd();
    double tail_total = 0.0;

    for (std::size_t i = 0; i < na; ++i) {
        const double* ai = a + i * dim;
        std::size_t j = 0;
        for (; j + 4 <= nb; j += 4) {
            __m256d d2 = _mm256_setzero_pd();
            for (std::size_t k = 0; k < dim; ++k) {
                const __m256d bj = _mm256_loadu_pd(bt.data() + k * nb + j);
                const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(ai[k]), bj);
                d2 = _mm256_fmadd_pd(diff, diff, d2);
            }
            vtotal = _mm256_add_pd(vtotal, exp4(_mm256_mul_pd(d2, neg_scale)));
        }
        for (; j < nb; ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = ai[k] - bt[k * nb + j];
                d2 += diff * diff;
            }
            tail_total += cephes_exp_scalar(-d2 * inv_two_sigma_sq);
        }
    }
    return hsum(vtotal) + tail_total;
}

__attribute__((target("avx2,fma")))
void affine_avx2(const double* w, const double* bias, const double* x,
                 double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 8 <= cols; c += 8) {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(wr + c), _mm256_loadu_pd(x + c), acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(wr + c + 4), _mm256_loadu_pd(x + c + 4), acc1);
        }
        for (; c + 4 <= cols; c += 4) {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(wr + c), _mm256_loadu_pd(x + c), acc0);
        }
        double acc = bias[r] + hsum(_mm256_add_pd(acc0, acc1));
        for (; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

__attribute__((target("avx2,fma")))
void matvec_transpose_avx2(const double* w, const double* g, double* out,
                           std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const __m256d gr = _mm256_set1_pd(g[r]);
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d o = _mm256_loadu_pd(out + c);
            _mm256_storeu_pd(out + c, _mm256_fmadd_pd(gr, _mm256_loadu_pd(wr + c), o));
        }
        for (; c < cols; ++c) out[c] += g[r] * wr[c];
    }
}

__attribute__((target("avx2,fma")))
void outer_accumulate_avx2(double* gw, const double* g, const double* x,
                           std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* gwr = gw + r * cols;
        const __m256d gr = _mm256_set1_pd(g[r]);
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d acc = _mm256_loadu_pd(gwr + c);
            _mm256_storeu_pd(gwr + c, _mm256_fmadd_pd(gr, _mm256_loadu_pd(x + c), acc));
        }
        for (; c < cols; ++c) gwr[c] += g[r] * x[c];
    }
}

__attribute__((target("avx2,fma")))
void adam_update_avx2(double* p, const double* g, double* m, double* v,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vibc1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d vibc2 = _mm256_set1_pd(1.0 / bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_fmadd_pd(vb1, mi, _mm256_mul_pd(vb1c, gi));
        vi = _mm256_fmadd_pd(vb2, vi, _mm256_mul_pd(vb2c, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_mul_pd(mi, vibc1);
        const __m256d vhat = _mm256_mul_pd(vi, vibc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d pi = _mm256_loadu_pd(p + i);
        _mm256_storeu_pd(p + i,
                         _mm256_sub_pd(pi, _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom)));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

__attribute__((target("avx2,fma")))
double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

} // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        rbf_sum_avx2,     affine_avx2, matvec_transpose_avx2,
        outer_accumulate_avx2, adam_update_avx2, dot_avx2,
    };
    return ops;
}

#else // !POSG_HAVE_AVX2_LANE

const Ops& avx2_ops() { return scalar_ops(); }

#endif

} // namespace posg::kernels::detail
