// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// CPUID check.

#include "fbsde/kernels.hpp"

#include <immintrin.h>

namespace fbsde::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) sum += a[k] * b[k];
    return sum;
}

void gram_update_avx2(const double* rows, std::size_t n_rows, std::size_t p,
                      const double* targets, std::size_t n_rhs, double* gram, double* rhs) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double* a = rows + r * p;
        const double* y = targets + r * n_rhs;
        for (std::size_t i = 0; i < p; ++i) {
            const double ai = a[i];
            const __m256d vai = _mm256_set1_pd(ai);
            double* g = gram + i * p;
            std::size_t j = i;
            for (; j + 4 <= p; j += 4) {
                __m256d acc = _mm256_loadu_pd(g + j);
                acc = _mm256_fmadd_pd(vai, _mm256_loadu_pd(a + j), acc);
                _mm256_storeu_pd(g + j, acc);
            }
            for (; j < p; ++j) g[j] += ai * a[j];

            double* q = rhs + i * n_rhs;
            std::size_t c = 0;
            for (; c + 4 <= n_rhs; c += 4) {
                __m256d acc = _mm256_loadu_pd(q + c);
                acc = _mm256_fmadd_pd(vai, _mm256_loadu_pd(y + c), acc);
                _mm256_storeu_pd(q + c, acc);
            }
            for (; c < n_rhs; ++c) q[c] += ai * y[c];
        }
    }
}

// Vectorized across the `width` lanes of each block; every output lane is
// still summed in increasing k with plain adds, so the result matches the
// scalar kernel bit for bit.
void window_sum_avx2(const double* in, std::size_t n_out, std::size_t window,
                     std::size_t width, double* out) {
    if (width < 4) {
        detail::scalar_table.window_sum(in, n_out, window, width, out);
        return;
    }
    for (std::size_t i = 0; i < n_out; ++i) {
        double* o = out + i * width;
        const double* block = in + i * window * width;
        std::size_t c = 0;
        for (; c + 4 <= width; c += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t k = 0; k < window; ++k) {
                acc = _mm256_add_pd(acc, _mm256_loadu_pd(block + k * width + c));
            }
            _mm256_storeu_pd(o + c, acc);
        }
        for (; c < width; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < window; ++k) s += block[k * width + c];
            o[c] = s;
        }
    }
}

void sq_diff_accumulate_avx2(const double* a, const double* b, std::size_t n, double* acc) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        __m256d s = _mm256_add_pd(_mm256_loadu_pd(acc + k), _mm256_mul_pd(d, d));
        _mm256_storeu_pd(acc + k, s);
    }
    for (; k < n; ++k) {
        const double d = a[k] - b[k];
        acc[k] += d * d;
    }
}

}  // namespace

namespace detail {
const KernelTable avx2_table{
    Isa::avx2, "avx2", &dot_avx2, &gram_update_avx2, &window_sum_avx2, &sq_diff_accumulate_avx2,
};
}  // namespace detail

}  // namespace fbsde::kernels
