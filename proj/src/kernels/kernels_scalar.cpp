#include "fbsde/kernels.hpp"

namespace fbsde::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += a[k] * b[k];
    return sum;
}

void gram_update_scalar(const double* rows, std::size_t n_rows, std::size_t p,
                        const double* targets, std::size_t n_rhs, double* gram, double* rhs) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double* a = rows + r * p;
        const double* y = targets + r * n_rhs;
        for (std::size_t i = 0; i < p; ++i) {
            const double ai = a[i];
            double* g = gram + i * p;
            for (std::size_t j = i; j < p; ++j) g[j] += ai * a[j];
            double* q = rhs + i * n_rhs;
            for (std::size_t c = 0; c < n_rhs; ++c) q[c] += ai * y[c];
        }
    }
}

void window_sum_scalar(const double* in, std::size_t n_out, std::size_t window,
                       std::size_t width, double* out) {
    for (std::size_t i = 0; i < n_out; ++i) {
        double* o = out + i * width;
        for (std::size_t c = 0; c < width; ++c) o[c] = 0.0;
        const double* block = in + i * window * width;
        for (std::size_t k = 0; k < window; ++k) {
            const double* src = block + k * width;
            for (std::size_t c = 0; c < width; ++c) o[c] += src[c];
        }
    }
}

void sq_diff_accumulate_scalar(const double* a, const double* b, std::size_t n, double* acc) {
    for (std::size_t k = 0; k < n; ++k) {
        const double d = a[k] - b[k];
        acc[k] += d * d;
    }
}

}  // namespace

namespace detail {
const KernelTable scalar_table{
    Isa::scalar, "scalar", &dot_scalar, &gram_update_scalar, &window_sum_scalar,
    &sq_diff_accumulate_scalar,
};
}  // namespace detail

}  // namespace fbsde::kernels
