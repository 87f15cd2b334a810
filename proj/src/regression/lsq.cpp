#include "fbsde/error.hpp"
#include "fbsde/kernels.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/regression.hpp"

#include <algorithm>
#include <cmath>

namespace fbsde {

namespace {
constexpr std::size_t kRowChunk = 512;
}

NormalEquations assemble_normal_equations(const double* rows, std::size_t n, std::size_t p,
                                          const double* targets, std::size_t nrhs) {
    const std::size_t chunks = parallel::chunk_count(n, kRowChunk);
    std::vector<double> grams(chunks * p * p, 0.0), rhss(chunks * p * nrhs, 0.0);
    const auto& kern = kernels::active();
    parallel::for_each_chunk(n, kRowChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        kern.gram_update(rows + b * p, e - b, p, targets + b * nrhs, nrhs, grams.data() + c * p * p,
                         rhss.data() + c * p * nrhs);
    });
    NormalEquations ne{p, nrhs, std::vector<double>(p * p, 0.0), std::vector<double>(p * nrhs, 0.0)};
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t k = 0; k < p * p; ++k) ne.gram[k] += grams[c * p * p + k];
        for (std::size_t k = 0; k < p * nrhs; ++k) ne.rhs[k] += rhss[c * p * nrhs + k];
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < i; ++j) ne.gram[i * p + j] = ne.gram[j * p + i];
    }
    return ne;
}

namespace {

// In-place lower Cholesky factor of a (p x p, row-major).
void cholesky(std::vector<double>& a, std::size_t p) {
    double maxdiag = 0.0;
    for (std::size_t i = 0; i < p; ++i) maxdiag = std::max(maxdiag, std::fabs(a[i * p + i]));
    const double tol = 1e-13 * maxdiag;
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
        if (!(d > tol)) {
            throw RankDeficient("normal equations are numerically singular at pivot " + std::to_string(j) +
                                    "; the design is rank deficient, use a nonzero ridge",
                                j);
        }
        const double l = std::sqrt(d);
        a[j * p + j] = l;
        for (std::size_t i = j + 1; i < p; ++i) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            a[i * p + j] = s / l;
        }
    }
}

// Solves L L^T x = b for each of nrhs columns of b (p x nrhs), in place.
void cholesky_solve(const std::vector<double>& l, std::size_t p, std::vector<double>& b, std::size_t nrhs) {
    for (std::size_t c = 0; c < nrhs; ++c) {
        for (std::size_t i = 0; i < p; ++i) {
            double s = b[i * nrhs + c];
            for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * b[k * nrhs + c];
            b[i * nrhs + c] = s / l[i * p + i];
        }
        for (std::size_t i = p; i-- > 0;) {
            double s = b[i * nrhs + c];
            for (std::size_t k = i + 1; k < p; ++k) s -= l[k * p + i] * b[k * nrhs + c];
            b[i * nrhs + c] = s / l[i * p + i];
        }
    }
}

}  // namespace

std::vector<double> solve_normal_equations(const NormalEquations& ne, double ridge) {
    if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be nonnegative");
    const std::size_t p = ne.p, nrhs = ne.nrhs;
    std::vector<double> a = ne.gram;
    for (std::size_t i = 0; i < p; ++i) a[i * p + i] += ridge;
    for (double v : a) {
        if (!std::isfinite(v)) throw NumericalFailure("normal equations contain non-finite entries", -1, -1, -1);
    }
    std::vector<double> l = a;
    cholesky(l, p);
    std::vector<double> x = ne.rhs;
    cholesky_solve(l, p, x, nrhs);

    // One refinement step against the unfactored system.
    std::vector<double> r = ne.rhs;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t c = 0; c < nrhs; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k) s += a[i * p + k] * x[k * nrhs + c];
            r[i * nrhs + c] -= s;
        }
    }
    cholesky_solve(l, p, r, nrhs);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += r[k];
    return x;
}

std::vector<double> solve_linear_lsq(const std::vector<double>& rows, std::size_t n, std::size_t p,
                                     const std::vector<double>& targets, double ridge) {
    if (n == 0 || p == 0) throw InvalidArgument("solve_linear_lsq: empty system");
    if (rows.size() != n * p) throw InvalidArgument("solve_linear_lsq: rows must hold n * p values");
    if (targets.size() != n) throw InvalidArgument("solve_linear_lsq: targets must hold n values");
    return solve_normal_equations(assemble_normal_equations(rows.data(), n, p, targets.data(), 1), ridge);
}

}  // namespace fbsde
