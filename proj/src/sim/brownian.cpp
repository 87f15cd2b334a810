#include "fbsde/brownian.hpp"

#include "fbsde/error.hpp"
#include "fbsde/kernels.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/rng.hpp"

#include <cmath>
#include <limits>

namespace fbsde {
namespace {

constexpr std::size_t kPathChunk = 64;

// Counter layout: (fine step, path, component pair, 0). Key = the two halves
// of the seed.
inline rng::Philox4x32Counter block(std::uint64_t seed, std::size_t path, std::size_t step,
                                    std::size_t pair) {
    const rng::Philox4x32Key key{static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)};
    return rng::philox4x32_10({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(path),
                               static_cast<std::uint32_t>(pair), 0u},
                              key);
}

// Rounds to a multiple of 2^-40 (valid for |x| < 2^11). Every sum of up to
// 2^52 such values is exact, so window sums do not depend on grouping.
inline double snap(double x) {
    constexpr double kShift = 0x1.8p12;
    return (x + kShift) - kShift;
}

}  // namespace

BrownianStore::BrownianStore(std::uint64_t seed, std::size_t num_paths, std::size_t fine_n,
                             std::size_t dim_w, double T)
    : seed_(seed), num_paths_(num_paths), fine_n_(fine_n), dim_w_(dim_w), T_(T) {
    if (num_paths == 0 || fine_n == 0 || dim_w == 0) {
        throw InvalidArgument("Brownian store: paths, fine steps and dimension must be positive");
    }
    if (!(T > 0.0)) throw InvalidArgument("Brownian store: T must be positive");
    constexpr std::size_t lim = std::numeric_limits<std::uint32_t>::max();
    if (num_paths > lim || fine_n > lim || dim_w > lim) {
        throw InvalidArgument("Brownian store: index range exceeds 32-bit counter words");
    }
    // Increments are snapped to a 2^-40 lattice; keep them far below the snap range.
    if (T / static_cast<double>(fine_n) > 1.0) {
        throw InvalidArgument("Brownian store: fine step T/fineN must not exceed 1");
    }
    scale_ = std::sqrt(T / static_cast<double>(fine_n));
}

double BrownianStore::increment(std::size_t path, std::size_t step, std::size_t comp) const {
    if (path >= num_paths_ || step >= fine_n_ || comp >= dim_w_) {
        throw InvalidArgument("Brownian store: index out of range");
    }
    const auto w = block(seed_, path, step, comp / 2);
    const double u = (comp % 2 == 0) ? rng::uniform_open(w[0], w[1]) : rng::uniform_open(w[2], w[3]);
    return snap(scale_ * rng::normal_quantile(u));
}

void BrownianStore::fill_steps(std::size_t path, std::size_t step_begin, std::size_t step_end,
                               double* out) const {
    if (path >= num_paths_ || step_begin > step_end || step_end > fine_n_) {
        throw InvalidArgument("Brownian store: step range out of bounds");
    }
    for (std::size_t k = step_begin; k < step_end; ++k) {
        double* o = out + (k - step_begin) * dim_w_;
        for (std::size_t c = 0; c < dim_w_; c += 2) {
            const auto w = block(seed_, path, k, c / 2);
            o[c] = snap(scale_ * rng::normal_quantile(rng::uniform_open(w[0], w[1])));
            if (c + 1 < dim_w_) {
                o[c + 1] = snap(scale_ * rng::normal_quantile(rng::uniform_open(w[2], w[3])));
            }
        }
    }
}

BrownianStore sample_fine_increments(std::uint64_t seed, std::size_t num_paths,
                                     std::size_t fine_n, std::size_t dim_w, double T) {
    return BrownianStore(seed, num_paths, fine_n, dim_w, T);
}

Increments coarsen_increments(const BrownianStore& store, std::size_t N) {
    if (N == 0 || store.fine_n() % N != 0) {
        throw InvalidArgument("coarsen_increments: fineN (" + std::to_string(store.fine_n()) +
                              ") is not divisible by N (" + std::to_string(N) + ")");
    }
    Increments out;
    out.num_paths = store.num_paths();
    out.num_steps = N;
    out.dim = store.dim_w();
    out.T = store.T();
    out.data.assign(out.num_paths * N * out.dim, 0.0);

    const std::size_t window = store.fine_n() / N;
    const auto& kern = kernels::active();
    parallel::for_each_chunk(out.num_paths, kPathChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> buf(window * out.dim);
        for (std::size_t j = b; j < e; ++j) {
            for (std::size_t i = 0; i < N; ++i) {
                store.fill_steps(j, i * window, (i + 1) * window, buf.data());
                kern.window_sum(buf.data(), 1, window, out.dim, out.at(j, i));
            }
        }
    });
    return out;
}

Increments coarsen_increments(const Increments& inc, std::size_t N) {
    if (N == 0 || inc.num_steps % N != 0) {
        throw InvalidArgument("coarsen_increments: " + std::to_string(inc.num_steps) +
                              " steps are not divisible by N (" + std::to_string(N) + ")");
    }
    Increments out;
    out.num_paths = inc.num_paths;
    out.num_steps = N;
    out.dim = inc.dim;
    out.T = inc.T;
    out.data.assign(out.num_paths * N * out.dim, 0.0);
    const std::size_t window = inc.num_steps / N;
    const auto& kern = kernels::active();
    for (std::size_t j = 0; j < inc.num_paths; ++j) {
        kern.window_sum(inc.at(j, 0), N, window, inc.dim, out.at(j, 0));
    }
    return out;
}

}  // namespace fbsde
