#include "fbsde/reference.hpp"

#include "fbsde/error.hpp"
#include "fbsde/kernels.hpp"
#include "fbsde/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace fbsde {
namespace {

constexpr std::size_t kPathChunk = 64;

void fill_yz(const ProblemSpec& pb, PathBatch& out, const TimeGrid& grid, std::size_t j) {
    for (std::size_t i = 0; i <= grid.N; ++i) {
        const double* x = out.x(j, i);
        out.y(j, i) = pb.u(grid.t(i), x);
        pb.v(grid.t(i), x, out.z(j, i));
    }
}

}  // namespace

PathBatch simulate_reference(const ProblemSpec& pb, const BrownianStore& store, const TimeGrid& grid,
                             Increments* coarse_out) {
    if (!pb.has_analytic()) throw UnsupportedProblem("problem '" + pb.name + "' has no analytic solution");
    if (store.dim_w() != pb.d3) throw InvalidArgument("simulate_reference: store dimension does not match d3");
    if (store.fine_n() % grid.N != 0) {
        throw InvalidArgument("simulate_reference: fineN (" + std::to_string(store.fine_n()) +
                              ") is not divisible by N (" + std::to_string(grid.N) + ")");
    }
    if (std::fabs(store.T() - pb.T) > 1e-14 * pb.T || std::fabs(grid.T - pb.T) > 1e-14 * pb.T) {
        throw InvalidArgument("simulate_reference: horizon mismatch between problem, store and grid");
    }
    const std::size_t N = grid.N, d1 = pb.d1, d3 = pb.d3, n = store.num_paths();
    const std::size_t window = store.fine_n() / N;
    const double hf = store.fine_h();
    PathBatch out(n, N + 1, d1, d3);
    if (coarse_out) {
        coarse_out->num_paths = n;
        coarse_out->num_steps = N;
        coarse_out->dim = d3;
        coarse_out->T = store.T();
        coarse_out->data.assign(n * N * d3, 0.0);
    }
    const auto& kern = kernels::active();

    parallel::for_each_chunk(n, kPathChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> dw(window * d3), x(d1), z(d3), sig(d1 * d3), drift(d1);
        for (std::size_t j = b; j < e; ++j) {
            std::copy(pb.x0.begin(), pb.x0.end(), x.begin());
            std::copy(x.begin(), x.end(), out.x(j, 0));
            for (std::size_t i = 0; i < N; ++i) {
                store.fill_steps(j, i * window, (i + 1) * window, dw.data());
                if (coarse_out) kern.window_sum(dw.data(), 1, window, d3, coarse_out->at(j, i));
                for (std::size_t k = 0; k < window; ++k) {
                    const double s = static_cast<double>(i * window + k) * hf;
                    const double y = pb.u(s, x.data());
                    pb.v(s, x.data(), z.data());
                    pb.sigma(s, x.data(), y, sig.data());
                    pb.b(s, x.data(), y, z.data(), drift.data());
                    const double* w = dw.data() + k * d3;
                    for (std::size_t r = 0; r < d1; ++r) {
                        double diff = 0.0;
                        for (std::size_t c = 0; c < d3; ++c) diff += sig[r * d3 + c] * w[c];
                        x[r] += drift[r] * hf + diff;
                    }
                }
                for (std::size_t r = 0; r < d1; ++r) {
                    if (!std::isfinite(x[r])) {
                        throw NumericalFailure("non-finite reference state at node " + std::to_string(i + 1) +
                                                   ", path " + std::to_string(j),
                                               -1, static_cast<long>(i + 1), static_cast<long>(j));
                    }
                }
                std::copy(x.begin(), x.end(), out.x(j, i + 1));
            }
            fill_yz(pb, out, grid, j);
        }
    });
    return out;
}

PathBatch restrict_reference(const ProblemSpec& pb, const PathBatch& ref, const TimeGrid& to) {
    if (!pb.has_analytic()) throw UnsupportedProblem("problem '" + pb.name + "' has no analytic solution");
    const std::size_t from_n = ref.num_nodes - 1;
    if (to.N == 0 || from_n % to.N != 0) {
        throw InvalidArgument("restrict_reference: target N must divide the reference N");
    }
    const std::size_t stride = from_n / to.N;
    PathBatch out(ref.num_paths, to.N + 1, ref.d1, ref.d3);
    parallel::for_each_chunk(ref.num_paths, kPathChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            for (std::size_t i = 0; i <= to.N; ++i) std::copy_n(ref.x(j, i * stride), ref.d1, out.x(j, i));
            fill_yz(pb, out, to, j);
        }
    });
    return out;
}

ErrorReport compute_errors(const PathBatch& a, const PathBatch& r, const TimeGrid& grid) {
    if (a.num_paths != r.num_paths || a.num_nodes != r.num_nodes || a.d1 != r.d1 || a.d3 != r.d3) {
        throw InvalidArgument("compute_errors: path batches have different shapes");
    }
    if (a.num_nodes != grid.N + 1) throw InvalidArgument("compute_errors: batches do not match the grid");
    if (a.num_paths == 0) throw InvalidArgument("compute_errors: empty batches");
    const std::size_t nodes = a.num_nodes, d1 = a.d1, d3 = a.d3, n = a.num_paths;
    const std::size_t chunks = parallel::chunk_count(n, kPathChunk);
    const std::size_t width = nodes * (d1 + 1 + d3);
    std::vector<double> acc(chunks * width, 0.0);
    const auto& kern = kernels::active();

    parallel::for_each_chunk(n, kPathChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        double* ax = acc.data() + c * width;
        double* ay = ax + nodes * d1;
        double* az = ay + nodes;
        for (std::size_t j = b; j < e; ++j) {
            kern.sq_diff_accumulate(a.x(j, 0), r.x(j, 0), nodes * d1, ax);
            kern.sq_diff_accumulate(&a.Y[j * nodes], &r.Y[j * nodes], nodes, ay);
            kern.sq_diff_accumulate(a.z(j, 0), r.z(j, 0), nodes * d3, az);
        }
    });
    std::vector<double> total(width, 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t k = 0; k < width; ++k) total[k] += acc[c * width + k];
    }
    const double inv = 1.0 / static_cast<double>(n);
    ErrorReport rep;
    for (std::size_t i = 0; i < nodes; ++i) {
        double sx = 0.0;
        for (std::size_t k = 0; k < d1; ++k) sx += total[i * d1 + k];
        rep.errX = std::max(rep.errX, sx * inv);
        rep.errY = std::max(rep.errY, total[nodes * d1 + i] * inv);
    }
    double sz = 0.0;
    const double* tz = total.data() + nodes * (d1 + 1);
    for (std::size_t i = 0; i < grid.N; ++i) {
        for (std::size_t k = 0; k < d3; ++k) sz += tz[i * d3 + k];
    }
    rep.errZ = grid.T / (static_cast<double>(grid.N) * static_cast<double>(n)) * sz;
    rep.total = rep.errX + rep.errY + rep.errZ;
    rep.N = grid.N;
    rep.num_paths = n;
    return rep;
}

double fit_rate(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw InvalidArgument("fit_rate: need at least two points");
    double sx = 0, sy = 0;
    for (const auto& [N, err] : points) {
        if (!(N > 0.0)) throw InvalidArgument("fit_rate: N must be positive");
        if (!(err > 0.0)) throw InvalidArgument("fit_rate: errors must be positive");
        sx += std::log2(N);
        sy += std::log2(err);
    }
    const double k = static_cast<double>(points.size());
    const double mx = sx / k, my = sy / k;
    double sxx = 0, sxy = 0;
    for (const auto& [N, err] : points) {
        const double dx = std::log2(N) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log2(err) - my);
    }
    if (sxx == 0.0) throw InvalidArgument("fit_rate: need at least two distinct N");
    return sxy / sxx;
}

}  // namespace fbsde
