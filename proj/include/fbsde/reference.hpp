#pragma once

#include "fbsde/brownian.hpp"
#include "fbsde/path_batch.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/time_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fbsde {

struct ErrorReport {
    double errX = 0, errY = 0, errZ = 0, total = 0;
    std::size_t N = 0, M = 0, num_paths = 0;
    std::string method;
    std::uint64_t seed = 0;
};

/// Euler on the fine grid of `store` with the analytic fields plugged in:
/// drift b(s, X, u(s,X), v(s,X)), diffusion sigma(s, X, u(s,X)). Records X at
/// the nodes of `grid` and sets Y = u(t_i, X), Z = v(t_i, X) there.
/// If coarse_out is given it receives the window sums of the same fine
/// increments (identical to coarsen_increments(store, grid.N)).
/// Throws UnsupportedProblem without an analytic solution.
PathBatch simulate_reference(const ProblemSpec& problem, const BrownianStore& store, const TimeGrid& grid,
                             Increments* coarse_out = nullptr);

/// Reference on a coarser grid whose nodes are a subset of `ref`'s: X is
/// taken at the shared nodes and Y, Z are re-evaluated at `to`'s node times,
/// so the result equals simulate_reference on `to` directly.
PathBatch restrict_reference(const ProblemSpec& problem, const PathBatch& ref, const TimeGrid& to);

/// errX = max_i mean_j |dX|^2, errY likewise, errZ = T/(N*paths) sum_{i<N} sum_j |dZ|^2.
ErrorReport compute_errors(const PathBatch& approx, const PathBatch& reference, const TimeGrid& grid);

/// Least-squares slope of log2(err) against log2(N). Needs >= 2 points with
/// positive values and at least two distinct N.
double fit_rate(const std::vector<std::pair<double, double>>& points);

}  // namespace fbsde
