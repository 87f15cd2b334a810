#pragma once

#include "fbsde/brownian.hpp"
#include "fbsde/error.hpp"
#include "fbsde/fields.hpp"
#include "fbsde/path_batch.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/regression.hpp"
#include "fbsde/time_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fbsde {

/// How the truncation box of the fitted fields is chosen.
/// adaptive: the default box around x0 until the first iteration whose forward
///   paths spread in every component; from then on the per-component
///   [q, 1-q] quantile box of those paths, frozen.
/// fixed: always the default box around x0.
/// none: no truncation.
enum class BoxPolicy { adaptive, fixed, none };

struct SolverConfig {
    std::size_t N = 32;
    std::size_t M = 5;
    std::size_t num_paths = 15000;
    Method method = Method::differentiation;
    std::uint64_t seed = 1;
    std::size_t fine_n = 20480;
    RegressionConfig regression;
    BoxPolicy box_policy = BoxPolicy::adaptive;
    double box_quantile = 5e-4;
    /// Half-width of the default box; unset means max(3, 6 sqrt(Sigma_hat T)).
    std::optional<double> box_radius;
    /// Expand the fitted polynomials about the box center instead of the
    /// origin. Same function space; only the ridge / minimum-norm solution on
    /// degenerate designs (all paths at x0) changes.
    bool center_features = false;
    /// Draw new increments for every iteration instead of reusing one batch.
    bool fresh_noise = false;

    void validate() const;
};

/// Fields of one Markovian iteration: u[i] for i = 0..N-1, and z[i] for the
/// direct method (empty for differentiation).
struct IterationFields {
    std::vector<QuadraticField> u;
    std::vector<DirectZField> z;
};

IterationFields zero_fields(const ProblemSpec& problem, std::size_t N, Method method, const TruncBox& box);

struct IterationResult {
    std::vector<IterationFields> fields;  // fields[m-1] for m = 1..M
    PathBatch final_paths;                // forward pass with fields[M]
    TruncBox box;                         // box in force at the end
    std::size_t loss_increases = 0;       // inner-loop steps whose loss went up
};

/// Thrown when a run fails part way; carries the iterations completed so far.
class SolverFailure : public NumericalFailure {
public:
    SolverFailure(const NumericalFailure& cause, long iteration, IterationResult partial);
    const IterationResult& partial() const noexcept { return partial_; }

private:
    IterationResult partial_;
};

/// Euler forward sweep driven by `prev` (Y = u, Z = grad u^T sigma or the
/// direct z field), terminal Y_N = g(X_N), Z_N = grad g^T sigma.
PathBatch forward_simulate(const ProblemSpec& problem, const IterationFields& prev, const Increments& dW,
                           const TimeGrid& grid, Method method);

/// Backward regression sweep i = N-1..0. `warm` seeds the differentiation fit
/// (its coefficients are re-expanded about `box`'s center).
IterationFields backward_pass(const ProblemSpec& problem, const PathBatch& paths, const Increments& dW,
                              const TimeGrid& grid, const IterationFields& warm, Method method,
                              const RegressionConfig& cfg, const TruncBox& box,
                              std::size_t* loss_increases = nullptr);

/// Default truncation radius max(3, 6 sqrt(Sigma_hat T)), Sigma_hat the
/// largest row norm^2 of sigma(0, x0, y0), y0 = u(0, x0) if known else g(x0).
double default_box_radius(const ProblemSpec& problem);

/// Per-component [q, 1-q] quantile box over all nodes of all paths, centered
/// at its midpoint. Returns nullopt if some component has no spread.
std::optional<TruncBox> quantile_box(const PathBatch& paths, double q);

/// Called after iteration m (1-based) with the forward paths generated by
/// fields[m-1] on the base increments.
using IterationObserver = std::function<void(std::size_t m, const PathBatch& paths)>;

/// Markovian iteration on the given base increments (num_paths x N x d3).
IterationResult run_markovian_iteration(const ProblemSpec& problem, const SolverConfig& cfg,
                                        const Increments& base, const IterationObserver& observer = {});

/// Same, generating the base increments from (seed, fineN).
IterationResult run_markovian_iteration(const ProblemSpec& problem, const SolverConfig& cfg);

/// JSON record of every field of every iteration.
void write_checkpoint(const IterationResult& result, const SolverConfig& cfg, const std::string& path);

}  // namespace fbsde
