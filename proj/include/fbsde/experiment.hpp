#pragma once

#include "fbsde/brownian.hpp"
#include "fbsde/path_batch.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/reference.hpp"
#include "fbsde/solver.hpp"

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace fbsde {

/// One CSV row.
struct RunRecord {
    std::string method;
    std::string problem;
    std::size_t N = 0, M = 0, paths = 0;
    std::uint64_t seed = 0;
    std::size_t fineN = 0;
    double err_x = 0, err_y = 0, err_z = 0, total = 0;
    double wall_ms = 0;
};

/// method,problem,N,M,paths,seed,fineN,err_x,err_y,err_z,total,wall_ms
const std::string& csv_header();
std::string to_csv_row(const RunRecord& r);

/// One Brownian store, the fine reference solution and the coarse increments
/// for a fixed (problem, seed, paths, fineN), shared by every run of a sweep.
/// The reference is simulated once on a base grid; every N dividing base_N
/// is served by restriction, which gives the same numbers as simulating on N
/// directly.
class ExperimentContext {
public:
    ExperimentContext(ProblemSpec problem, std::uint64_t seed, std::size_t paths, std::size_t fine_n,
                      std::size_t base_N);

    const ProblemSpec& problem() const noexcept { return problem_; }
    std::size_t base_N() const noexcept { return base_N_; }
    const BrownianStore& store() const noexcept { return store_; }

    PathBatch reference(std::size_t N) const;
    Increments increments(std::size_t N) const;

private:
    ProblemSpec problem_;
    BrownianStore store_;
    std::size_t base_N_;
    PathBatch reference_;
    Increments increments_;
};

struct RunOutput {
    RunRecord record;
    IterationResult result;
};

/// Runs the solver with cfg (N, M, method, regression options) on the
/// context's noise and scores the final paths against the reference.
/// cfg.seed, cfg.num_paths and cfg.fine_n are overwritten from the context.
RunOutput run_experiment(const ExperimentContext& ctx, SolverConfig cfg);

/// Least common multiple of the values (used as the base grid of a sweep).
std::size_t lcm_of(const std::vector<std::size_t>& values);

}  // namespace fbsde
