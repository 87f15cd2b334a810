#include "fbsde/experiment.hpp"

#include "fbsde/error.hpp"

#include <chrono>
#include <cstdio>
#include <numeric>

namespace fbsde {

const std::string& csv_header() {
    static const std::string h = "method,problem,N,M,paths,seed,fineN,err_x,err_y,err_z,total,wall_ms";
    return h;
}

std::string to_csv_row(const RunRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%zu,%llu,%zu,%.12e,%.12e,%.12e,%.12e,%.1f", r.method.c_str(),
                  r.problem.c_str(), r.N, r.M, r.paths, static_cast<unsigned long long>(r.seed), r.fineN, r.err_x,
                  r.err_y, r.err_z, r.total, r.wall_ms);
    return buf;
}

ExperimentContext::ExperimentContext(ProblemSpec problem, std::uint64_t seed, std::size_t paths,
                                     std::size_t fine_n, std::size_t base_N)
    : problem_(std::move(problem)), store_(seed, paths, fine_n, problem_.d3, problem_.T), base_N_(base_N) {
    problem_.validate();
    if (base_N == 0 || fine_n % base_N != 0) {
        throw InvalidArgument("fineN (" + std::to_string(fine_n) + ") must be divisible by N (" +
                              std::to_string(base_N) + ")");
    }
    reference_ = simulate_reference(problem_, store_, make_time_grid(problem_.T, base_N), &increments_);
}

PathBatch ExperimentContext::reference(std::size_t N) const {
    if (N == base_N_) return reference_;
    return restrict_reference(problem_, reference_, make_time_grid(problem_.T, N));
}

Increments ExperimentContext::increments(std::size_t N) const {
    if (N == base_N_) return increments_;
    if (N == 0 || base_N_ % N != 0) throw InvalidArgument("N must divide the sweep's base grid");
    return coarsen_increments(increments_, N);
}

RunOutput run_experiment(const ExperimentContext& ctx, SolverConfig cfg) {
    cfg.seed = ctx.store().seed();
    cfg.num_paths = ctx.store().num_paths();
    cfg.fine_n = ctx.store().fine_n();
    cfg.validate();
    const ProblemSpec& pb = ctx.problem();
    const TimeGrid grid = make_time_grid(pb.T, cfg.N);
    const Increments inc = ctx.increments(cfg.N);
    const PathBatch ref = ctx.reference(cfg.N);

    const auto start = std::chrono::steady_clock::now();
    RunOutput out;
    out.result = run_markovian_iteration(pb, cfg, inc);
    const ErrorReport rep = compute_errors(out.result.final_paths, ref, grid);
    const auto stop = std::chrono::steady_clock::now();

    RunRecord& r = out.record;
    r.method = to_string(cfg.method);
    r.problem = pb.name;
    r.N = cfg.N;
    r.M = cfg.M;
    r.paths = cfg.num_paths;
    r.seed = cfg.seed;
    r.fineN = cfg.fine_n;
    r.err_x = rep.errX;
    r.err_y = rep.errY;
    r.err_z = rep.errZ;
    r.total = rep.total;
    r.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    return out;
}

std::size_t lcm_of(const std::vector<std::size_t>& values) {
    std::size_t l = 1;
    for (std::size_t v : values) {
        if (v == 0) throw InvalidArgument("sweep values must be positive");
        l = std::lcm(l, v);
    }
    return l;
}

}  // namespace fbsde
