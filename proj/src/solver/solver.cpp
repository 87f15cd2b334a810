#include "fbsde/solver.hpp"

#include "fbsde/parallel.hpp"
#include "fbsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fbsde {
namespace {

constexpr std::size_t kPathChunk = 256;

bool finite_all(const double* v, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(v[k])) return false;
    }
    return true;
}

Increments fresh_increments(const SolverConfig& cfg, const ProblemSpec& pb, std::size_t m) {
    // Drawn directly at the coarse resolution from an iteration-specific stream.
    const std::uint64_t seed = rng::mix64(cfg.seed ^ rng::mix64(0x5eed0000u + m));
    return coarsen_increments(BrownianStore(seed, cfg.num_paths, cfg.N, pb.d3, pb.T), cfg.N);
}

}  // namespace

void SolverConfig::validate() const {
    if (N == 0 || M == 0 || num_paths == 0 || fine_n == 0) {
        throw InvalidArgument("solver config: N, M, paths and fineN must be positive");
    }
    if (fine_n % N != 0) {
        throw InvalidArgument("solver config: fineN (" + std::to_string(fine_n) + ") must be divisible by N (" +
                              std::to_string(N) + ")");
    }
    if (!(box_quantile > 0.0 && box_quantile < 0.5)) throw InvalidArgument("solver config: box quantile must be in (0, 0.5)");
    if (box_radius && !(*box_radius > 0.0)) throw InvalidArgument("solver config: box radius must be positive");
    regression.validate();
}

SolverFailure::SolverFailure(const NumericalFailure& cause, long iteration, IterationResult partial)
    : NumericalFailure(std::string(cause.what()) + " (iteration " + std::to_string(iteration) + ")", iteration,
                       cause.step(), cause.path()),
      partial_(std::move(partial)) {}

IterationFields zero_fields(const ProblemSpec& pb, std::size_t N, Method method, const TruncBox& box) {
    IterationFields f;
    f.u.assign(N, QuadraticField::zero(pb.d1, box));
    if (method == Method::direct) f.z.assign(N, DirectZField::zero(pb.d1, pb.d3, box));
    return f;
}

PathBatch forward_simulate(const ProblemSpec& pb, const IterationFields& prev, const Increments& dW,
                           const TimeGrid& grid, Method method) {
    const std::size_t N = grid.N, d1 = pb.d1, d3 = pb.d3, n = dW.num_paths;
    if (prev.u.size() != N || (method == Method::direct && prev.z.size() != N)) {
        throw InvalidArgument("forward_simulate: expected one field per time step");
    }
    if (dW.num_steps != N || dW.dim != d3) throw InvalidArgument("forward_simulate: increments do not match the grid");
    PathBatch out(n, N + 1, d1, d3);

    parallel::for_each_chunk(n, kPathChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> x(d1), grad(d1), sig(d1 * d3), drift(d1);
        for (std::size_t j = b; j < e; ++j) {
            std::copy(pb.x0.begin(), pb.x0.end(), x.begin());
            for (std::size_t i = 0; i < N; ++i) {
                const double t = grid.t(i);
                const double y = eval_u(prev.u[i], x.data());
                double* z = out.z(j, i);
                pb.sigma(t, x.data(), y, sig.data());
                if (method == Method::differentiation) {
                    grad_u(prev.u[i], x.data(), grad.data());
                    for (std::size_t c = 0; c < d3; ++c) z[c] = 0.0;
                    for (std::size_t k = 0; k < d1; ++k) {
                        for (std::size_t c = 0; c < d3; ++c) z[c] += grad[k] * sig[k * d3 + c];
                    }
                } else {
                    eval_v_direct(prev.z[i], x.data(), z);
                }
                std::copy(x.begin(), x.end(), out.x(j, i));
                out.y(j, i) = y;

                pb.b(t, x.data(), y, z, drift.data());
                const double* dw = dW.at(j, i);
                for (std::size_t k = 0; k < d1; ++k) {
                    double diff = 0.0;
                    for (std::size_t c = 0; c < d3; ++c) diff += sig[k * d3 + c] * dw[c];
                    x[k] += drift[k] * grid.h + diff;
                }
                if (!finite_all(x.data(), d1)) {
                    throw NumericalFailure("non-finite forward state at time step " + std::to_string(i + 1) +
                                               ", path " + std::to_string(j),
                                           -1, static_cast<long>(i + 1), static_cast<long>(j));
                }
            }
            std::copy(x.begin(), x.end(), out.x(j, N));
            const double yT = pb.g(x.data());
            out.y(j, N) = yT;
            terminal_gradient(pb, x.data(), grad.data());
            pb.sigma(grid.T, x.data(), yT, sig.data());
            double* z = out.z(j, N);
            for (std::size_t c = 0; c < d3; ++c) z[c] = 0.0;
            for (std::size_t k = 0; k < d1; ++k) {
                for (std::size_t c = 0; c < d3; ++c) z[c] += grad[k] * sig[k * d3 + c];
            }
        }
    });
    return out;
}

IterationFields backward_pass(const ProblemSpec& pb, const PathBatch& paths, const Increments& dW,
                              const TimeGrid& grid, const IterationFields& warm, Method method,
                              const RegressionConfig& cfg, const TruncBox& box, std::size_t* loss_increases) {
    const std::size_t N = grid.N, d1 = pb.d1, d3 = pb.d3, n = paths.num_paths;
    if (paths.num_nodes != N + 1 || dW.num_steps != N || dW.num_paths != n) {
        throw InvalidArgument("backward_pass: paths and increments do not match the grid");
    }
    if (method == Method::differentiation && warm.u.size() != N) {
        throw InvalidArgument("backward_pass: warm start needs one field per time step");
    }
    IterationFields out;
    out.u.resize(N);
    if (method == Method::direct) out.z.resize(N);

    std::vector<double> X(n * d1), ynext(n), dw(n * d3);
    for (std::size_t j = 0; j < n; ++j) ynext[j] = paths.y(j, N);  // g(X_N) from the forward pass

    for (std::size_t i = N; i-- > 0;) {
        for (std::size_t j = 0; j < n; ++j) {
            std::copy_n(paths.x(j, i), d1, X.data() + j * d1);
            std::copy_n(dW.at(j, i), d3, dw.data() + j * d3);
        }
        const StepData data{n, X.data(), ynext.data(), dw.data()};
        if (method == Method::differentiation) {
            QuadraticField start{d1, recenter_coeffs(warm.u[i], box.center), box};
            FitReport report;
            out.u[i] = fit_step_differentiation(pb, grid, i, data, start, cfg, &report);
            if (loss_increases && !report.monotone) ++*loss_increases;
        } else {
            auto [u, z] = fit_step_direct(pb, grid, i, data, box, cfg);
            out.u[i] = std::move(u);
            out.z[i] = std::move(z);
        }
        if (i > 0) {
            const QuadraticField& fresh = out.u[i];
            parallel::for_each_chunk(n, kPathChunk, [&](std::size_t, std::size_t b, std::size_t e) {
                for (std::size_t j = b; j < e; ++j) ynext[j] = eval_u(fresh, X.data() + j * d1);
            });
        }
    }
    return out;
}

double default_box_radius(const ProblemSpec& pb) {
    const double y0 = pb.u ? pb.u(0.0, pb.x0.data()) : pb.g(pb.x0.data());
    std::vector<double> sig(pb.d1 * pb.d3);
    pb.sigma(0.0, pb.x0.data(), y0, sig.data());
    double sup = 0.0;
    for (std::size_t k = 0; k < pb.d1; ++k) {
        double row = 0.0;
        for (std::size_t c = 0; c < pb.d3; ++c) row += sig[k * pb.d3 + c] * sig[k * pb.d3 + c];
        sup = std::max(sup, row);
    }
    return std::max(3.0, 6.0 * std::sqrt(sup * pb.T));
}

std::optional<TruncBox> quantile_box(const PathBatch& paths, double q) {
    const std::size_t d1 = paths.d1, count = paths.num_paths * paths.num_nodes;
    std::vector<double> lo(d1), hi(d1), vals(count);
    auto quantile = [&](double p) {
        // Linear interpolation between order statistics.
        const double pos = p * static_cast<double>(count - 1);
        const std::size_t k = static_cast<std::size_t>(std::floor(pos));
        std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(k), vals.end());
        const double a = vals[k];
        if (k + 1 >= count) return a;
        const double b = *std::min_element(vals.begin() + static_cast<std::ptrdiff_t>(k) + 1, vals.end());
        return a + (pos - static_cast<double>(k)) * (b - a);
    };
    for (std::size_t k = 0; k < d1; ++k) {
        for (std::size_t r = 0; r < count; ++r) vals[r] = paths.X[r * d1 + k];
        lo[k] = quantile(q);
        hi[k] = quantile(1.0 - q);
        if (!(hi[k] - lo[k] > 1e-12 * (1.0 + std::max(std::fabs(lo[k]), std::fabs(hi[k]))))) return std::nullopt;
    }
    TruncBox box = TruncBox::from_bounds(lo, hi);
    for (std::size_t k = 0; k < d1; ++k) box.center[k] = 0.5 * (lo[k] + hi[k]);
    return box;
}

IterationResult run_markovian_iteration(const ProblemSpec& pb, const SolverConfig& cfg, const Increments& base,
                                        const IterationObserver& observer) {
    cfg.validate();
    pb.validate();
    if (base.num_paths != cfg.num_paths || base.num_steps != cfg.N || base.dim != pb.d3) {
        throw InvalidArgument("run_markovian_iteration: base increments do not match the configuration");
    }
    const TimeGrid grid = make_time_grid(pb.T, cfg.N);
    const double radius = cfg.box_radius.value_or(default_box_radius(pb));

    auto expansion_point = [&cfg](TruncBox b) {
        if (!cfg.center_features) std::fill(b.center.begin(), b.center.end(), 0.0);
        return b;
    };
    TruncBox box = expansion_point(cfg.box_policy == BoxPolicy::none ? TruncBox::unbounded(pb.d1)
                                                                     : TruncBox::around(pb.x0, radius));
    bool frozen = cfg.box_policy != BoxPolicy::adaptive;

    IterationResult res;
    IterationFields prev = zero_fields(pb, cfg.N, cfg.method, box);
    PathBatch paths;
    long stage = 1;  // iteration a failure is attributed to
    try {
        paths = forward_simulate(pb, prev, base, grid, cfg.method);
        for (std::size_t m = 1; m <= cfg.M; ++m) {
            stage = static_cast<long>(m);
            Increments fresh;
            if (cfg.fresh_noise) {
                fresh = fresh_increments(cfg, pb, m);
                paths = forward_simulate(pb, prev, fresh, grid, cfg.method);
            }
            const Increments& noise = cfg.fresh_noise ? fresh : base;
            if (!frozen) {
                if (auto qb = quantile_box(paths, cfg.box_quantile)) {
                    box = expansion_point(std::move(*qb));
                    frozen = true;
                }
            }
            IterationFields next =
                backward_pass(pb, paths, noise, grid, prev, cfg.method, cfg.regression, box, &res.loss_increases);
            res.fields.push_back(next);
            prev = std::move(next);

            // Forward sweep of iteration m+1 on the base increments; doubles as
            // the evaluation pass for iteration m.
            stage = static_cast<long>(m + 1);
            paths = forward_simulate(pb, prev, base, grid, cfg.method);
            if (observer) observer(m, paths);
        }
    } catch (const NumericalFailure& e) {
        res.box = box;
        throw SolverFailure(e, stage, std::move(res));
    }
    res.final_paths = std::move(paths);
    res.box = box;
    return res;
}

IterationResult run_markovian_iteration(const ProblemSpec& pb, const SolverConfig& cfg) {
    cfg.validate();
    const BrownianStore store(cfg.seed, cfg.num_paths, cfg.fine_n, pb.d3, pb.T);
    return run_markovian_iteration(pb, cfg, coarsen_increments(store, cfg.N));
}

void write_checkpoint(const IterationResult& result, const SolverConfig& cfg, const std::string& path) {
    nlohmann::json j;
    j["method"] = to_string(cfg.method);
    j["N"] = cfg.N;
    j["M"] = result.fields.size();
    j["paths"] = cfg.num_paths;
    j["seed"] = cfg.seed;
    j["fineN"] = cfg.fine_n;
    j["ordering_version"] = kFeatureOrderingVersion;
    nlohmann::json iters = nlohmann::json::array();
    for (std::size_t m = 0; m < result.fields.size(); ++m) {
        const IterationFields& f = result.fields[m];
        nlohmann::json it{{"m", m + 1}};
        it["u"] = nlohmann::json::array();
        for (std::size_t i = 0; i < f.u.size(); ++i) it["u"].push_back(to_json(f.u[i], static_cast<long>(i)));
        if (!f.z.empty()) {
            it["z"] = nlohmann::json::array();
            for (std::size_t i = 0; i < f.z.size(); ++i) it["z"].push_back(to_json(f.z[i], static_cast<long>(i)));
        }
        iters.push_back(std::move(it));
    }
    j["iterations"] = std::move(iters);
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write checkpoint '" + path + "'");
    out << j.dump(1) << '\n';
}

}  // namespace fbsde
