#include "fbsde/error.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/regression.hpp"

#include <cmath>
#include <string>

namespace fbsde {

std::string to_string(Method m) { return m == Method::differentiation ? "differentiation" : "direct"; }

std::string to_string(FMode m) { return m == FMode::implicit_yz ? "implicit-yz" : "explicit-ynext"; }

Method parse_method(const std::string& s) {
    if (s == "differentiation") return Method::differentiation;
    if (s == "direct") return Method::direct;
    throw InvalidArgument("unknown method '" + s + "' (expected differentiation or direct)");
}

FMode parse_f_mode(const std::string& s) {
    if (s == "implicit-yz") return FMode::implicit_yz;
    if (s == "explicit-ynext") return FMode::explicit_ynext;
    throw InvalidArgument("unknown f-mode '" + s + "' (expected implicit-yz or explicit-ynext)");
}

void RegressionConfig::validate() const {
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InvalidArgument("ridge must be a finite nonnegative number");
    if (inner_iters < 1) throw InvalidArgument("inner iterations must be at least 1");
}

namespace {

constexpr std::size_t kPathChunk = 512;

double relative_ridge(const NormalEquations& ne, double ridge) {
    double trace = 0.0;
    for (std::size_t i = 0; i < ne.p; ++i) trace += ne.gram[i * ne.p + i];
    return ridge * trace / static_cast<double>(ne.p);
}

[[noreturn]] void fail(const std::string& what, std::size_t step, std::size_t path) {
    throw NumericalFailure(what + " at time step " + std::to_string(step) + ", path " + std::to_string(path),
                           -1, static_cast<long>(step), static_cast<long>(path));
}

bool all_finite(const double* v, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(v[k])) return false;
    }
    return true;
}

// Per-chunk scratch for one path evaluation.
struct PathScratch {
    std::vector<double> xt, active, phi, dphi, grad, sig, s, z;
    PathScratch(std::size_t d1, std::size_t d3, std::size_t P)
        : xt(d1), active(d1), phi(P), dphi(P), grad(d1), sig(d1 * d3), s(d1), z(d3) {}
};

// Frozen quantities of the differentiation model at one path:
// y = u(x), z = grad u^T sigma(t, x, y), sigma stored in ps.sig.
double freeze(const ProblemSpec& pb, const QuadraticField& f, double t, const double* x, PathScratch& ps) {
    const std::size_t d1 = pb.d1, d3 = pb.d3;
    f.box.prepare(x, ps.xt.data(), ps.active.data());
    features(ps.xt.data(), d1, ps.phi.data());
    double y = 0.0;
    for (std::size_t p = 0; p < ps.phi.size(); ++p) y += f.coeffs[p] * ps.phi[p];
    grad_u(f, x, ps.grad.data());
    pb.sigma(t, x, y, ps.sig.data());
    for (std::size_t c = 0; c < d3; ++c) ps.z[c] = 0.0;
    for (std::size_t k = 0; k < d1; ++k) {
        for (std::size_t c = 0; c < d3; ++c) ps.z[c] += ps.grad[k] * ps.sig[k * d3 + c];
    }
    return y;
}

// Empirical loss  mean |Y_next - (y - h f(t, x, y_f, z) + z dW)|^2  at field f.
double differentiation_loss(const ProblemSpec& pb, const QuadraticField& f, double t, double h, FMode mode,
                            const StepData& data) {
    const std::size_t d1 = pb.d1, d3 = pb.d3, P = feature_count(d1);
    const std::size_t chunks = parallel::chunk_count(data.n, kPathChunk);
    std::vector<double> partial(chunks, 0.0);
    parallel::for_each_chunk(data.n, kPathChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        PathScratch ps(d1, d3, P);
        double acc = 0.0;
        for (std::size_t j = b; j < e; ++j) {
            const double* x = data.X + j * d1;
            const double* dw = data.dW + j * d3;
            const double y = freeze(pb, f, t, x, ps);
            const double yf = mode == FMode::implicit_yz ? y : data.y_next[j];
            double pred = y - h * pb.f(t, x, yf, ps.z.data());
            for (std::size_t k = 0; k < d3; ++k) pred += ps.z[k] * dw[k];
            const double r = data.y_next[j] - pred;
            acc += r * r;
        }
        partial[c] = acc;
    });
    double sum = 0.0;
    for (double v : partial) sum += v;
    return sum / static_cast<double>(data.n);
}

void check_step_inputs(const ProblemSpec& pb, const TimeGrid& grid, std::size_t i, const StepData& data) {
    if (i >= grid.N) throw InvalidArgument("fit step: time index out of range");
    if (data.n == 0 || !data.X || !data.y_next || !data.dW) throw InvalidArgument("fit step: empty sample batch");
    if (pb.d1 > kMaxFieldDim) throw InvalidArgument("fit step: dimension too large");
}

}  // namespace

QuadraticField fit_step_differentiation(const ProblemSpec& pb, const TimeGrid& grid, std::size_t i,
                                        const StepData& data, const QuadraticField& warm,
                                        const RegressionConfig& cfg, FitReport* report) {
    cfg.validate();
    check_step_inputs(pb, grid, i, data);
    const std::size_t d1 = pb.d1, d3 = pb.d3, P = feature_count(d1), n = data.n;
    if (warm.d1 != d1 || warm.coeffs.size() != P || warm.box.dim() != d1) {
        throw InvalidArgument("fit_step_differentiation: warm start does not match the problem dimension");
    }
    const double t = grid.t(i), h = grid.h;
    const FMode mode = cfg.mode_for(Method::differentiation);

    QuadraticField cur = warm;
    std::vector<double> rows(n * P), targets(n);
    if (report) {
        report->loss_history.clear();
        report->monotone = true;
        report->loss_history.push_back(differentiation_loss(pb, cur, t, h, mode, data));
    }

    for (int it = 0; it < cfg.inner_iters; ++it) {
        parallel::for_each_chunk(n, kPathChunk, [&](std::size_t, std::size_t b, std::size_t e) {
            PathScratch ps(d1, d3, P);
            for (std::size_t j = b; j < e; ++j) {
                const double* x = data.X + j * d1;
                const double* dw = data.dW + j * d3;
                const double ybar = freeze(pb, cur, t, x, ps);
                // s = sigma_bar dW; the model u + grad u . s is linear in theta.
                for (std::size_t k = 0; k < d1; ++k) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < d3; ++c) acc += ps.sig[k * d3 + c] * dw[c];
                    ps.s[k] = acc;
                }
                feature_directional(ps.xt.data(), ps.active.data(), ps.s.data(), d1, ps.dphi.data());
                double* row = rows.data() + j * P;
                for (std::size_t p = 0; p < P; ++p) row[p] = ps.phi[p] + ps.dphi[p];
                const double yf = mode == FMode::implicit_yz ? ybar : data.y_next[j];
                targets[j] = data.y_next[j] + h * pb.f(t, x, yf, ps.z.data());
                if (!std::isfinite(targets[j]) || !all_finite(row, P)) fail("non-finite regression input", i, j);
            }
        });
        const NormalEquations ne = assemble_normal_equations(rows.data(), n, P, targets.data(), 1);
        cur.coeffs = solve_normal_equations(ne, relative_ridge(ne, cfg.ridge));
        if (!all_finite(cur.coeffs.data(), P)) fail("non-finite fitted coefficients", i, 0);
        if (report) {
            const double loss = differentiation_loss(pb, cur, t, h, mode, data);
            const double prev = report->loss_history.back();
            if (loss > prev * (1.0 + 1e-12) + 1e-300) report->monotone = false;
            report->loss_history.push_back(loss);
        }
    }
    return cur;
}

std::pair<QuadraticField, DirectZField> fit_step_direct(const ProblemSpec& pb, const TimeGrid& grid, std::size_t i,
                                                        const StepData& data, const TruncBox& box,
                                                        const RegressionConfig& cfg) {
    cfg.validate();
    check_step_inputs(pb, grid, i, data);
    const std::size_t d1 = pb.d1, d3 = pb.d3, P = feature_count(d1), n = data.n;
    if (box.dim() != d1) throw InvalidArgument("fit_step_direct: box dimension mismatch");
    const double t = grid.t(i), h = grid.h;
    const FMode mode = cfg.mode_for(Method::direct);

    std::vector<double> rows(n * P), zt(n * d3);
    parallel::for_each_chunk(n, kPathChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> xt(d1), active(d1);
        for (std::size_t j = b; j < e; ++j) {
            box.prepare(data.X + j * d1, xt.data(), active.data());
            features(xt.data(), d1, rows.data() + j * P);
            for (std::size_t c = 0; c < d3; ++c) zt[j * d3 + c] = data.y_next[j] * data.dW[j * d3 + c] / h;
            if (!all_finite(rows.data() + j * P, P) || !all_finite(zt.data() + j * d3, d3)) {
                fail("non-finite regression input", i, j);
            }
        }
    });
    const NormalEquations ne_z = assemble_normal_equations(rows.data(), n, P, zt.data(), d3);
    const double ridge = relative_ridge(ne_z, cfg.ridge);
    DirectZField zf{d1, d3, solve_normal_equations(ne_z, ridge), box};
    if (!all_finite(zf.coeffs.data(), zf.coeffs.size())) fail("non-finite fitted coefficients", i, 0);

    // z_beta(X_j) = phi_j^T beta.
    std::vector<double> z(n * d3, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* row = rows.data() + j * P;
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t c = 0; c < d3; ++c) z[j * d3 + c] += row[p] * zf.coeffs[p * d3 + c];
        }
    }

    QuadraticField uf{d1, std::vector<double>(P, 0.0), box};
    std::vector<double> ty(n);
    std::vector<double> yf(data.y_next, data.y_next + n);
    const int passes = mode == FMode::implicit_yz ? cfg.inner_iters : 1;
    for (int it = 0; it < passes; ++it) {
        for (std::size_t j = 0; j < n; ++j) {
            ty[j] = data.y_next[j] + h * pb.f(t, data.X + j * d1, yf[j], z.data() + j * d3);
            if (!std::isfinite(ty[j])) fail("non-finite regression target", i, j);
        }
        const NormalEquations ne_y = assemble_normal_equations(rows.data(), n, P, ty.data(), 1);
        uf.coeffs = solve_normal_equations(ne_y, ridge);
        if (!all_finite(uf.coeffs.data(), P)) fail("non-finite fitted coefficients", i, 0);
        // Implicit mode: refresh y in f with the fitted field.
        for (std::size_t j = 0; j < n; ++j) {
            double y = 0.0;
            for (std::size_t p = 0; p < P; ++p) y += uf.coeffs[p] * rows[j * P + p];
            yf[j] = y;
        }
    }
    return {std::move(uf), std::move(zf)};
}

}  // namespace fbsde
