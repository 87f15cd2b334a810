#include "fbsde/problem.hpp"

#include "fbsde/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fbsde {

void ProblemSpec::validate() const {
    if (d1 == 0 || d3 == 0) throw InvalidArgument("problem '" + name + "': dimensions must be positive");
    if (x0.size() != d1) throw InvalidArgument("problem '" + name + "': x0 has wrong length");
    if (!(T > 0.0)) throw InvalidArgument("problem '" + name + "': T must be positive");
    if (!b || !sigma || !f || !g) throw InvalidArgument("problem '" + name + "': missing coefficient function");
}

void terminal_gradient(const ProblemSpec& p, const double* x, double* out) {
    if (p.grad_g) {
        p.grad_g(x, out);
        return;
    }
    double xs[kMaxFieldDim];
    for (std::size_t k = 0; k < p.d1; ++k) xs[k] = x[k];
    for (std::size_t k = 0; k < p.d1; ++k) {
        const double step = 1e-5 * (1.0 + std::fabs(x[k]));
        xs[k] = x[k] + step;
        const double up = p.g(xs);
        xs[k] = x[k] - step;
        const double dn = p.g(xs);
        xs[k] = x[k];
        out[k] = (up - dn) / (2.0 * step);
    }
}

ProblemSpec example1_problem(const Example1Params& prm) {
    if (prm.d1 == 0 || prm.d1 > kMaxFieldDim) throw InvalidArgument("example1: d1 out of range");
    if (!(prm.T > 0.0)) throw InvalidArgument("example1: T must be positive");
    ProblemSpec p;
    p.name = "example1";
    p.d1 = prm.d1;
    p.d3 = prm.d1;
    p.x0.assign(prm.d1, prm.x0);
    p.T = prm.T;
    const std::size_t d = prm.d1;
    const double ky = prm.kappa_y, kz = prm.kappa_z, sb = prm.sigma_bar, r = prm.r, T = prm.T;

    p.b = [=](double, const double*, double y, const double* z, double* out) {
        for (std::size_t k = 0; k < d; ++k) out[k] = ky * sb * y + kz * z[k];
    };
    p.sigma = [=](double, const double*, double y, double* out) {
        for (std::size_t k = 0; k < d * d; ++k) out[k] = 0.0;
        for (std::size_t k = 0; k < d; ++k) out[k * d + k] = sb * y;
    };
    p.f = [=](double t, const double* x, double y, const double* z) {
        double S = 0.0, C = 0.0, Z = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double c = std::cos(x[k]);
            S += std::sin(x[k]);
            C += c * c;
            Z += z[k];
        }
        const double e3 = std::exp(-3.0 * r * (T - t));
        return -r * y + 0.5 * e3 * sb * sb * S * S * S - ky * Z - kz * sb * e3 * S * C;
    };
    p.g = [=](const double* x) {
        double S = 0.0;
        for (std::size_t k = 0; k < d; ++k) S += std::sin(x[k]);
        return S;
    };
    p.grad_g = [=](const double* x, double* out) {
        for (std::size_t k = 0; k < d; ++k) out[k] = std::cos(x[k]);
    };
    p.u = [=](double t, const double* x) {
        double S = 0.0;
        for (std::size_t k = 0; k < d; ++k) S += std::sin(x[k]);
        return std::exp(-r * (T - t)) * S;
    };
    p.v = [=](double t, const double* x, double* out) {
        double S = 0.0;
        for (std::size_t k = 0; k < d; ++k) S += std::sin(x[k]);
        const double e2 = std::exp(-2.0 * r * (T - t)) * sb * S;
        for (std::size_t k = 0; k < d; ++k) out[k] = e2 * std::cos(x[k]);
    };
    return p;
}

ProblemSpec example2_problem(double T, double x0) {
    if (!(T > 0.0)) throw InvalidArgument("example2: T must be positive");
    ProblemSpec p;
    p.name = "example2";
    p.d1 = 1;
    p.d3 = 1;
    p.x0 = {x0};
    p.T = T;
    p.b = [](double t, const double* x, double, const double* z, double* out) {
        const double s = std::sin(t + x[0]), c = std::cos(t + x[0]);
        out[0] = -0.5 * s * c * (s * s + z[0]);
    };
    p.sigma = [](double t, const double* x, double, double* out) { out[0] = std::cos(t + x[0]); };
    p.f = [](double t, const double* x, double y, const double* z) { return y * z[0] - std::cos(t + x[0]); };
    p.g = [T](const double* x) { return std::sin(T + x[0]); };
    p.grad_g = [T](const double* x, double* out) { out[0] = std::cos(T + x[0]); };
    p.u = [](double t, const double* x) { return std::sin(t + x[0]); };
    p.v = [](double t, const double* x, double* out) {
        const double c = std::cos(t + x[0]);
        out[0] = c * c;
    };
    return p;
}

ProblemSpec decoupled_test_problem(DecoupledKind kind, double T, double x0, double value) {
    if (!(T > 0.0)) throw InvalidArgument("decoupled problem: T must be positive");
    ProblemSpec p;
    p.d1 = 1;
    p.d3 = 1;
    p.x0 = {x0};
    p.T = T;
    p.b = [](double, const double*, double, const double*, double* out) { out[0] = 0.0; };
    p.sigma = [](double, const double*, double, double* out) { out[0] = 1.0; };
    p.f = [](double, const double*, double, const double*) { return 0.0; };
    if (kind == DecoupledKind::brownian_linear) {
        p.name = "brownian-linear";
        p.g = [](const double* x) { return x[0]; };
        p.grad_g = [](const double*, double* out) { out[0] = 1.0; };
        p.u = [](double, const double* x) { return x[0]; };
        p.v = [](double, const double*, double* out) { out[0] = 1.0; };
    } else {
        p.name = "constant";
        p.g = [value](const double*) { return value; };
        p.grad_g = [](const double*, double* out) { out[0] = 0.0; };
        p.u = [value](double, const double*) { return value; };
        p.v = [](double, const double*, double* out) { out[0] = 0.0; };
    }
    return p;
}

ProblemSpec make_problem(const std::string& name, const ProblemOptions& o) {
    if (name == "example1") {
        Example1Params prm;
        if (o.kappa_y) prm.kappa_y = *o.kappa_y;
        if (o.kappa_z) prm.kappa_z = *o.kappa_z;
        if (o.sigma_bar) prm.sigma_bar = *o.sigma_bar;
        if (o.r) prm.r = *o.r;
        if (o.d1) prm.d1 = *o.d1;
        if (o.T) prm.T = *o.T;
        if (o.x0) prm.x0 = *o.x0;
        return example1_problem(prm);
    }
    if (name == "example2") return example2_problem(o.T.value_or(0.25), o.x0.value_or(1.5));
    if (name == "brownian-linear") {
        return decoupled_test_problem(DecoupledKind::brownian_linear, o.T.value_or(0.25), o.x0.value_or(0.0));
    }
    if (name == "constant") {
        return decoupled_test_problem(DecoupledKind::constant, o.T.value_or(0.25), o.x0.value_or(0.0),
                                      o.value.value_or(0.5));
    }
    throw InvalidArgument("unknown problem '" + name +
                          "' (expected example1, example2, brownian-linear or constant)");
}

namespace {

// Fourth-order central first and second derivatives of s -> fn(s) at 0.
template <typename Fn>
void central_derivs(Fn&& fn, double h, double& d1, double& d2) {
    const double fm2 = fn(-2 * h), fm1 = fn(-h), f0 = fn(0.0), fp1 = fn(h), fp2 = fn(2 * h);
    d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
    d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h);
}

void require_analytic(const ProblemSpec& p) {
    if (!p.has_analytic()) throw UnsupportedProblem("problem '" + p.name + "' has no analytic solution");
}

void fd_gradient(const ProblemSpec& p, double t, const double* x, double hs, double* grad) {
    double xs[kMaxFieldDim];
    for (std::size_t k = 0; k < p.d1; ++k) xs[k] = x[k];
    for (std::size_t k = 0; k < p.d1; ++k) {
        double d1, d2;
        central_derivs([&](double e) {
            xs[k] = x[k] + e;
            const double v = p.u(t, xs);
            xs[k] = x[k];
            return v;
        }, hs, d1, d2);
        grad[k] = d1;
    }
}

}  // namespace

double pde_residual(const ProblemSpec& p, double t, const double* x, double hs) {
    require_analytic(p);
    const std::size_t d1 = p.d1, d3 = p.d3;
    double grad[kMaxFieldDim];
    fd_gradient(p, t, x, hs, grad);

    double ut, unused;
    central_derivs([&](double e) { return p.u(t + e, x); }, hs, ut, unused);

    const double y = p.u(t, x);
    std::vector<double> z(d3), sig(d1 * d3), bx(d1);
    p.v(t, x, z.data());
    p.sigma(t, x, y, sig.data());
    p.b(t, x, y, z.data(), bx.data());

    // tr(sigma sigma^T D^2 u) = sum_c (second derivative of u along column c).
    double xs[kMaxFieldDim];
    double trace = 0.0;
    for (std::size_t c = 0; c < d3; ++c) {
        double first, second;
        central_derivs([&](double e) {
            for (std::size_t k = 0; k < d1; ++k) xs[k] = x[k] + e * sig[k * d3 + c];
            return p.u(t, xs);
        }, hs, first, second);
        trace += second;
    }
    double drift = 0.0;
    for (std::size_t k = 0; k < d1; ++k) drift += grad[k] * bx[k];
    return ut + drift + 0.5 * trace + p.f(t, x, y, z.data());
}

double decoupling_relation_error(const ProblemSpec& p, double t, const double* x, double hs) {
    require_analytic(p);
    double grad[kMaxFieldDim];
    fd_gradient(p, t, x, hs, grad);
    std::vector<double> z(p.d3), sig(p.d1 * p.d3);
    p.v(t, x, z.data());
    p.sigma(t, x, p.u(t, x), sig.data());
    double worst = 0.0;
    for (std::size_t c = 0; c < p.d3; ++c) {
        double chain = 0.0;
        for (std::size_t k = 0; k < p.d1; ++k) chain += grad[k] * sig[k * p.d3 + c];
        worst = std::max(worst, std::fabs(chain - z[c]));
    }
    return worst;
}

AssumptionConstants example1_constants(const Example1Params& prm) {
    const double d = static_cast<double>(prm.d1);
    const double ky2 = prm.kappa_y * prm.kappa_y;
    const double sb2 = prm.sigma_bar * prm.sigma_bar;
    const double ybound = d;  // |u| <= sum |sin| <= d1
    AssumptionConstants c;
    c.T = prm.T;
    // b = ky*sb*y*1 + kz*z: split |a + b|^2 <= 2|a|^2 + 2|b|^2.
    c.k_b = 0.0;
    c.b_y = 2.0 * ky2 * sb2 * d;
    c.b_z = 2.0 * prm.kappa_z * prm.kappa_z;
    // sigma = sb*y*I (Frobenius norm).
    c.sigma_x = 0.0;
    c.sigma_y = sb2 * d;
    c.Sigma = sb2 * d * ybound * ybound;
    // f: three-way split over (x, y, z). Per-component x-derivative bound:
    // 3/2 sb^2 S^2 + kz sb (|C| + 2|S|) with |S| <= d, C <= d.
    const double fx_comp = 1.5 * sb2 * d * d + prm.kappa_z * prm.sigma_bar * (d + d);
    c.k_f = -prm.r;
    c.K = 3.0 * prm.r * prm.r;
    c.f_x = 3.0 * d * fx_comp * fx_comp;
    c.f_z = 3.0 * ky2 * d;
    const double f_free = 0.5 * sb2 * d * d * d + prm.kappa_z * prm.sigma_bar * d * d;  // |f(t,x,0,0)|
    c.f_0 = 3.0 * f_free * f_free;
    // g = sum sin x_i.
    c.g_x = d;
    c.g_0 = d * d;
    c.b_0 = 0.0;
    c.sigma_0 = 0.0;
    return c;
}

AssumptionConstants example2_constants(double T) {
    AssumptionConstants c;
    c.T = T;
    // b = -1/2 s c (s^2 + z): |1/2 s c| <= 1/4; |d_x b| <= 1/2 (2 + 1/2) with |z| <= 1.
    const double bx = 1.25;
    c.k_b = bx;
    c.b_y = 0.0;
    c.b_z = 2.0 * 0.25 * 0.25;
    c.K = std::max(2.0 * bx * bx, 3.0);  // b's x-part and f's y-part share K
    // sigma = cos(t + x).
    c.sigma_x = 1.0;
    c.sigma_y = 0.0;
    c.Sigma = 1.0;
    c.sigma_0 = 1.0;
    // f = y z - cos(t + x) with |y|, |z| <= 1.
    c.k_f = 1.0;
    c.f_x = 3.0;
    c.f_z = 3.0;
    c.f_0 = 4.0;
    c.g_x = 1.0;
    c.g_0 = 1.0;
    c.b_0 = 0.25;
    return c;
}

}  // namespace fbsde
