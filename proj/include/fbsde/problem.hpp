#pragma once

#include "fbsde/diagnostics.hpp"
#include "fbsde/fields.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fbsde {

// Coefficient callbacks take raw pointers into caller-owned buffers so the hot
// loops never allocate. z is a row vector of length d3 (single backward
// component).
using DriftFn = std::function<void(double t, const double* x, double y, const double* z, double* out)>;
using DriverFn = std::function<double(double t, const double* x, double y, const double* z)>;
using TerminalFn = std::function<double(const double* x)>;
using TerminalGradFn = std::function<void(const double* x, double* out)>;
using ScalarFieldFn = std::function<double(double t, const double* x)>;
using VectorFieldFn = std::function<void(double t, const double* x, double* out)>;

/// dX = b(t,X,Y,Z) dt + sigma(t,X,Y) dW,  dY = -f(t,X,Y,Z) dt + Z dW,
/// X_0 = x0, Y_T = g(X_T).
struct ProblemSpec {
    std::string name;
    std::size_t d1 = 0;
    std::size_t d3 = 0;
    std::vector<double> x0;
    double T = 0.0;

    DriftFn b;        // out: d1
    SigmaFn sigma;    // out: d1 x d3 row-major
    DriverFn f;
    TerminalFn g;
    TerminalGradFn grad_g;  // optional
    ScalarFieldFn u;        // optional analytic decoupling field
    VectorFieldFn v;        // optional, out: d3

    bool has_analytic() const noexcept { return static_cast<bool>(u) && static_cast<bool>(v); }

    /// Throws InvalidArgument on inconsistent dimensions or missing callbacks.
    void validate() const;
};

/// grad g: analytic when supplied, else central differences with step
/// 1e-5 * (1 + |x_k|).
void terminal_gradient(const ProblemSpec& p, const double* x, double* out);

struct Example1Params {
    double kappa_y = 0.1;
    double kappa_z = 0.1;
    double sigma_bar = 1.0;
    double r = 1.0;
    std::size_t d1 = 4;
    double T = 0.25;
    double x0 = 0.7853981633974483;  // pi/4 in every component
};

/// b = kappa_y sigma_bar y 1 + kappa_z z^T, sigma = sigma_bar y I, g = sum sin x_i,
/// u = e^{-r(T-t)} sum sin x_i.
ProblemSpec example1_problem(const Example1Params& p = {});

/// Scalar problem with Z in the drift only:
/// b = -1/2 sin(s) cos(s) (sin^2(s) + z), sigma = cos(s), f = y z - cos(s),
/// g = sin(T + x), with s = t + x; u = sin(s), v = cos^2(s).
ProblemSpec example2_problem(double T = 0.25, double x0 = 1.5);

enum class DecoupledKind { brownian_linear, constant };

/// brownian-linear: b = 0, sigma = 1, f = 0, g(x) = x (u = x, v = 1).
/// constant: b = 0, sigma = 1, f = 0, g = value (u = value, v = 0).
ProblemSpec decoupled_test_problem(DecoupledKind kind, double T = 0.25, double x0 = 0.0,
                                   double value = 0.5);

/// Overrides accepted by make_problem; unset fields keep each problem's default.
struct ProblemOptions {
    std::optional<double> kappa_y, kappa_z, sigma_bar, r, T, x0, value;
    std::optional<std::size_t> d1;
};

/// "example1", "example2", "brownian-linear" or "constant".
ProblemSpec make_problem(const std::string& name, const ProblemOptions& opts = {});

/// u_t + grad u . b + 1/2 tr(sigma sigma^T D^2 u) + f at (t, x), with
/// derivatives of the analytic u by fourth-order central differences.
double pde_residual(const ProblemSpec& p, double t, const double* x, double fd_step = 1e-3);

/// max_c |v_c - (grad u^T sigma)_c| at (t, x), grad u by fourth-order differences.
double decoupling_relation_error(const ProblemSpec& p, double t, const double* x, double fd_step = 1e-4);

/// Assumption constants for the example problems, derived by hand on the
/// region the solution visits (|y| <= d1 for example1, |y|, |z| <= 1 for
/// example2). example1's sigma is unbounded in y, so Sigma uses that region.
AssumptionConstants example1_constants(const Example1Params& p = {});
AssumptionConstants example2_constants(double T = 0.25);

}  // namespace fbsde
