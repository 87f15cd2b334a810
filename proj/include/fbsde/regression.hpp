#pragma once

#include "fbsde/fields.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/time_grid.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fbsde {

enum class Method { differentiation, direct };

/// Which Y enters the driver f in the fitted target.
/// implicit_yz: f(t, x, y, z) at the current iterate of the fitted fields.
/// explicit_ynext: f(t, x, Y_next, z).
enum class FMode { implicit_yz, explicit_ynext };

std::string to_string(Method m);
std::string to_string(FMode m);
Method parse_method(const std::string& s);
FMode parse_f_mode(const std::string& s);

struct RegressionConfig {
    /// Relative ridge: ridge * trace(G) / P is added to the Gram diagonal.
    double ridge = 1e-10;
    int inner_iters = 3;
    /// Unset: implicit_yz for differentiation, explicit_ynext for direct.
    std::optional<FMode> f_mode;

    FMode mode_for(Method m) const noexcept {
        if (f_mode) return *f_mode;
        return m == Method::differentiation ? FMode::implicit_yz : FMode::explicit_ynext;
    }
    void validate() const;
};

/// Accumulated normal equations; gram is p x p (full symmetric), rhs p x nrhs.
struct NormalEquations {
    std::size_t p = 0;
    std::size_t nrhs = 0;
    std::vector<double> gram;
    std::vector<double> rhs;
};

/// rows: n x p row-major; targets: n x nrhs row-major. Rows are reduced in
/// fixed-size chunks combined in index order, so the result does not depend
/// on the worker count.
NormalEquations assemble_normal_equations(const double* rows, std::size_t n, std::size_t p,
                                          const double* targets, std::size_t nrhs);

/// Solves (gram + ridge I) C = rhs by Cholesky with one step of iterative
/// refinement; returns C as p x nrhs. Throws RankDeficient if a pivot falls
/// below 1e-13 * max diagonal.
std::vector<double> solve_normal_equations(const NormalEquations& ne, double ridge);

/// argmin_c |targets - rows c|^2 + ridge |c|^2 (absolute ridge).
std::vector<double> solve_linear_lsq(const std::vector<double>& rows, std::size_t n, std::size_t p,
                                     const std::vector<double>& targets, double ridge);

/// Samples at one time step: X (n x d1), Y_next (n), dW (n x d3), row-major.
struct StepData {
    std::size_t n = 0;
    const double* X = nullptr;
    const double* y_next = nullptr;
    const double* dW = nullptr;
};

struct FitReport {
    /// Empirical loss at the warm start and after each inner iteration.
    std::vector<double> loss_history;
    bool monotone = true;
};

/// Single-optimization step: fits u(.; theta) so that
///   Y_next ~ u - h f(t, x, u, z) + z dW,  z = grad u^T sigma(t, x, u)
/// by repeated linearization around the current iterate (initially `warm`).
QuadraticField fit_step_differentiation(const ProblemSpec& problem, const TimeGrid& grid, std::size_t i,
                                        const StepData& data, const QuadraticField& warm,
                                        const RegressionConfig& cfg, FitReport* report = nullptr);

/// Two-regression baseline: beta from h^-1 Y_next dW, then alpha from
/// Y_next + h f(t, x, ., z_beta(x)).
std::pair<QuadraticField, DirectZField> fit_step_direct(const ProblemSpec& problem, const TimeGrid& grid,
                                                        std::size_t i, const StepData& data,
                                                        const TruncBox& box, const RegressionConfig& cfg);

}  // namespace fbsde
