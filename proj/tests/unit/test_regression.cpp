#include "fbsde/error.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/regression.hpp"
#include "fbsde/time_grid.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

using namespace fbsde;

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd pinv_solve(const std::vector<double>& rows, std::size_t n, std::size_t p,
                           const std::vector<double>& y) {
    const Eigen::Map<const Mat> A(rows.data(), static_cast<long>(n), static_cast<long>(p));
    const Eigen::Map<const Eigen::VectorXd> b(y.data(), static_cast<long>(n));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(b);
}

// d1 = 1, d3 = 1 problem with b = 0, sigma = s, f = 0, g = x.
ProblemSpec scalar_problem(double s) {
    ProblemSpec p = decoupled_test_problem(DecoupledKind::brownian_linear, 1.0, 0.0);
    p.sigma = [s](double, const double*, double, double* out) { out[0] = s; };
    return p;
}

}  // namespace

TEST_CASE("square invertible system is solved exactly") {
    const std::vector<double> A = {4, 1, 0, 1, 3, 1, 0, 1, 2};
    const std::vector<double> x = {1, -2, 3};
    std::vector<double> b(3, 0.0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) b[i] += A[i * 3 + j] * x[j];
    }
    const auto c = solve_linear_lsq(A, 3, 3, b, 0.0);
    for (int i = 0; i < 3; ++i) {
        double r = b[i];
        for (int j = 0; j < 3; ++j) r -= A[i * 3 + j] * c[j];
        CHECK(std::abs(r) < 1e-13);
        CHECK(c[i] == doctest::Approx(x[i]).epsilon(1e-13));
    }
}

TEST_CASE("zero targets give zero coefficients") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    std::vector<double> A(20 * 4);
    for (auto& a : A) a = nd(gen);
    for (double ridge : {0.0, 1e-6, 1.0}) {
        const auto c = solve_linear_lsq(A, 20, 4, std::vector<double>(20, 0.0), ridge);
        for (double v : c) CHECK(v == 0.0);
    }
}

TEST_CASE("random overdetermined systems match the SVD pseudo-inverse") {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 100, p = 5;
        std::vector<double> A(n * p), y(n);
        for (auto& a : A) a = nd(gen);
        for (auto& v : y) v = nd(gen);
        const auto c = solve_linear_lsq(A, n, p, y, 0.0);
        const Eigen::VectorXd want = pinv_solve(A, n, p, y);
        for (std::size_t k = 0; k < p; ++k) CHECK(c[k] == doctest::Approx(want[k]).epsilon(1e-10));

        // Residual orthogonal to the columns.
        for (std::size_t k = 0; k < p; ++k) {
            double dot = 0.0, scale = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double r = y[j];
                for (std::size_t q = 0; q < p; ++q) r -= A[j * p + q] * c[q];
                dot += A[j * p + k] * r;
                scale += std::abs(A[j * p + k] * y[j]);
            }
            CHECK(std::abs(dot) <= 1e-10 * scale);
        }
    }
}

TEST_CASE("ridge matches the regularized oracle") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    const std::size_t n = 50, p = 4;
    std::vector<double> A(n * p), y(n);
    for (auto& a : A) a = nd(gen);
    for (auto& v : y) v = nd(gen);
    const double ridge = 0.7;
    const auto c = solve_linear_lsq(A, n, p, y, ridge);
    const Eigen::Map<const Mat> M(A.data(), n, p);
    const Eigen::Map<const Eigen::VectorXd> b(y.data(), n);
    const Eigen::MatrixXd G = M.transpose() * M + ridge * Eigen::MatrixXd::Identity(p, p);
    const Eigen::VectorXd want = G.ldlt().solve(M.transpose() * b);
    for (std::size_t k = 0; k < p; ++k) CHECK(c[k] == doctest::Approx(want[k]).epsilon(1e-12));
}

TEST_CASE("singular design without ridge reports rank deficiency") {
    std::vector<double> A = {1, 2, 2, 4, 3, 6};  // second column = 2 x first
    const std::vector<double> y = {1, 2, 3};
    CHECK_THROWS_AS(solve_linear_lsq(A, 3, 2, y, 0.0), RankDeficient);
    CHECK_NOTHROW(solve_linear_lsq(A, 3, 2, y, 1e-8));
}

TEST_CASE("normal equations are symmetric") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nd;
    const std::size_t n = 1500, p = 6;
    std::vector<double> A(n * p), y(n * 2);
    for (auto& a : A) a = nd(gen);
    for (auto& v : y) v = nd(gen);
    const NormalEquations ne = assemble_normal_equations(A.data(), n, p, y.data(), 2);
    const Eigen::Map<const Mat> M(A.data(), n, p);
    const Eigen::MatrixXd G = M.transpose() * M;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            CHECK(ne.gram[i * p + j] == ne.gram[j * p + i]);
            CHECK(ne.gram[i * p + j] == doctest::Approx(G(i, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("differentiation fit identifies an exact linear model") {
    const ProblemSpec pb = scalar_problem(1.0);
    const TimeGrid grid = make_time_grid(1.0, 4);
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    const std::size_t n = 400;
    const double a = 0.3, b = -1.7;
    std::vector<double> X(n), dW(n), Y(n);
    for (std::size_t j = 0; j < n; ++j) {
        X[j] = nd(gen);
        dW[j] = 0.5 * nd(gen);
        Y[j] = a + b * X[j] + b * dW[j];
    }
    const StepData data{n, X.data(), Y.data(), dW.data()};
    RegressionConfig cfg;
    FitReport rep;
    const QuadraticField f = fit_step_differentiation(pb, grid, 1, data, QuadraticField::zero(1), cfg, &rep);
    CHECK(f.coeffs[0] == doctest::Approx(a).epsilon(1e-8));
    CHECK(f.coeffs[1] == doctest::Approx(b).epsilon(1e-8));
    CHECK(std::abs(f.coeffs[2]) < 1e-8);
    CHECK(rep.loss_history.size() == 4);
    CHECK(rep.monotone);
    CHECK(rep.loss_history.back() < 1e-14);
}

TEST_CASE("differentiation fit of a constant target") {
    const ProblemSpec pb = scalar_problem(1.0);
    const TimeGrid grid = make_time_grid(1.0, 4);
    std::mt19937_64 gen(6);
    std::normal_distribution<double> nd;
    const std::size_t n = 300;
    std::vector<double> X(n), dW(n), Y(n, 2.5);
    for (std::size_t j = 0; j < n; ++j) {
        X[j] = nd(gen);
        dW[j] = 0.5 * nd(gen);
    }
    const QuadraticField f =
        fit_step_differentiation(pb, grid, 2, {n, X.data(), Y.data(), dW.data()}, QuadraticField::zero(1), {});
    CHECK(f.coeffs[0] == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(std::abs(f.coeffs[1]) < 1e-9);
    CHECK(std::abs(f.coeffs[2]) < 1e-9);
}

TEST_CASE("inner iterations are idle without nonlinearity and match the oracle") {
    // d1 = 2, d3 = 2, sigma constant, f = 0.
    ProblemSpec pb = decoupled_test_problem(DecoupledKind::brownian_linear, 1.0, 0.0);
    pb.name = "test2d";
    pb.d1 = 2;
    pb.d3 = 2;
    pb.x0 = {0.0, 0.0};
    const double S[4] = {1.0, 0.3, -0.2, 0.8};
    pb.b = [](double, const double*, double, const double*, double* out) { out[0] = out[1] = 0.0; };
    pb.sigma = [S](double, const double*, double, double* out) {
        for (int k = 0; k < 4; ++k) out[k] = S[k];
    };
    pb.g = [](const double* x) { return x[0] * x[1]; };
    pb.grad_g = nullptr;
    pb.u = nullptr;
    pb.v = nullptr;
    const TimeGrid grid = make_time_grid(1.0, 8);
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    const std::size_t n = 2000;
    std::vector<double> X(2 * n), dW(2 * n), Y(n);
    for (std::size_t j = 0; j < n; ++j) {
        X[2 * j] = nd(gen);
        X[2 * j + 1] = nd(gen);
        dW[2 * j] = 0.35 * nd(gen);
        dW[2 * j + 1] = 0.35 * nd(gen);
        Y[j] = std::sin(X[2 * j]) + X[2 * j + 1] * X[2 * j + 1] + 0.1 * nd(gen);
    }
    const StepData data{n, X.data(), Y.data(), dW.data()};
    RegressionConfig one, three;
    one.inner_iters = 1;
    three.inner_iters = 3;
    one.ridge = three.ridge = 0.0;
    const auto f1 = fit_step_differentiation(pb, grid, 3, data, QuadraticField::zero(2), one);
    const auto f3 = fit_step_differentiation(pb, grid, 3, data, QuadraticField::zero(2), three);
    CHECK(f1.coeffs == f3.coeffs);

    // Oracle rows: phi(x) + D phi(x)[S dW].
    std::vector<double> rows(n * 6);
    for (std::size_t j = 0; j < n; ++j) {
        const double x1 = X[2 * j], x2 = X[2 * j + 1];
        const double s1 = S[0] * dW[2 * j] + S[1] * dW[2 * j + 1];
        const double s2 = S[2] * dW[2 * j] + S[3] * dW[2 * j + 1];
        const double r[6] = {1.0, x1 + s1, x2 + s2, x1 * x1 + 2 * x1 * s1, x2 * x2 + 2 * x2 * s2,
                             x1 * x2 + s1 * x2 + x1 * s2};
        for (int k = 0; k < 6; ++k) rows[j * 6 + k] = r[k];
    }
    const Eigen::VectorXd want = pinv_solve(rows, n, 6, Y);
    for (int k = 0; k < 6; ++k) CHECK(f1.coeffs[k] == doctest::Approx(want[k]).epsilon(1e-8));
}

TEST_CASE("direct fit of a constant target") {
    const ProblemSpec pb = scalar_problem(1.0);
    const TimeGrid grid = make_time_grid(1.0, 4);
    std::mt19937_64 gen(8);
    std::normal_distribution<double> nd;
    const std::size_t n = 20000;
    std::vector<double> X(n), dW(n), Y(n, 1.5);
    for (std::size_t j = 0; j < n; ++j) {
        X[j] = std::sqrt(0.5) * nd(gen);
        dW[j] = 0.5 * nd(gen);
    }
    const auto [u, z] = fit_step_direct(pb, grid, 2, {n, X.data(), Y.data(), dW.data()}, TruncBox::unbounded(1), {});
    // beta regresses 1.5 dW / h, whose conditional mean is zero.
    const double tol = 5.0 * 1.5 / std::sqrt(grid.h) / std::sqrt(static_cast<double>(n)) * 3.0;
    for (double x : {-0.5, 0.0, 0.5}) CHECK(std::abs(eval_v_direct(z, {x})[0]) < tol);
    CHECK(eval_u(u, {0.3}) == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("direct fit recovers u(x) = x and z = 1 for Brownian motion") {
    const ProblemSpec pb = scalar_problem(1.0);
    const double T = 1.0;
    const TimeGrid grid = make_time_grid(T, 4);
    const std::size_t i = 2;
    std::mt19937_64 gen(9);
    std::normal_distribution<double> nd;
    const std::size_t n = 100000;
    std::vector<double> X(n), dW(n), Y(n);
    for (std::size_t j = 0; j < n; ++j) {
        X[j] = std::sqrt(grid.t(i)) * nd(gen);
        dW[j] = std::sqrt(grid.h) * nd(gen);
        Y[j] = X[j] + dW[j] + std::sqrt(T - grid.t(i + 1)) * nd(gen);  // W_T
    }
    const auto [u, z] = fit_step_direct(pb, grid, i, {n, X.data(), Y.data(), dW.data()}, TruncBox::unbounded(1), {});
    // Five standard errors of the z target Y dW / h (variance about T/h + 2).
    const double tol = 5.0 * std::sqrt(T / grid.h + 2.0) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(eval_v_direct(z, {0.0})[0] - 1.0) < tol);
    // Residual variance of Y given X is h + T - t_{i+1}; doubled for the basis.
    const double tol_u = 10.0 * std::sqrt((grid.h + T - grid.t(i + 1)) / static_cast<double>(n));
    for (double x : {-0.5, 0.0, 0.5}) CHECK(std::abs(eval_u(u, {x}) - x) < tol_u);
}

TEST_CASE("method and mode parsing") {
    CHECK(parse_method("direct") == Method::direct);
    CHECK(parse_method("differentiation") == Method::differentiation);
    CHECK_THROWS_AS(parse_method("newton"), InvalidArgument);
    CHECK(parse_f_mode("explicit-ynext") == FMode::explicit_ynext);
    CHECK_THROWS_AS(parse_f_mode("x"), InvalidArgument);
    RegressionConfig c;
    CHECK(c.mode_for(Method::differentiation) == FMode::implicit_yz);
    CHECK(c.mode_for(Method::direct) == FMode::explicit_ynext);
    c.inner_iters = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
