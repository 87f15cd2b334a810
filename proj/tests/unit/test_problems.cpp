#include "fbsde/error.hpp"
#include "fbsde/problem.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace fbsde;

namespace {

void check_pde_and_relation(const ProblemSpec& p, double lo, double hi, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> ut(0.02 * p.T, 0.98 * p.T), ux(lo, hi);
    std::vector<double> x(p.d1);
    for (int k = 0; k < 100; ++k) {
        const double t = ut(gen);
        for (auto& v : x) v = ux(gen);
        CHECK(std::abs(pde_residual(p, t, x.data())) <= 1e-6);
        CHECK(decoupling_relation_error(p, t, x.data()) <= 1e-6);
    }
    for (int k = 0; k < 20; ++k) {
        for (auto& v : x) v = ux(gen);
        CHECK(p.u(p.T, x.data()) == doctest::Approx(p.g(x.data())).epsilon(1e-14));
    }
}

}  // namespace

TEST_CASE("first example") {
    const ProblemSpec p = example1_problem();
    CHECK(p.d1 == 4);
    CHECK(p.d3 == 4);
    CHECK(p.T == 0.25);
    const double u0 = p.u(0.0, p.x0.data());
    CHECK(u0 == doctest::Approx(std::exp(-0.25) * 2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(u0 == doctest::Approx(2.2027813).epsilon(1e-7));
    check_pde_and_relation(p, -1.0, 2.5, 1);
    // f sums all z components.
    const double x[4] = {0.1, 0.2, 0.3, 0.4}, z1[4] = {0, 0, 0, 0}, z2[4] = {1, 1, 1, 1};
    CHECK(p.f(0.1, x, 1.0, z1) - p.f(0.1, x, 1.0, z2) == doctest::Approx(4 * 0.1));
}

TEST_CASE("first example with other parameters stays consistent") {
    Example1Params prm;
    prm.kappa_y = 0.3;
    prm.kappa_z = 0.2;
    prm.sigma_bar = 0.7;
    prm.r = 0.5;
    prm.d1 = 3;
    prm.T = 0.5;
    check_pde_and_relation(example1_problem(prm), -2.0, 2.0, 2);
}

TEST_CASE("second example") {
    const ProblemSpec p = example2_problem();
    CHECK(p.d1 == 1);
    CHECK(p.u(0.0, p.x0.data()) == doctest::Approx(std::sin(1.5)).epsilon(1e-14));
    CHECK(p.u(0.0, p.x0.data()) == doctest::Approx(0.997495).epsilon(1e-6));
    check_pde_and_relation(p, -3.0, 3.0, 3);
}

TEST_CASE("decoupled test problems") {
    const ProblemSpec bl = decoupled_test_problem(DecoupledKind::brownian_linear);
    check_pde_and_relation(bl, -2.0, 2.0, 4);
    const double x = 0.7;
    CHECK(bl.u(0.1, &x) == x);
    const ProblemSpec c = decoupled_test_problem(DecoupledKind::constant, 0.25, 0.0, 0.5);
    CHECK(c.u(0.1, &x) == 0.5);
    check_pde_and_relation(c, -2.0, 2.0, 5);
}

TEST_CASE("terminal gradient falls back to finite differences") {
    ProblemSpec p = example1_problem();
    const double x[4] = {0.1, -0.4, 1.2, 2.0};
    double exact[4], fd[4];
    terminal_gradient(p, x, exact);
    p.grad_g = nullptr;
    terminal_gradient(p, x, fd);
    for (int k = 0; k < 4; ++k) {
        CHECK(exact[k] == doctest::Approx(std::cos(x[k])).epsilon(1e-14));
        CHECK(fd[k] == doctest::Approx(exact[k]).epsilon(1e-8));
    }
}

TEST_CASE("make_problem") {
    CHECK(make_problem("example1").name == "example1");
    CHECK(make_problem("example2").name == "example2");
    CHECK(make_problem("brownian-linear").name == "brownian-linear");
    CHECK(make_problem("constant").name == "constant");
    ProblemOptions o;
    o.d1 = 2;
    o.T = 0.5;
    const ProblemSpec p = make_problem("example1", o);
    CHECK(p.d1 == 2);
    CHECK(p.T == 0.5);
    CHECK_THROWS_AS(make_problem("example3"), InvalidArgument);
    ProblemOptions bad;
    bad.T = -1.0;
    CHECK_THROWS_AS(make_problem("example2", bad), InvalidArgument);
}

TEST_CASE("validate catches inconsistent specs") {
    ProblemSpec p = example2_problem();
    p.x0 = {1.0, 2.0};
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    ProblemSpec q = example2_problem();
    q.f = nullptr;
    CHECK_THROWS_AS(q.validate(), InvalidArgument);
}
