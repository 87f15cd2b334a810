#include "fbsde/brownian.hpp"
#include "fbsde/error.hpp"
#include "fbsde/rng.hpp"
#include "fbsde/time_grid.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace fbsde;

TEST_CASE("time grid") {
    const TimeGrid g = make_time_grid(0.25, 4);
    CHECK(g.h == 0.0625);
    CHECK(g.nodes == std::vector<double>{0, 0.0625, 0.125, 0.1875, 0.25});
    CHECK(make_time_grid(1.0, 1).nodes == std::vector<double>{0, 1});
    const TimeGrid g32 = make_time_grid(0.25, 32);
    CHECK(g32.h == 0.0078125);
    CHECK(g32.h * 32 == 0.25);
    for (std::size_t i = 0; i < 32; ++i) CHECK(g32.nodes[i] < g32.nodes[i + 1]);
    CHECK(g32.nodes.back() == 0.25);
    CHECK_THROWS_AS(make_time_grid(0.25, 0), InvalidArgument);
    CHECK_THROWS_AS(make_time_grid(0.0, 4), InvalidArgument);
    CHECK_THROWS_AS(make_time_grid(-1.0, 4), InvalidArgument);
}

TEST_CASE("philox4x32-10 known answers") {
    using rng::philox4x32_10;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
          rng::Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          rng::Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          rng::Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform_open stays inside (0,1)") {
    CHECK(rng::uniform_open(0, 0) > 0.0);
    CHECK(rng::uniform_open(0xffffffffu, 0xffffffffu) < 1.0);
}

TEST_CASE("normal quantile inverts the normal cdf") {
    for (double p : {1e-300, 1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97575, 0.999, 1 - 1e-12}) {
        const double z = rng::normal_quantile(p);
        const double back = 0.5 * std::erfc(-z / std::sqrt(2.0));
        CHECK(back == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(rng::normal_quantile(0.5) == 0.0);
    CHECK(rng::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
}

TEST_CASE("brownian store determinism and distinctness") {
    const BrownianStore a(1, 50, 64, 3, 0.25), b(1, 50, 64, 3, 0.25), c(2, 50, 64, 3, 0.25);
    bool differs = false;
    for (std::size_t j = 0; j < 50; ++j) {
        for (std::size_t k = 0; k < 64; ++k) {
            for (std::size_t m = 0; m < 3; ++m) {
                CHECK(a.increment(j, k, m) == b.increment(j, k, m));
                differs = differs || a.increment(j, k, m) != c.increment(j, k, m);
            }
        }
    }
    CHECK(differs);
    std::vector<double> row(64 * 3), part(10 * 3);
    a.fill_path(7, row.data());
    a.fill_steps(7, 20, 30, part.data());
    for (std::size_t k = 0; k < 10; ++k) {
        for (std::size_t m = 0; m < 3; ++m) {
            CHECK(part[k * 3 + m] == row[(20 + k) * 3 + m]);
            CHECK(row[(20 + k) * 3 + m] == a.increment(7, 20 + k, m));
        }
    }
}

TEST_CASE("brownian store rejects bad shapes") {
    CHECK_THROWS_AS(BrownianStore(1, 0, 64, 1, 1.0), InvalidArgument);
    CHECK_THROWS_AS(BrownianStore(1, 10, 0, 1, 1.0), InvalidArgument);
    CHECK_THROWS_AS(BrownianStore(1, 10, 64, 0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(BrownianStore(1, 10, 64, 1, 0.0), InvalidArgument);
    const BrownianStore s(1, 10, 64, 1, 1.0);
    CHECK_THROWS_AS(coarsen_increments(s, 3), InvalidArgument);
}

TEST_CASE("increment moments at full scale") {
    // 15000 paths x 20480 steps, one component.
    const std::size_t paths = 15000, fine = 20480;
    const double T = 0.25;
    const BrownianStore s(1, paths, fine, 1, T);
    const double var = T / fine;
    double sum = 0.0, sq = 0.0;
    std::vector<double> row(fine);
    for (std::size_t j = 0; j < paths; ++j) {
        s.fill_path(j, row.data());
        for (double v : row) {
            sum += v;
            sq += v * v;
        }
    }
    const double n = static_cast<double>(paths) * fine;
    const double mean = sum / n;
    const double sample_var = sq / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(var) / std::sqrt(n));
    CHECK(std::abs(sample_var / var - 1.0) < 0.01);
}

TEST_CASE("Kolmogorov-Smirnov statistic of standardized increments") {
    const std::size_t paths = 500, fine = 2048, d = 2;  // 2.05e6 samples
    const BrownianStore s(3, paths, fine, d, 1.0);
    std::vector<double> z;
    z.reserve(paths * fine * d);
    std::vector<double> row(fine * d);
    const double sd = std::sqrt(s.fine_h());
    for (std::size_t j = 0; j < paths; ++j) {
        s.fill_path(j, row.data());
        for (double v : row) z.push_back(v / sd);
    }
    std::sort(z.begin(), z.end());
    const double n = static_cast<double>(z.size());
    double D = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double F = 0.5 * std::erfc(-z[k] / std::sqrt(2.0));
        D = std::max({D, (k + 1) / n - F, F - k / n});
    }
    CHECK(D < 1.949 / std::sqrt(n));
}

TEST_CASE("coarsening") {
    const BrownianStore s(5, 20, 4, 2, 1.0);
    const Increments id = coarsen_increments(s, 4);
    const Increments two = coarsen_increments(s, 2);
    for (std::size_t j = 0; j < 20; ++j) {
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t k = 0; k < 4; ++k) CHECK(id.at(j, k)[c] == s.increment(j, k, c));
            CHECK(two.at(j, 0)[c] == s.increment(j, 0, c) + s.increment(j, 1, c));
            CHECK(two.at(j, 1)[c] == s.increment(j, 2, c) + s.increment(j, 3, c));
        }
    }

    const BrownianStore big(9, 37, 20480, 3, 0.25);
    const Increments fine32 = coarsen_increments(big, 32);
    const Increments fine8 = coarsen_increments(big, 8);
    const Increments via32 = coarsen_increments(fine32, 8);
    CHECK(fine8.data == via32.data);
    const Increments one = coarsen_increments(big, 1);
    std::vector<double> row(20480 * 3);
    for (std::size_t j = 0; j < 37; ++j) {
        big.fill_path(j, row.data());
        for (std::size_t c = 0; c < 3; ++c) {
            double total = 0.0;
            for (std::size_t k = 0; k < 20480; ++k) total += row[k * 3 + c];
            CHECK(one.at(j, 0)[c] == total);
            double coarse_total = 0.0;
            for (std::size_t i = 0; i < 32; ++i) coarse_total += fine32.at(j, i)[c];
            CHECK(coarse_total == total);
        }
    }
}
