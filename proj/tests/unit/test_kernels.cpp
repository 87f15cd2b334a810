#include "fbsde/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace fbsde::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    for (auto& x : v) x = nd(gen);
    return v;
}

}  // namespace

TEST_CASE("scalar dot and gram_update against naive loops") {
    const auto& s = table(Isa::scalar);
    const auto a = random_vec(37, 1), b = random_vec(37, 2);
    double want = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) want += a[k] * b[k];
    CHECK(s.dot(a.data(), b.data(), a.size()) == doctest::Approx(want).epsilon(1e-14));

    const std::size_t n = 13, p = 5, r = 2;
    const auto rows = random_vec(n * p, 3), tg = random_vec(n * r, 4);
    std::vector<double> gram(p * p, 0.0), rhs(p * r, 0.0);
    s.gram_update(rows.data(), n, p, tg.data(), r, gram.data(), rhs.data());
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double g = 0.0;
            for (std::size_t k = 0; k < n; ++k) g += rows[k * p + i] * rows[k * p + j];
            CHECK(gram[i * p + j] == doctest::Approx(g).epsilon(1e-13));
        }
        for (std::size_t c = 0; c < r; ++c) {
            double q = 0.0;
            for (std::size_t k = 0; k < n; ++k) q += rows[k * p + i] * tg[k * r + c];
            CHECK(rhs[i * r + c] == doctest::Approx(q).epsilon(1e-13));
        }
    }
}

TEST_CASE("window_sum and sq_diff_accumulate definitions") {
    const auto& s = table(Isa::scalar);
    const std::vector<double> in = {1, 2, 3, 4, 5, 6, 7, 8};  // 4 steps x width 2
    std::vector<double> out(4);
    s.window_sum(in.data(), 2, 2, 2, out.data());
    CHECK(out == std::vector<double>{4, 6, 12, 14});

    const std::vector<double> a = {1, 2, 3}, b = {0, 4, 3};
    std::vector<double> acc = {1, 1, 1};
    s.sq_diff_accumulate(a.data(), b.data(), 3, acc.data());
    CHECK(acc == std::vector<double>{2, 5, 1});
}

TEST_CASE("avx2 variants match scalar") {
    if (!isa_supported(Isa::avx2)) {
        MESSAGE("avx2 not available on this CPU; skipped");
        return;
    }
    const auto& s = table(Isa::scalar);
    const auto& v = table(Isa::avx2);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1001u}) {
        const auto a = random_vec(n, 10 + n), b = random_vec(n, 20 + n);
        const double ds = s.dot(a.data(), b.data(), n);
        const double dv = v.dot(a.data(), b.data(), n);
        double mag = 0.0;
        for (std::size_t k = 0; k < n; ++k) mag += std::abs(a[k] * b[k]);
        CHECK(std::abs(ds - dv) <= 1e-14 * (mag + 1.0));

        std::vector<double> acc_s(n, 0.5), acc_v(n, 0.5);
        s.sq_diff_accumulate(a.data(), b.data(), n, acc_s.data());
        v.sq_diff_accumulate(a.data(), b.data(), n, acc_v.data());
        CHECK(acc_s == acc_v);
    }
    for (std::size_t p : {1u, 4u, 5u, 15u, 22u}) {
        for (std::size_t r : {1u, 4u}) {
            const std::size_t n = 101;
            const auto rows = random_vec(n * p, 7 * p + r), tg = random_vec(n * r, 11 * p + r);
            std::vector<double> gs(p * p, 0.0), gv(p * p, 0.0), rs(p * r, 0.0), rv(p * r, 0.0);
            s.gram_update(rows.data(), n, p, tg.data(), r, gs.data(), rs.data());
            v.gram_update(rows.data(), n, p, tg.data(), r, gv.data(), rv.data());
            for (std::size_t i = 0; i < p; ++i) {
                for (std::size_t j = i; j < p; ++j) CHECK(gv[i * p + j] == doctest::Approx(gs[i * p + j]).epsilon(1e-12));
                for (std::size_t c = 0; c < r; ++c) CHECK(rv[i * r + c] == doctest::Approx(rs[i * r + c]).epsilon(1e-12));
            }
        }
    }
    for (std::size_t width : {1u, 2u, 3u, 4u, 5u, 8u}) {
        const std::size_t window = 5, n_out = 7;
        const auto in = random_vec(n_out * window * width, 40 + width);
        std::vector<double> os(n_out * width), ov(n_out * width);
        s.window_sum(in.data(), n_out, window, width, os.data());
        v.window_sum(in.data(), n_out, window, width, ov.data());
        CHECK(os == ov);
    }
}

TEST_CASE("active table can be switched") {
    const Isa before = active().isa;
    set_active(Isa::scalar);
    CHECK(active().isa == Isa::scalar);
    CHECK(isa_name(Isa::scalar) == "scalar");
    set_active(before);
    CHECK(active().isa == before);
}
