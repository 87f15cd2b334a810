#include "fbsde/diagnostics.hpp"

#include "fbsde/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace fbsde {

double gamma0(double x) noexcept {
    if (std::fabs(x) < 1e-8) return 1.0 + x / 2.0 + x * x / 6.0;
    return std::expm1(x) / x;
}

double gamma0_disc(std::size_t i, double x, double h) noexcept {
    const double n = static_cast<double>(i);
    if (std::fabs(x * h) < 1e-8) {
        // Binomial series of ((1 + xh)^i - 1)/x in powers of xh.
        const double a = x * h;
        return n * h * (1.0 + (n - 1.0) / 2.0 * a + (n - 1.0) * (n - 2.0) / 6.0 * a * a);
    }
    return (std::pow(1.0 + x * h, n) - 1.0) / x;
}

double gamma1(double x, double y) {
    constexpr double lo = 1e-6;
    constexpr double hi = 1.0 - 1e-6;
    auto obj = [&](double th) { return th * std::exp(th * x) * gamma0(th * y); };
    return maximize_on_interval(obj, lo, hi, 1024).value;
}

double gamma1_disc(std::size_t N, double x, double y, double h) noexcept {
    double best = 0.0;  // i = 0 term
    for (std::size_t i = 1; i <= N; ++i) {
        best = std::max(best, std::pow(1.0 + x * h, static_cast<double>(i)) * gamma0_disc(i, y, h));
    }
    return best;
}

}  // namespace fbsde
