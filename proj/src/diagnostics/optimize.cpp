#include "fbsde/optimize.hpp"

#include "fbsde/error.hpp"

#include <algorithm>
#include <cmath>

namespace fbsde {

Extremum golden_section_max(const std::function<double(double)>& f, double a, double b, double tol,
                            int max_iter) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > tol * (1.0 + std::fabs(a) + std::fabs(b)); ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? Extremum{c, fc} : Extremum{d, fd};
}

Extremum maximize_on_interval(const std::function<double(double)>& f, double a, double b,
                              std::size_t points) {
    if (points < 2 || !(a < b)) throw InvalidArgument("maximize_on_interval: need a < b and >= 2 points");
    std::size_t best = 0;
    double best_val = -INFINITY;
    const double step = (b - a) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) {
        const double v = f(a + step * static_cast<double>(k));
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    const double lo = a + step * static_cast<double>(best == 0 ? 0 : best - 1);
    const double hi = a + step * static_cast<double>(std::min(best + 1, points - 1));
    Extremum refined = golden_section_max(f, lo, hi);
    const Extremum grid{a + step * static_cast<double>(best), best_val};
    return refined.value > grid.value ? refined : grid;
}

}  // namespace fbsde
