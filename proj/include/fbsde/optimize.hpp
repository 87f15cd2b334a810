#pragma once

#include <cstddef>
#include <functional>

namespace fbsde {

struct Extremum {
    double arg = 0;
    double value = 0;
};

/// Golden-section search for a maximum of f on [a, b], assuming f is unimodal
/// there.
Extremum golden_section_max(const std::function<double(double)>& f, double a, double b,
                            double tol = 1e-12, int max_iter = 200);

/// Dense grid of `points` samples on [a, b], then golden-section refinement
/// between the neighbours of the best grid point. Never returns less than the
/// best grid value.
Extremum maximize_on_interval(const std::function<double(double)>& f, double a, double b,
                              std::size_t points);

}  // namespace fbsde
