#pragma once

#include <cstddef>
#include <vector>

namespace fbsde {

/// Uniform grid t_i = i*h on [0, T].
struct TimeGrid {
    double T = 0.0;
    std::size_t N = 0;
    double h = 0.0;
    std::vector<double> nodes;  // N + 1 entries

    double t(std::size_t i) const { return nodes[i]; }
};

/// Throws InvalidArgument if T <= 0 or N == 0.
TimeGrid make_time_grid(double T, std::size_t N);

}  // namespace fbsde
