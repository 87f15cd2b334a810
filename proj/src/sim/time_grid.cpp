#include "fbsde/time_grid.hpp"

#include "fbsde/error.hpp"

#include <cmath>

namespace fbsde {

TimeGrid make_time_grid(double T, std::size_t N) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("time grid: T must be positive");
    if (N == 0) throw InvalidArgument("time grid: N must be at least 1");
    TimeGrid g;
    g.T = T;
    g.N = N;
    g.h = T / static_cast<double>(N);
    g.nodes.resize(N + 1);
    for (std::size_t i = 0; i < N; ++i) g.nodes[i] = static_cast<double>(i) * g.h;
    // i*h can round a hair away from T at the last node.
    g.nodes[N] = T;
    return g;
}

}  // namespace fbsde
