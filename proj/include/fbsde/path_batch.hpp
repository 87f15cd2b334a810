#pragma once

#include <cstddef>
#include <vector>

namespace fbsde {

/// Simulated (X, Y, Z) at the grid nodes, path-major:
/// X[(j*num_nodes + i)*d1 + k], Y[j*num_nodes + i], Z[(j*num_nodes + i)*d3 + c].
struct PathBatch {
    std::size_t num_paths = 0;
    std::size_t num_nodes = 0;
    std::size_t d1 = 0;
    std::size_t d3 = 0;
    std::vector<double> X;
    std::vector<double> Y;
    std::vector<double> Z;

    PathBatch() = default;
    PathBatch(std::size_t paths, std::size_t nodes, std::size_t d1_, std::size_t d3_)
        : num_paths(paths), num_nodes(nodes), d1(d1_), d3(d3_), X(paths * nodes * d1_, 0.0),
          Y(paths * nodes, 0.0), Z(paths * nodes * d3_, 0.0) {}

    double* x(std::size_t j, std::size_t i) { return X.data() + (j * num_nodes + i) * d1; }
    const double* x(std::size_t j, std::size_t i) const { return X.data() + (j * num_nodes + i) * d1; }
    double& y(std::size_t j, std::size_t i) { return Y[j * num_nodes + i]; }
    double y(std::size_t j, std::size_t i) const { return Y[j * num_nodes + i]; }
    double* z(std::size_t j, std::size_t i) { return Z.data() + (j * num_nodes + i) * d3; }
    const double* z(std::size_t j, std::size_t i) const { return Z.data() + (j * num_nodes + i) * d3; }
};

}  // namespace fbsde
