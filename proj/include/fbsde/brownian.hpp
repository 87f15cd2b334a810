#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fbsde {

/// Seeded fine-grid Brownian increments, generated on demand.
///
/// Increment (path, step, comp) is N(0, T/fineN) and depends only on
/// (seed, path, step, comp): nothing is materialized, and any entry can be
/// produced without generating the others. Components are produced in pairs
/// from one Philox block.
class BrownianStore {
public:
    BrownianStore(std::uint64_t seed, std::size_t num_paths, std::size_t fine_n,
                  std::size_t dim_w, double T);

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t num_paths() const noexcept { return num_paths_; }
    std::size_t fine_n() const noexcept { return fine_n_; }
    std::size_t dim_w() const noexcept { return dim_w_; }
    double T() const noexcept { return T_; }
    double fine_h() const noexcept { return T_ / static_cast<double>(fine_n_); }

    double increment(std::size_t path, std::size_t step, std::size_t comp) const;

    /// Writes steps [step_begin, step_end) of one path, step-major
    /// (out[(k - step_begin)*dim_w + c]).
    void fill_steps(std::size_t path, std::size_t step_begin, std::size_t step_end,
                    double* out) const;

    void fill_path(std::size_t path, double* out) const { fill_steps(path, 0, fine_n_, out); }

private:
    std::uint64_t seed_;
    std::size_t num_paths_;
    std::size_t fine_n_;
    std::size_t dim_w_;
    double T_;
    double scale_;
};

BrownianStore sample_fine_increments(std::uint64_t seed, std::size_t num_paths,
                                     std::size_t fine_n, std::size_t dim_w, double T);

/// Materialized increments on a coarse grid, path-major:
/// data[(path*num_steps + i)*dim + c].
struct Increments {
    std::size_t num_paths = 0;
    std::size_t num_steps = 0;
    std::size_t dim = 0;
    double T = 0.0;
    std::vector<double> data;

    const double* at(std::size_t path, std::size_t i) const {
        return data.data() + (path * num_steps + i) * dim;
    }
    double* at(std::size_t path, std::size_t i) { return data.data() + (path * num_steps + i) * dim; }
};

/// Window sums of the fine increments. Throws InvalidArgument unless
/// fineN % N == 0.
Increments coarsen_increments(const BrownianStore& store, std::size_t N);

/// Re-windows already coarse increments to N steps (N must divide num_steps).
Increments coarsen_increments(const Increments& inc, std::size_t N);

}  // namespace fbsde
