#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the regression, coarsening and error
// reductions. Each kernel has a scalar reference implementation and, on x86-64,
// an AVX2/FMA variant selected at runtime. Variants that avoid FMA
// (window_sum, sq_diff_accumulate) are bit-identical to the scalar path; dot
// and gram_update reassociate or fuse and agree to rounding.

namespace fbsde::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    const char* name;

    /// Sum of a[k]*b[k].
    double (*dot)(const double* a, const double* b, std::size_t n);

    /// gram += rowsᵀ·rows (upper triangle only, j >= i) and
    /// rhs += rowsᵀ·targets.
    ///
    /// rows is n_rows × p row-major, targets n_rows × n_rhs row-major,
    /// gram p × p row-major, rhs p × n_rhs row-major.
    void (*gram_update)(const double* rows, std::size_t n_rows, std::size_t p,
                        const double* targets, std::size_t n_rhs, double* gram, double* rhs);

    /// out[i*width + c] = sum over k < window of in[(i*window + k)*width + c],
    /// for i < n_out. Summation runs in increasing k.
    void (*window_sum)(const double* in, std::size_t n_out, std::size_t window,
                       std::size_t width, double* out);

    /// acc[k] += (a[k] - b[k])^2.
    void (*sq_diff_accumulate)(const double* a, const double* b, std::size_t n, double* acc);
};

bool isa_supported(Isa isa) noexcept;

/// Kernel table for a specific ISA. Throws InvalidArgument if the CPU lacks it.
const KernelTable& table(Isa isa);

/// The table used by the library. Defaults to the best supported ISA; the
/// FBSDE_ISA environment variable ("scalar" or "avx2") overrides on first use.
const KernelTable& active();

/// Overrides the active table for the rest of the process.
void set_active(Isa isa);

std::string_view isa_name(Isa isa) noexcept;

namespace detail {
extern const KernelTable scalar_table;
#if defined(FBSDE_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace fbsde::kernels
