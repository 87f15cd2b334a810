#pragma once

#include <array>
#include <cstdint>

namespace fbsde::rng {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al. 2011). Stateless: the output is a
/// pure function of (counter, key).
Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) noexcept;

/// Uniform in the open interval (0, 1) built from 52 bits of (hi, lo).
/// (With 53 bits the top value would round up to 1.0.)
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 20) | (lo >> 12);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Standard normal quantile, Wichura's AS241 (PPND16). p must lie in (0, 1).
double normal_quantile(double p) noexcept;

/// SplitMix64 finalizer, used to derive independent seeds (e.g. per iteration).
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace fbsde::rng
