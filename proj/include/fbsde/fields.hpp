#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <json.hpp>

namespace fbsde {

/// Bumped whenever the feature ordering changes; stored with serialized fields.
inline constexpr int kFeatureOrderingVersion = 1;

/// Largest supported spatial dimension; evaluation uses fixed stack scratch.
inline constexpr std::size_t kMaxFieldDim = 16;

/// P = 1 + 2*d1 + d1*(d1-1)/2.
std::size_t feature_count(std::size_t d1) noexcept;

/// Quadratic features in the order
///   1, x_1..x_d, x_1^2..x_d^2, x_a*x_b (a < b, lexicographic).
/// out must hold feature_count(d1) values.
void features(const double* x, std::size_t d1, double* out) noexcept;

/// Checked variant; throws InvalidArgument if x.size() != d1.
std::vector<double> features(const std::vector<double>& x, std::size_t d1);

/// Per-component truncation interval. Inputs are clamped to [lo, hi] and then
/// shifted by `center` before the features are formed.
struct TruncBox {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> center;

    std::size_t dim() const noexcept { return lo.size(); }

    /// Box [-inf, inf]^d with center 0 (no truncation).
    static TruncBox unbounded(std::size_t d1);
    /// Box [lo, hi] with center 0.
    static TruncBox from_bounds(std::vector<double> lo, std::vector<double> hi);
    /// Box centered at x0 with half-width radius; center = x0.
    static TruncBox around(const std::vector<double>& x0, double radius);

    /// xt = clamp(x) - center; active[k] = 1 if x_k was not clamped, else 0.
    void prepare(const double* x, double* xt, double* active) const noexcept;
};

/// u(x) = coeffs . features(clamp(x) - center).
struct QuadraticField {
    std::size_t d1 = 0;
    std::vector<double> coeffs;
    TruncBox box;

    static QuadraticField zero(std::size_t d1, TruncBox box);
    static QuadraticField zero(std::size_t d1) { return zero(d1, TruncBox::unbounded(d1)); }
};

/// v(x) = features(clamp(x) - center)^T . coeffs, with coeffs P x d3 row-major.
struct DirectZField {
    std::size_t d1 = 0;
    std::size_t d3 = 0;
    std::vector<double> coeffs;
    TruncBox box;

    static DirectZField zero(std::size_t d1, std::size_t d3, TruncBox box);
};

/// sigma(t, x, y) written to out as d1 x d3 row-major.
using SigmaFn = std::function<void(double t, const double* x, double y, double* out)>;

double eval_u(const QuadraticField& field, const double* x) noexcept;
double eval_u(const QuadraticField& field, const std::vector<double>& x);

/// Analytic gradient of the clamped polynomial; zero along clamped directions.
void grad_u(const QuadraticField& field, const double* x, double* out) noexcept;
std::vector<double> grad_u(const QuadraticField& field, const std::vector<double>& x);

/// grad_u(x)^T sigma(t, x, u(x)). sigma_buf, if given, must hold d1*d3 values.
void eval_v_diff(const QuadraticField& field, const SigmaFn& sigma, std::size_t d3, double t,
                 const double* x, double* out, double* sigma_buf = nullptr);
std::vector<double> eval_v_diff(const QuadraticField& field, const SigmaFn& sigma, std::size_t d3,
                                double t, const std::vector<double>& x);

void eval_v_direct(const DirectZField& field, const double* x, double* out) noexcept;
std::vector<double> eval_v_direct(const DirectZField& field, const std::vector<double>& x);

/// Directional derivative of every feature at the prepared point xt along s,
/// with s_k ignored where active[k] == 0. out holds feature_count(d1) values.
void feature_directional(const double* xt, const double* active, const double* s, std::size_t d1,
                         double* out) noexcept;

/// The same polynomial written in features(x - new_center). Clamping still
/// follows field.box bounds; only the expansion point changes.
std::vector<double> recenter_coeffs(const QuadraticField& field, const std::vector<double>& new_center);

nlohmann::json to_json(const QuadraticField& field, long time_index);
nlohmann::json to_json(const DirectZField& field, long time_index);
QuadraticField quadratic_field_from_json(const nlohmann::json& j);
DirectZField direct_field_from_json(const nlohmann::json& j);

}  // namespace fbsde
