#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

namespace fbsde {

/// Lipschitz, monotonicity and growth constants of the coefficients.
/// Squared-Lipschitz and growth constants must be nonnegative; k_b and k_f
/// are one-sided (monotonicity) constants and may be negative.
struct AssumptionConstants {
    double k_b = 0.0;
    double k_f = 0.0;
    double K = 0.0;
    double b_y = 0.0;
    double b_z = 0.0;
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double f_x = 0.0;
    double f_z = 0.0;
    double g_x = 0.0;
    double b_0 = 0.0;
    double sigma_0 = 0.0;
    double f_0 = 0.0;
    double g_0 = 0.0;
    double Sigma = 0.0;  // sup |sigma|^2
    double T = 1.0;

    /// Throws InvalidArgument naming the first offending field.
    void validate() const;

    /// 2*sigma_x + 2*sigma_y + 2*Sigma: the factor relating the squared
    /// Lipschitz constant of v = u_x * sigma to that of u.
    double lip_relation() const noexcept { return 2.0 * sigma_x + 2.0 * sigma_y + 2.0 * Sigma; }
};

// Gamma functions.

/// (e^x - 1)/x, with the limit 1 at x = 0.
double gamma0(double x) noexcept;
/// ((1 + x h)^i - 1)/x, with the limit i*h at x = 0.
double gamma0_disc(std::size_t i, double x, double h) noexcept;
/// sup over 0 < theta < 1 of theta e^{theta x} gamma0(theta y).
double gamma1(double x, double y);
/// max over 0 <= i <= N of (1 + x h)^i gamma0_disc(i, y, h).
double gamma1_disc(std::size_t N, double x, double y, double h) noexcept;

// Step-size dependent constants.

struct Lambdas {
    double lambda2 = 0.0;
    double lambda3 = 0.0;
};

/// lambda2 = sqrt(h), lambda3 = 1 - (1 + K) sqrt(h) - K h. Throws
/// InvalidArgument if lambda3 <= 0 (h too large for this K).
Lambdas default_lambdas(const AssumptionConstants& c, double h);

struct AConstants {
    double A1 = 0, A2 = 0, A3 = 0, A4 = 0, A5 = 0;
    double B1 = 0, B2 = 0;
};

AConstants compute_A_constants(const AssumptionConstants& c, double h, double lambda2, double lambda3);
AConstants compute_A_constants(const AssumptionConstants& c, double h);
/// h -> 0 limits (lambda2 -> 0, lambda3 -> 1).
AConstants limit_A_constants(const AssumptionConstants& c) noexcept;

struct DConstants {
    double D1 = 0, D2 = 0, D3 = 0;
};

DConstants compute_D_constants(const AssumptionConstants& c, double h, double Lbar) noexcept;

struct L0L1 {
    double L0 = 0;
    double L1 = 0;
};

L0L1 compute_L0_L1(const AssumptionConstants& c) noexcept;

struct CFunctions {
    double c0 = 0, c1 = 0, L2 = 0;
};

/// Continuous (h -> 0) c0(G), c1(G), L2(G).
CFunctions compute_c_functions(const AssumptionConstants& c, double G, double Lbar);
/// Discrete versions at step h = T/N with the given lambdas.
CFunctions compute_c_functions_disc(const AssumptionConstants& c, double G, double Lbar, std::size_t N,
                                    double lambda2, double lambda3);

/// c2(lambda1, L, G) in the h -> 0 form.
double c2_continuous(const AssumptionConstants& c, double lambda1, double L, double G, double Lbar);
/// c2(lambda1, h, L, G) at h = T/N.
double c2_disc(const AssumptionConstants& c, double lambda1, std::size_t N, double L, double G,
               double Lbar, double lambda2, double lambda3);

struct C2Result {
    double value = 0;
    double lambda1 = 0;
};

/// inf over lambda1 > 0 of c2_continuous, by a log-spaced grid on [1e-6, 1e6]
/// refined with golden-section search.
C2Result compute_c2(const AssumptionConstants& c, double L, double G, double Lbar);

struct DiagnosticsReport {
    AConstants A;
    DConstants D;
    double L0 = 0, L1 = 0, Lbar = 0;
    double c0_at_L1 = 0, c1_at_L1 = 0, L2_at_L1 = 0, c2_at_L1L1 = 0;
    bool conditionL0 = false, conditionC1 = false, conditionC2 = false;
    double lambda2 = 0, lambda3 = 0, lambda1_star = 0, h = 0;
};

/// Full report. A, B, D constants are evaluated at step h (default T/1024,
/// halved until the default lambda3 is positive); the c-functions use their
/// h -> 0 forms with Lbar = 1.01 * L1.
DiagnosticsReport check_conditions(const AssumptionConstants& c, double h = 0.0);

/// Parses "key = value" lines (blank lines and '#' comments allowed). Every
/// AssumptionConstants field must appear exactly once. Errors name the line
/// or the missing key.
AssumptionConstants parse_constants(const std::string& text);
AssumptionConstants load_constants(const std::string& path);

nlohmann::json to_json(const AssumptionConstants& c);
nlohmann::json to_json(const DiagnosticsReport& r);
std::string format_table(const DiagnosticsReport& r);

}  // namespace fbsde
