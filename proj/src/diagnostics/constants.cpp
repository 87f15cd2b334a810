#include "fbsde/diagnostics.hpp"

#include "fbsde/error.hpp"
#include "fbsde/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fbsde {
namespace {

struct Field {
    const char* name;
    double AssumptionConstants::*member;
    bool signed_ok;
};

constexpr std::array<Field, 16> kFields{{
    {"k_b", &AssumptionConstants::k_b, true},
    {"k_f", &AssumptionConstants::k_f, true},
    {"K", &AssumptionConstants::K, false},
    {"b_y", &AssumptionConstants::b_y, false},
    {"b_z", &AssumptionConstants::b_z, false},
    {"sigma_x", &AssumptionConstants::sigma_x, false},
    {"sigma_y", &AssumptionConstants::sigma_y, false},
    {"f_x", &AssumptionConstants::f_x, false},
    {"f_z", &AssumptionConstants::f_z, false},
    {"g_x", &AssumptionConstants::g_x, false},
    {"b_0", &AssumptionConstants::b_0, false},
    {"sigma_0", &AssumptionConstants::sigma_0, false},
    {"f_0", &AssumptionConstants::f_0, false},
    {"g_0", &AssumptionConstants::g_0, false},
    {"Sigma", &AssumptionConstants::Sigma, false},
    {"T", &AssumptionConstants::T, false},
}};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void AssumptionConstants::validate() const {
    for (const auto& f : kFields) {
        const double v = this->*f.member;
        if (!std::isfinite(v)) throw InvalidArgument(std::string("constant ") + f.name + " is not finite");
        if (!f.signed_ok && v < 0.0) throw InvalidArgument(std::string("constant ") + f.name + " must be nonnegative");
    }
    if (!(T > 0.0)) throw InvalidArgument("constant T must be positive");
}

Lambdas default_lambdas(const AssumptionConstants& c, double h) {
    if (!(h > 0.0)) throw InvalidArgument("default lambdas: h must be positive");
    const double s = std::sqrt(h);
    Lambdas l{s, 1.0 - (1.0 + c.K) * s - c.K * h};
    if (!(l.lambda3 > 0.0)) {
        throw InvalidArgument("default lambdas: lambda3 = 1 - (1+K)sqrt(h) - K h must be positive; "
                              "reduce h (currently " + std::to_string(h) + ")");
    }
    return l;
}

AConstants compute_A_constants(const AssumptionConstants& c, double h, double lambda2, double lambda3) {
    if (!(lambda2 > 0.0) || !(lambda3 > 0.0)) throw InvalidArgument("A constants: lambda2, lambda3 must be positive");
    const double Kh = c.K * h;
    const double w = (1.0 + 1.0 / lambda2) * Kh;
    AConstants a;
    a.A1 = 2.0 * c.k_b + c.sigma_x + 1.0 + Kh;
    a.A2 = c.b_y + c.sigma_y + Kh;
    a.A3 = lambda2 + lambda3 + w;
    a.A4 = 2.0 * c.k_f + 1.0 + c.f_z / lambda3 + w;
    a.A5 = c.f_x + w;
    a.B1 = c.b_0 + c.sigma_0 + Kh;
    a.B2 = c.f_0 + c.K * c.f_0 * h;
    return a;
}

AConstants compute_A_constants(const AssumptionConstants& c, double h) {
    const Lambdas l = default_lambdas(c, h);
    return compute_A_constants(c, h, l.lambda2, l.lambda3);
}

AConstants limit_A_constants(const AssumptionConstants& c) noexcept {
    AConstants a;
    a.A1 = 2.0 * c.k_b + c.sigma_x + 1.0;
    a.A2 = c.b_y + c.sigma_y;
    a.A3 = 1.0;
    a.A4 = 2.0 * c.k_f + 1.0 + c.f_z;
    a.A5 = c.f_x;
    a.B1 = c.b_0 + c.sigma_0;
    a.B2 = c.f_0;
    return a;
}

DConstants compute_D_constants(const AssumptionConstants& c, double h, double Lbar) noexcept {
    // A vanishing factor wins over an overflowed Lbar.
    if (c.b_z == 0.0) return {0.0, 0.0, 0.0};
    const double w = (c.b_z * h + c.b_z) * Lbar;
    auto mul = [w](double s) { return s == 0.0 ? 0.0 : w * s; };
    return {mul(c.sigma_x), mul(c.sigma_y), mul(c.sigma_0)};
}

L0L1 compute_L0_L1(const AssumptionConstants& c) noexcept {
    const double coupling = c.b_y + c.sigma_y + c.lip_relation() * c.b_z;
    const double back = c.g_x + c.f_x * c.T;
    const double rate = (2.0 * c.k_b + 2.0 * c.k_f + 3.0 + c.sigma_x + c.f_z) * c.T;
    const double e = coupling * back * c.T + rate;
    return {coupling * back * c.T * std::exp(e), back * std::max(std::exp(e + 1.0), 1.0)};
}

CFunctions compute_c_functions(const AssumptionConstants& c, double G, double Lbar) {
    const AConstants a = limit_A_constants(c);
    const DConstants d = compute_D_constants(c, 0.0, Lbar);
    const double T = c.T;
    const double y = (a.A1 + d.D1) * T + (a.A2 + d.D2) * G * T;
    CFunctions out;
    out.c0 = T * (c.g_x * gamma1(a.A4 * T, y) + a.A5 * T * gamma0(a.A4 * T) * gamma0(y));
    out.c1 = (a.A2 + d.D2) * out.c0;
    out.L2 = std::exp(std::max(a.A4, 0.0) * T) * c.g_0 + a.B2 * T * gamma0(a.A4 * T) +
             (a.B1 + d.D3) * out.c0;
    return out;
}

CFunctions compute_c_functions_disc(const AssumptionConstants& c, double G, double Lbar, std::size_t N,
                                    double lambda2, double lambda3) {
    if (N == 0) throw InvalidArgument("c functions: N must be positive");
    const double h = c.T / static_cast<double>(N);
    const AConstants a = compute_A_constants(c, h, lambda2, lambda3);
    const DConstants d = compute_D_constants(c, h, Lbar);
    const double y = (a.A1 + d.D1) + (a.A2 + d.D2) * G;
    CFunctions out;
    out.c0 = c.g_x * gamma1_disc(N, a.A4, y, h) + a.A5 * gamma0_disc(N, a.A4, h) * gamma0_disc(N, y, h);
    out.c1 = (a.A2 + d.D2) * out.c0;
    out.L2 = (a.B1 + d.D3) * out.c0 + std::max(std::exp(a.A4 * c.T), 1.0) * c.g_0 +
             a.B2 * gamma0_disc(N, a.A4, h);
    return out;
}

double c2_continuous(const AssumptionConstants& c, double lambda1, double L, double G, double Lbar) {
    const AConstants a = limit_A_constants(c);
    const DConstants d = compute_D_constants(c, 0.0, Lbar);
    const double T = c.T;
    const double pre = std::max(std::exp(((a.A1 + d.D1) + (a.A2 + d.D2) * G) * T), 1.0) *
                       (1.0 + 1.0 / lambda1) * (a.A2 + c.b_z * Lbar * c.sigma_y);
    if (pre == 0.0) return 0.0;
    const double y = a.A1 + 1.0 + (1.0 + lambda1) * (a.A2 + c.b_z * c.lip_relation()) * L;
    return pre * (c.g_x * T * gamma1(a.A4 * T, y * T) +
                  a.A5 * T * gamma0(a.A4 * T) * T * gamma0(y * T));
}

double c2_disc(const AssumptionConstants& c, double lambda1, std::size_t N, double L, double G,
               double Lbar, double lambda2, double lambda3) {
    if (N == 0) throw InvalidArgument("c2: N must be positive");
    const double h = c.T / static_cast<double>(N);
    const AConstants a = compute_A_constants(c, h, lambda2, lambda3);
    const DConstants d = compute_D_constants(c, h, Lbar);
    const double bz = c.b_z + c.b_z * h;
    const double pre = std::max(std::exp(((a.A1 + d.D1) + (a.A2 + d.D2) * G) * c.T), 1.0) *
                       (1.0 + 1.0 / lambda1) * (a.A2 + bz * Lbar * c.sigma_y);
    if (pre == 0.0) return 0.0;
    const double y = a.A1 + 1.0 + (1.0 + lambda1) * (a.A2 + bz * c.lip_relation()) * L;
    return pre * (c.g_x * gamma1_disc(N, a.A4, y, h) +
                  a.A5 * gamma0_disc(N, a.A4, h) * gamma0_disc(N, y, h));
}

C2Result compute_c2(const AssumptionConstants& c, double L, double G, double Lbar) {
    // Minimize over s = log(lambda1) by maximizing the negated objective.
    auto neg = [&](double s) {
        const double v = c2_continuous(c, std::exp(s), L, G, Lbar);
        return std::isnan(v) ? -INFINITY : -v;
    };
    const Extremum e = maximize_on_interval(neg, std::log(1e-6), std::log(1e6), 256);
    return {-e.value, std::exp(e.arg)};
}

DiagnosticsReport check_conditions(const AssumptionConstants& c, double h) {
    c.validate();
    DiagnosticsReport r;
    r.h = h > 0.0 ? h : c.T / 1024.0;
    // The default lambda3 needs (1+K)sqrt(h) + Kh < 1.
    for (int k = 0; k < 200 && !(1.0 - (1.0 + c.K) * std::sqrt(r.h) - c.K * r.h > 0.0); ++k) r.h /= 2.0;
    const Lambdas l = default_lambdas(c, r.h);
    r.lambda2 = l.lambda2;
    r.lambda3 = l.lambda3;
    r.A = compute_A_constants(c, r.h, l.lambda2, l.lambda3);

    const L0L1 ll = compute_L0_L1(c);
    r.L0 = ll.L0;
    r.L1 = ll.L1;
    r.Lbar = 1.01 * ll.L1;
    r.D = compute_D_constants(c, r.h, r.Lbar);

    const CFunctions cf = compute_c_functions(c, r.L1, r.Lbar);
    r.c0_at_L1 = cf.c0;
    r.c1_at_L1 = cf.c1;
    r.L2_at_L1 = cf.L2;
    const C2Result c2 = compute_c2(c, r.L1, r.L1, r.Lbar);
    r.c2_at_L1L1 = c2.value;
    r.lambda1_star = c2.lambda1;

    // Overflowed intermediates (huge L1) make the bounds vacuous rather than undefined.
    for (double* v : {&r.c0_at_L1, &r.c1_at_L1, &r.L2_at_L1, &r.c2_at_L1L1}) {
        if (std::isnan(*v)) *v = std::numeric_limits<double>::infinity();
    }

    r.conditionL0 = r.L0 < std::exp(-1.0);
    r.conditionC1 = r.c1_at_L1 < 1.0;
    r.conditionC2 = r.c2_at_L1L1 < 1.0;
    return r;
}

AssumptionConstants parse_constants(const std::string& text) {
    AssumptionConstants c;
    std::map<std::string, bool> seen;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("constants line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                                  trim(raw) + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto it = std::find_if(kFields.begin(), kFields.end(), [&](const Field& f) { return key == f.name; });
        if (it == kFields.end()) {
            throw InvalidArgument("constants line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (seen[key]) {
            throw InvalidArgument("constants line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != val.size()) {
            throw InvalidArgument("constants line " + std::to_string(lineno) + ": invalid number '" + val +
                                  "' for key '" + key + "'");
        }
        c.*(it->member) = v;
        seen[key] = true;
    }
    for (const auto& f : kFields) {
        if (!seen[f.name]) throw InvalidArgument(std::string("constants: missing key '") + f.name + "'");
    }
    c.validate();
    return c;
}

AssumptionConstants load_constants(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open constants file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_constants(ss.str());
}

nlohmann::json to_json(const AssumptionConstants& c) {
    nlohmann::json j;
    for (const auto& f : kFields) j[f.name] = c.*(f.member);
    return j;
}

nlohmann::json to_json(const DiagnosticsReport& r) {
    return {{"A1", r.A.A1},
            {"A2", r.A.A2},
            {"A3", r.A.A3},
            {"A4", r.A.A4},
            {"A5", r.A.A5},
            {"B1", r.A.B1},
            {"B2", r.A.B2},
            {"D1", r.D.D1},
            {"D2", r.D.D2},
            {"D3", r.D.D3},
            {"L0", r.L0},
            {"L1", r.L1},
            {"Lbar", r.Lbar},
            {"c0_at_L1", r.c0_at_L1},
            {"c1_at_L1", r.c1_at_L1},
            {"L2_at_L1", r.L2_at_L1},
            {"c2_at_L1L1", r.c2_at_L1L1},
            {"conditionL0", r.conditionL0},
            {"conditionC1", r.conditionC1},
            {"conditionC2", r.conditionC2},
            {"lambda1_star", r.lambda1_star},
            {"lambda2", r.lambda2},
            {"lambda3", r.lambda3},
            {"h", r.h}};
}

std::string format_table(const DiagnosticsReport& r) {
    std::ostringstream os;
    auto row = [&](const char* name, double v) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%-14s %.6e\n", name, v);
        os << buf;
    };
    auto flag = [&](const char* name, bool v, const char* rule) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-14s %-5s  (%s)\n", name, v ? "true" : "false", rule);
        os << buf;
    };
    row("h", r.h);
    row("lambda2", r.lambda2);
    row("lambda3", r.lambda3);
    row("A1", r.A.A1);
    row("A2", r.A.A2);
    row("A3", r.A.A3);
    row("A4", r.A.A4);
    row("A5", r.A.A5);
    row("B1", r.A.B1);
    row("B2", r.A.B2);
    row("D1", r.D.D1);
    row("D2", r.D.D2);
    row("D3", r.D.D3);
    row("L0", r.L0);
    row("L1", r.L1);
    row("Lbar", r.Lbar);
    row("c0(L1)", r.c0_at_L1);
    row("c1(L1)", r.c1_at_L1);
    row("L2(L1)", r.L2_at_L1);
    row("c2(L1,L1)", r.c2_at_L1L1);
    row("lambda1*", r.lambda1_star);
    flag("conditionL0", r.conditionL0, "L0 < 1/e");
    flag("conditionC1", r.conditionC1, "c1(L1) < 1");
    flag("conditionC2", r.conditionC2, "c2(L1,L1) < 1");
    return os.str();
}

}  // namespace fbsde
