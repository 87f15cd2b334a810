#include "fbsde/fields.hpp"

#include "fbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fbsde {

std::size_t feature_count(std::size_t d1) noexcept { return 1 + 2 * d1 + d1 * (d1 - 1) / 2; }

void features(const double* x, std::size_t d1, double* out) noexcept {
    out[0] = 1.0;
    for (std::size_t k = 0; k < d1; ++k) {
        out[1 + k] = x[k];
        out[1 + d1 + k] = x[k] * x[k];
    }
    std::size_t q = 1 + 2 * d1;
    for (std::size_t a = 0; a < d1; ++a) {
        for (std::size_t b = a + 1; b < d1; ++b) out[q++] = x[a] * x[b];
    }
}

std::vector<double> features(const std::vector<double>& x, std::size_t d1) {
    if (x.size() != d1) {
        throw InvalidArgument("features: expected " + std::to_string(d1) + " coordinates, got " +
                              std::to_string(x.size()));
    }
    std::vector<double> out(feature_count(d1));
    features(x.data(), d1, out.data());
    return out;
}

void feature_directional(const double* xt, const double* active, const double* s, std::size_t d1,
                         double* out) noexcept {
    out[0] = 0.0;
    double sa[kMaxFieldDim];
    for (std::size_t k = 0; k < d1; ++k) sa[k] = s[k] * active[k];
    for (std::size_t k = 0; k < d1; ++k) {
        out[1 + k] = sa[k];
        out[1 + d1 + k] = 2.0 * xt[k] * sa[k];
    }
    std::size_t q = 1 + 2 * d1;
    for (std::size_t a = 0; a < d1; ++a) {
        for (std::size_t b = a + 1; b < d1; ++b) out[q++] = sa[a] * xt[b] + xt[a] * sa[b];
    }
}

TruncBox TruncBox::unbounded(std::size_t d1) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return TruncBox{std::vector<double>(d1, -inf), std::vector<double>(d1, inf),
                    std::vector<double>(d1, 0.0)};
}

TruncBox TruncBox::from_bounds(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size()) throw InvalidArgument("truncation box: lo/hi size mismatch");
    for (std::size_t k = 0; k < lo.size(); ++k) {
        if (!(lo[k] <= hi[k])) throw InvalidArgument("truncation box: lo > hi in component " + std::to_string(k));
    }
    const std::size_t d = lo.size();
    return TruncBox{std::move(lo), std::move(hi), std::vector<double>(d, 0.0)};
}

TruncBox TruncBox::around(const std::vector<double>& x0, double radius) {
    if (!(radius > 0.0)) throw InvalidArgument("truncation box: radius must be positive");
    TruncBox box;
    box.center = x0;
    for (double c : x0) {
        box.lo.push_back(c - radius);
        box.hi.push_back(c + radius);
    }
    return box;
}

void TruncBox::prepare(const double* x, double* xt, double* active) const noexcept {
    const std::size_t d = lo.size();
    for (std::size_t k = 0; k < d; ++k) {
        const double v = x[k];
        double c = v;
        double a = 1.0;
        if (v < lo[k]) {
            c = lo[k];
            a = 0.0;
        } else if (v > hi[k]) {
            c = hi[k];
            a = 0.0;
        }
        xt[k] = c - center[k];
        active[k] = a;
    }
}

namespace {

void check_field_dim(std::size_t d1) {
    if (d1 == 0 || d1 > kMaxFieldDim) {
        throw InvalidArgument("field dimension must be in [1, " + std::to_string(kMaxFieldDim) + "]");
    }
}

}  // namespace

QuadraticField QuadraticField::zero(std::size_t d1, TruncBox box) {
    check_field_dim(d1);
    if (box.dim() != d1) throw InvalidArgument("QuadraticField: box dimension mismatch");
    return QuadraticField{d1, std::vector<double>(feature_count(d1), 0.0), std::move(box)};
}

DirectZField DirectZField::zero(std::size_t d1, std::size_t d3, TruncBox box) {
    check_field_dim(d1);
    if (box.dim() != d1) throw InvalidArgument("DirectZField: box dimension mismatch");
    return DirectZField{d1, d3, std::vector<double>(feature_count(d1) * d3, 0.0), std::move(box)};
}

namespace {

struct Scratch {
    static constexpr std::size_t kMax = kMaxFieldDim;
    double xt[kMax];
    double active[kMax];
    double phi[1 + 2 * kMax + kMax * (kMax - 1) / 2];
};

void check_dim(std::size_t got, std::size_t want) {
    if (got != want) {
        throw InvalidArgument("field evaluation: expected " + std::to_string(want) +
                              " coordinates, got " + std::to_string(got));
    }
}

}  // namespace

double eval_u(const QuadraticField& field, const double* x) noexcept {
    Scratch s;
    field.box.prepare(x, s.xt, s.active);
    features(s.xt, field.d1, s.phi);
    double y = 0.0;
    for (std::size_t p = 0; p < field.coeffs.size(); ++p) y += field.coeffs[p] * s.phi[p];
    return y;
}

double eval_u(const QuadraticField& field, const std::vector<double>& x) {
    check_dim(x.size(), field.d1);
    return eval_u(field, x.data());
}

void grad_u(const QuadraticField& field, const double* x, double* out) noexcept {
    const std::size_t d = field.d1;
    const double* a = field.coeffs.data();
    Scratch s;
    field.box.prepare(x, s.xt, s.active);
    for (std::size_t k = 0; k < d; ++k) out[k] = a[1 + k] + 2.0 * a[1 + d + k] * s.xt[k];
    std::size_t q = 1 + 2 * d;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j, ++q) {
            out[i] += a[q] * s.xt[j];
            out[j] += a[q] * s.xt[i];
        }
    }
    for (std::size_t k = 0; k < d; ++k) out[k] *= s.active[k];
}

std::vector<double> grad_u(const QuadraticField& field, const std::vector<double>& x) {
    check_dim(x.size(), field.d1);
    std::vector<double> out(field.d1);
    grad_u(field, x.data(), out.data());
    return out;
}

void eval_v_diff(const QuadraticField& field, const SigmaFn& sigma, std::size_t d3, double t,
                 const double* x, double* out, double* sigma_buf) {
    const std::size_t d = field.d1;
    std::vector<double> local;
    if (sigma_buf == nullptr) {
        local.resize(d * d3);
        sigma_buf = local.data();
    }
    double grad[Scratch::kMax];
    grad_u(field, x, grad);
    sigma(t, x, eval_u(field, x), sigma_buf);
    for (std::size_t c = 0; c < d3; ++c) out[c] = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double gk = grad[k];
        const double* row = sigma_buf + k * d3;
        for (std::size_t c = 0; c < d3; ++c) out[c] += gk * row[c];
    }
}

std::vector<double> eval_v_diff(const QuadraticField& field, const SigmaFn& sigma, std::size_t d3,
                                double t, const std::vector<double>& x) {
    check_dim(x.size(), field.d1);
    std::vector<double> out(d3);
    eval_v_diff(field, sigma, d3, t, x.data(), out.data());
    return out;
}

void eval_v_direct(const DirectZField& field, const double* x, double* out) noexcept {
    Scratch s;
    field.box.prepare(x, s.xt, s.active);
    features(s.xt, field.d1, s.phi);
    const std::size_t P = feature_count(field.d1);
    for (std::size_t c = 0; c < field.d3; ++c) out[c] = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        const double* row = field.coeffs.data() + p * field.d3;
        for (std::size_t c = 0; c < field.d3; ++c) out[c] += s.phi[p] * row[c];
    }
}

std::vector<double> eval_v_direct(const DirectZField& field, const std::vector<double>& x) {
    check_dim(x.size(), field.d1);
    std::vector<double> out(field.d3);
    eval_v_direct(field, x.data(), out.data());
    return out;
}

std::vector<double> recenter_coeffs(const QuadraticField& field, const std::vector<double>& new_center) {
    const std::size_t d = field.d1;
    check_dim(new_center.size(), d);
    const double* a = field.coeffs.data();
    // With x - c_old = y + delta, delta = c_new - c_old, expand in y.
    double delta[Scratch::kMax];
    for (std::size_t k = 0; k < d; ++k) delta[k] = new_center[k] - field.box.center[k];
    std::vector<double> out(field.coeffs.size(), 0.0);
    out[0] = a[0];
    for (std::size_t k = 0; k < d; ++k) {
        const double lin = a[1 + k], sq = a[1 + d + k];
        out[0] += lin * delta[k] + sq * delta[k] * delta[k];
        out[1 + k] += lin + 2.0 * sq * delta[k];
        out[1 + d + k] += sq;
    }
    std::size_t q = 1 + 2 * d;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j, ++q) {
            out[0] += a[q] * delta[i] * delta[j];
            out[1 + i] += a[q] * delta[j];
            out[1 + j] += a[q] * delta[i];
            out[q] += a[q];
        }
    }
    return out;
}

// JSON has no infinity; unbounded box edges are stored as null.
namespace {

nlohmann::json bounds_to_json(const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) {
        if (std::isfinite(x)) {
            arr.push_back(x);
        } else {
            arr.push_back(nullptr);
        }
    }
    return arr;
}

std::vector<double> bounds_from_json(const nlohmann::json& arr, double missing) {
    std::vector<double> v;
    for (const auto& x : arr) v.push_back(x.is_null() ? missing : x.get<double>());
    return v;
}

TruncBox box_from_json(const nlohmann::json& j, std::size_t d1) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    TruncBox box;
    box.lo = bounds_from_json(j.at("trunc_lo"), -inf);
    box.hi = bounds_from_json(j.at("trunc_hi"), inf);
    box.center = j.contains("center") ? j.at("center").get<std::vector<double>>()
                                      : std::vector<double>(d1, 0.0);
    if (box.lo.size() != d1 || box.hi.size() != d1 || box.center.size() != d1) {
        throw InvalidArgument("field record: truncation box does not match d1");
    }
    return box;
}

void check_ordering(const nlohmann::json& j) {
    const int version = j.value("ordering_version", kFeatureOrderingVersion);
    if (version != kFeatureOrderingVersion) {
        throw InvalidArgument("field record: unsupported feature ordering version " + std::to_string(version));
    }
}

}  // namespace

nlohmann::json to_json(const QuadraticField& field, long time_index) {
    return {{"time_index", time_index},
            {"d1", field.d1},
            {"ordering_version", kFeatureOrderingVersion},
            {"coeffs", field.coeffs},
            {"trunc_lo", bounds_to_json(field.box.lo)},
            {"trunc_hi", bounds_to_json(field.box.hi)},
            {"center", field.box.center}};
}

nlohmann::json to_json(const DirectZField& field, long time_index) {
    return {{"time_index", time_index},
            {"d1", field.d1},
            {"d3", field.d3},
            {"ordering_version", kFeatureOrderingVersion},
            {"coeffs", field.coeffs},
            {"trunc_lo", bounds_to_json(field.box.lo)},
            {"trunc_hi", bounds_to_json(field.box.hi)},
            {"center", field.box.center}};
}

QuadraticField quadratic_field_from_json(const nlohmann::json& j) {
    check_ordering(j);
    QuadraticField f;
    f.d1 = j.at("d1").get<std::size_t>();
    check_field_dim(f.d1);
    f.coeffs = j.at("coeffs").get<std::vector<double>>();
    if (f.coeffs.size() != feature_count(f.d1)) throw InvalidArgument("field record: coefficient count does not match d1");
    f.box = box_from_json(j, f.d1);
    return f;
}

DirectZField direct_field_from_json(const nlohmann::json& j) {
    check_ordering(j);
    DirectZField f;
    f.d1 = j.at("d1").get<std::size_t>();
    check_field_dim(f.d1);
    f.d3 = j.at("d3").get<std::size_t>();
    f.coeffs = j.at("coeffs").get<std::vector<double>>();
    if (f.coeffs.size() != feature_count(f.d1) * f.d3) {
        throw InvalidArgument("field record: coefficient count does not match d1, d3");
    }
    f.box = box_from_json(j, f.d1);
    return f;
}

}  // namespace fbsde
