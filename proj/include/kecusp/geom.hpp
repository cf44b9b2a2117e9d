#pragma once

// Reduced computational domains, divisor bookkeeping and Monge-Ampere densities.
//
// Conventions:
//   radial_n1 / polar2d_n1 : t = log|z|, the Euclidean Laplacian is e^{-2t}(d_tt + d_thth)
//   calabi_cone_n2         : t = log|sigma|^2_h on the total space of a negative line bundle
// In every reduction log|sigma_D|^2 = pole_order * t and all hermitian metrics contribute 0.

#include "kecusp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kecusp {

enum class Reduction { radial_n1, polar2d_n1, calabi_cone_n2 };

inline std::string_view to_string(Reduction r) {
    switch (r) {
        case Reduction::radial_n1: return "radial_n1";
        case Reduction::polar2d_n1: return "polar2d_n1";
        case Reduction::calabi_cone_n2: return "calabi_cone_n2";
    }
    return "?";
}

inline std::optional<Reduction> parse_reduction(std::string_view s) {
    if (s == "radial_n1") return Reduction::radial_n1;
    if (s == "polar2d_n1") return Reduction::polar2d_n1;
    if (s == "calabi_cone_n2") return Reduction::calabi_cone_n2;
    return std::nullopt;
}

/// Uniform grid in the log-radial coordinate, optionally with a periodic angle.
struct ReducedDomain {
    Reduction reduction = Reduction::radial_n1;
    double t_min = -1.0;
    double t_max = 0.0;
    int n_t = 0;
    int n_theta = 1;  // 1 unless polar2d
    int k = 0;        // line bundle degree, calabi_cone only

    double h() const { return (t_max - t_min) / (n_t - 1); }
    double t(int i) const { return i == n_t - 1 ? t_max : t_min + i * h(); }
    double dtheta() const { return 2.0 * std::numbers::pi / n_theta; }
    double theta(int j) const { return j * dtheta(); }
    bool polar() const { return reduction == Reduction::polar2d_n1; }
    /// Complex dimension of the unreduced geometry.
    int complex_dim() const { return reduction == Reduction::calabi_cone_n2 ? 2 : 1; }
    std::size_t size() const { return static_cast<std::size_t>(n_t) * n_theta; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_theta + j; }

    std::vector<double> t_grid() const {
        std::vector<double> out(n_t);
        for (int i = 0; i < n_t; ++i) out[i] = t(i);
        return out;
    }

    friend bool operator==(const ReducedDomain&, const ReducedDomain&) = default;
};

inline ReducedDomain build_domain(Reduction reduction, double t_min, double t_max, int n_t,
                                  std::optional<int> n_theta = std::nullopt,
                                  std::optional<int> k = std::nullopt) {
    if (!std::isfinite(t_min) || !std::isfinite(t_max))
        throw InputError("domain: t_min and t_max must be finite");
    if (!(t_min < t_max)) throw InputError("domain: t_min must be < t_max");
    if (t_max > 0.0) throw InputError("domain: t_max must be <= 0");
    if (n_t < 5) throw InputError("domain: n_t must be >= 5");

    ReducedDomain d;
    d.reduction = reduction;
    d.t_min = t_min;
    d.t_max = t_max;
    d.n_t = n_t;
    if (reduction == Reduction::polar2d_n1) {
        if (!n_theta || *n_theta < 8) throw InputError("domain: polar2d requires n_theta >= 8");
        d.n_theta = *n_theta;
    }
    if (reduction == Reduction::calabi_cone_n2) {
        if (!k) throw InputError("domain: calabi_cone requires line bundle degree k");
        if (*k < 1) throw InputError("domain: k must be a positive integer");
        d.k = *k;
    }
    return d;
}

/// Discrepancy data of a log resolution, taken as numeric input.
struct DivisorData {
    std::vector<double> a_coeffs;  // a_i >= 0
    std::vector<double> b_coeffs;  // 0 < b_j <= 1
    int pole_order = 1;

    double e_weight() const { return std::accumulate(a_coeffs.begin(), a_coeffs.end(), 0.0); }
    double f_weight() const { return std::accumulate(b_coeffs.begin(), b_coeffs.end(), 0.0); }
    bool has_e() const { return e_weight() > 0.0; }
    bool has_f() const { return f_weight() > 0.0; }

    friend bool operator==(const DivisorData&, const DivisorData&) = default;
};

inline void validate(const DivisorData& div) {
    for (double a : div.a_coeffs)
        if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("divisor: every a_i must be >= 0");
    for (double b : div.b_coeffs)
        if (!(b > 0.0 && b <= 1.0)) throw InputError("divisor: every b_j must lie in (0, 1]");
    if (div.pole_order < 1) throw InputError("divisor: pole_order must be a positive integer");
}

/// log|sigma_D|^2 on the t grid (pole_order * t). Requires t < 0 everywhere.
inline std::vector<double> sigma_d_weight(const ReducedDomain& dom, const DivisorData& div) {
    validate(div);
    if (!(dom.t_max < 0.0))
        throw InputError("sigma_d_weight: t_max must be < 0 so that -log(-log|sigma_D|^2) is defined");
    std::vector<double> w(dom.n_t);
    for (int i = 0; i < dom.n_t; ++i) w[i] = div.pole_order * dom.t(i);
    return w;
}

enum class DensityKind { smooth_unit, cone_pole, custom, zero };

inline std::string_view to_string(DensityKind k) {
    switch (k) {
        case DensityKind::smooth_unit: return "smooth_unit";
        case DensityKind::cone_pole: return "cone_pole";
        case DensityKind::custom: return "custom";
        case DensityKind::zero: return "zero";
    }
    return "?";
}

inline std::optional<DensityKind> parse_density_kind(std::string_view s) {
    if (s == "smooth_unit") return DensityKind::smooth_unit;
    if (s == "cone_pole") return DensityKind::cone_pole;
    if (s == "custom") return DensityKind::custom;
    if (s == "zero") return DensityKind::zero;
    return std::nullopt;
}

/// Right-hand side of the reduced Monge-Ampere equation.
///
/// The density is F = amplitude * exp(log_f) relative to the reduced volume element;
/// `background` is the coefficient of the s*theta term of the regularized family
/// (s times the reference form, whose reduced coefficient is 1).
struct DensityField {
    DensityKind kind = DensityKind::smooth_unit;
    double s = 0.0;
    double amplitude = 1.0;
    double background = 0.0;
    double normalization = 1.0;      // c for cone_pole, 1 otherwise
    std::vector<double> log_f;       // domain.size() samples
    std::vector<double> sigma_d_log; // n_t samples of log|sigma_D|^2

    double value(std::size_t node) const { return amplitude * std::exp(log_f[node]); }
};

/// Normalization constant c of the reduced cone equation 2k phi' phi'' = c e^phi.
/// c = 2k makes -3 log(-t) + log 9 an exact solution.
inline double cone_normalization(int k) { return 2.0 * k; }

inline DensityField build_density(const ReducedDomain& dom, const DivisorData& div, double s,
                                  DensityKind kind, std::span<const double> custom = {}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("density: s must be >= 0");
    DensityField d;
    d.kind = kind;
    d.s = s;
    d.background = s;
    d.sigma_d_log = sigma_d_weight(dom, div);
    d.log_f.assign(dom.size(), 0.0);

    switch (kind) {
        case DensityKind::smooth_unit: break;
        case DensityKind::zero: d.amplitude = 0.0; break;
        case DensityKind::cone_pole: {
            if (dom.reduction != Reduction::calabi_cone_n2)
                throw InputError("density: cone_pole requires a calabi_cone_n2 domain");
            // 2 phi' phi'' k omega_D ^ i dw^dwbar/|w|^2 against e^phi c omega_D ^ i dw^dwbar/|w|^2:
            // the |sigma_F|^-2 pole of the volume form and the fiber element e^{-t} cancel.
            d.normalization = cone_normalization(dom.k);
            std::fill(d.log_f.begin(), d.log_f.end(), std::log(d.normalization));
            break;
        }
        case DensityKind::custom: {
            if (custom.size() != dom.size())
                throw InputError("density: custom samples must match the grid size");
            for (double v : custom)
                if (!std::isfinite(v)) throw InputError("density: custom samples must be finite");
            std::copy(custom.begin(), custom.end(), d.log_f.begin());
            break;
        }
    }

    // log(e^x + s) without underflow at depth.
    auto log_plus = [s](double x) {
        if (s == 0.0) return x;
        const double ls = std::log(s), m = std::max(x, ls);
        return m + std::log1p(std::exp(-std::abs(x - ls)));
    };
    // (|sigma_E|^2 + s) / (|sigma_F|^2 + s) with |sigma_E|^2 = e^{A sigma}, |sigma_F|^2 = e^{B sigma}.
    // For cone_pole the s = 0 pole is already cancelled, so only the ratio to s = 0 is folded in.
    const double wa = div.e_weight(), wb = div.f_weight();
    const bool relative = kind == DensityKind::cone_pole;
    for (int i = 0; i < dom.n_t; ++i) {
        const double sig = d.sigma_d_log[i];
        double shift = 0.0;
        if (div.has_e()) {
            shift += log_plus(wa * sig);
            if (relative) shift -= wa * sig;
        }
        if (div.has_f()) {
            shift -= log_plus(wb * sig);
            if (relative) shift += wb * sig;
        }
        for (int j = 0; j < dom.n_theta; ++j) d.log_f[dom.index(i, j)] += shift;
    }
    for (double v : d.log_f)
        if (!std::isfinite(v)) throw InputError("density: non-finite log_f sample");
    return d;
}

/// CSV columns: t, [theta,] log_f, sigma_d_log.
inline void write_density_csv(std::ostream& os, const ReducedDomain& dom, const DensityField& den) {
    os.precision(17);
    os << (dom.polar() ? "t,theta,log_f,sigma_d_log\n" : "t,log_f,sigma_d_log\n");
    for (int i = 0; i < dom.n_t; ++i)
        for (int j = 0; j < dom.n_theta; ++j) {
            os << dom.t(i) << ',';
            if (dom.polar()) os << dom.theta(j) << ',';
            os << den.log_f[dom.index(i, j)] << ',' << den.sigma_d_log[i] << '\n';
        }
}

}  // namespace kecusp
