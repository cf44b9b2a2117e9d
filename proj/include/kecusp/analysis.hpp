#pragma once

// Diagnostics on solver output: volumes, distance to the outer boundary, volume rigidity,
// Lelong slopes, trace comparison and the sublog density test.
//
// Riemannian convention g_R = 2 Re g_{i jbar}; the radial length element is sqrt(phi_tt / 2) dt
// for n = 1 (t = log|z|) and sqrt(phi'' / 2) dt for the cone (t = log|sigma|^2).

#include "kecusp/error.hpp"
#include "kecusp/geom.hpp"
#include "kecusp/models.hpp"
#include "kecusp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace kecusp {

/// Samples of a quantity along the log-radial coordinate, paired with the distance R(t).
struct RadialProfile {
    std::string quantity;
    std::vector<double> t;
    std::vector<double> R;
    std::vector<double> value;
};

inline void write_profile_csv(std::ostream& os, const RadialProfile& p) {
    os.precision(17);
    os << "t,R," << (p.quantity.empty() ? "value" : p.quantity) << '\n';
    for (std::size_t i = 0; i < p.t.size(); ++i)
        os << p.t[i] << ',' << (p.R.empty() ? 0.0 : p.R[i]) << ',' << p.value[i] << '\n';
}

namespace detail {

/// Second t-derivative along every ray: central inside, second-order one-sided at both ends.
inline std::vector<double> radial_second_derivative(const PotentialField& f) {
    const auto& d = f.domain;
    const int nt = d.n_t;
    const double h2 = d.h() * d.h();
    std::vector<double> out(d.size());
    for (int j = 0; j < d.n_theta; ++j) {
        auto p = [&](int i) { return f.phi[d.index(i, j)]; };
        for (int i = 1; i < nt - 1; ++i) out[d.index(i, j)] = (p(i + 1) - 2 * p(i) + p(i - 1)) / h2;
        out[d.index(0, j)] = (2 * p(0) - 5 * p(1) + 4 * p(2) - p(3)) / h2;
        out[d.index(nt - 1, j)] = (2 * p(nt - 1) - 5 * p(nt - 2) + 4 * p(nt - 3) - p(nt - 4)) / h2;
    }
    return out;
}

/// First t-derivative: central inside, second-order one-sided at the ends.
inline std::vector<double> radial_first_derivative(const PotentialField& f) {
    const auto& d = f.domain;
    const int nt = d.n_t;
    const double h = d.h();
    std::vector<double> out(d.size());
    for (int j = 0; j < d.n_theta; ++j) {
        auto p = [&](int i) { return f.phi[d.index(i, j)]; };
        for (int i = 1; i < nt - 1; ++i) out[d.index(i, j)] = (p(i + 1) - p(i - 1)) / (2 * h);
        out[d.index(0, j)] = (-3 * p(0) + 4 * p(1) - p(2)) / (2 * h);
        out[d.index(nt - 1, j)] = (3 * p(nt - 1) - 4 * p(nt - 2) + p(nt - 3)) / (2 * h);
    }
    return out;
}

/// Full metric coefficient of the n = 1 reductions: phi_tt (+ phi_thth on the polar grid).
inline std::vector<double> n1_metric_coefficient(const PotentialField& f) {
    std::vector<double> c = radial_second_derivative(f);
    const auto& d = f.domain;
    if (!d.polar()) return c;
    const double th2 = d.dtheta() * d.dtheta();
    const int nth = d.n_theta;
    for (int i = 0; i < d.n_t; ++i)
        for (int j = 0; j < nth; ++j)
            c[d.index(i, j)] += (f.phi[d.index(i, (j + 1) % nth)] - 2 * f.phi[d.index(i, j)] +
                                 f.phi[d.index(i, (j + nth - 1) % nth)]) /
                                th2;
    return c;
}

inline void check_field(const PotentialField& f) {
    if (f.phi.size() != f.domain.size()) throw AnalysisError("field does not match its domain");
    if (f.domain.n_t < 4) throw AnalysisError("field grid too small");
    for (double v : f.phi)
        if (!std::isfinite(v)) throw AnalysisError("non-finite field sample");
}

inline void check_same_grid(const PotentialField& a, const PotentialField& b) {
    check_field(a);
    check_field(b);
    if (!(a.domain == b.domain)) throw AnalysisError("fields live on different grids");
}

inline double theta_mean(const PotentialField& f, const std::vector<double>& v, int i) {
    double s = 0.0;
    for (int j = 0; j < f.domain.n_theta; ++j) s += v[f.domain.index(i, j)];
    return s / f.domain.n_theta;
}

}  // namespace detail

/// R(t) = radial distance from the circle at t to the outer boundary; on the polar grid the
/// minimum over theta-rays.
inline RadialProfile distance_profile(const PotentialField& f) {
    detail::check_field(f);
    const auto& d = f.domain;
    const std::vector<double> c = detail::radial_second_derivative(f);
    for (double v : c)
        if (!(v > 0.0)) throw AnalysisError("distance_profile: non-positive radial metric coefficient");
    RadialProfile p;
    p.quantity = "R";
    p.t = d.t_grid();
    p.R.assign(d.n_t, INFINITY);
    const double h = d.h();
    for (int j = 0; j < d.n_theta; ++j) {
        double acc = 0.0;
        std::vector<double> ray(d.n_t);
        ray[d.n_t - 1] = 0.0;
        for (int i = d.n_t - 2; i >= 0; --i) {
            acc += 0.5 * h * (std::sqrt(c[d.index(i, j)] / 2.0) + std::sqrt(c[d.index(i + 1, j)] / 2.0));
            ray[i] = acc;
        }
        for (int i = 0; i < d.n_t; ++i) p.R[i] = std::min(p.R[i], ray[i]);
    }
    p.value = p.R;
    return p;
}

struct VolumeEstimate {
    double grid_value = 0.0;  // integral over t_min <= t <= t_cut
    double tail = 0.0;        // extrapolated contribution of t < t_min
    double total = 0.0;       // grid_value + tail
    double error_bar = 0.0;
    double tail_exponent = 1.0;
};

/// Volume of {t <= t_cut} for e^phi F times the reduced volume element:
///   n = 1 : 2 e^{2t} e^phi F dt dtheta      (the measure e^phi i dz ^ dzbar)
///   cone  : 2 pi e^phi F dt                 (per unit base area)
/// F defaults to 1 (n = 1) or to the cone normalization 2k. The tail below t_min is
/// extrapolated from W(tau) = b - a (-tau)^{-p} fitted at three deep cuts (p = 1 for n = 1,
/// p = 2 for the cone).
inline VolumeEstimate volume_integral(const PotentialField& f, double t_cut,
                                      const DensityField* density = nullptr) {
    detail::check_field(f);
    const auto& d = f.domain;
    if (!(t_cut > d.t_min && t_cut <= d.t_max)) throw AnalysisError("volume_integral: t_cut out of range");
    if (density && density->log_f.size() != d.size()) throw AnalysisError("volume_integral: density grid mismatch");
    const bool cone = d.reduction == Reduction::calabi_cone_n2;
    const double F0 = cone ? cone_normalization(d.k) : 1.0;

    // Integrand along t, already integrated over theta.
    std::vector<double> g(d.n_t, 0.0);
    for (int i = 0; i < d.n_t; ++i) {
        const double t = d.t(i);
        for (int j = 0; j < d.n_theta; ++j) {
            const std::size_t k = d.index(i, j);
            const double F = density ? density->value(k) : F0;
            const double w = cone ? 2.0 * std::numbers::pi * std::exp(f.phi[k]) * F
                                  : 2.0 * std::exp(2.0 * t + f.phi[k]) * F * d.dtheta();
            g[i] += w;
        }
    }
    const double h = d.h();
    // Cumulative trapezoid from t_min.
    std::vector<double> cum(d.n_t, 0.0);
    for (int i = 1; i < d.n_t; ++i) cum[i] = cum[i - 1] + 0.5 * h * (g[i - 1] + g[i]);
    auto integral_to = [&](double tc) {
        const int i = std::min(d.n_t - 2, static_cast<int>(std::floor((tc - d.t_min) / h)));
        const double s = tc - d.t(i);
        const double gc = g[i] + (g[i + 1] - g[i]) * s / h;
        return cum[i] + 0.5 * s * (g[i] + gc);
    };

    VolumeEstimate est;
    est.grid_value = integral_to(t_cut);
    est.tail_exponent = cone ? 2.0 : 1.0;
    const double p = est.tail_exponent;
    // W(tau) = integral over [tau, t_cut] at tau = t_min, and two shallower cuts in the deep half.
    const double span = t_cut - d.t_min;
    const double taus[3] = {d.t_min, d.t_min + span / 8.0, d.t_min + span / 4.0};
    double W[3], x[3];
    for (int q = 0; q < 3; ++q) {
        W[q] = est.grid_value - integral_to(taus[q]);
        x[q] = std::pow(-taus[q], -p);
    }
    // Least squares W = b - a x.
    const double mx = (x[0] + x[1] + x[2]) / 3.0, mw = (W[0] + W[1] + W[2]) / 3.0;
    double sxx = 0.0, sxw = 0.0;
    for (int q = 0; q < 3; ++q) {
        sxx += (x[q] - mx) * (x[q] - mx);
        sxw += (x[q] - mx) * (W[q] - mw);
    }
    const double slope = sxx > 0.0 ? sxw / sxx : 0.0;
    const double b = mw - slope * mx;
    double fit_err = 0.0;
    for (int q = 0; q < 3; ++q) fit_err = std::max(fit_err, std::abs(W[q] - (b + slope * x[q])));
    // Two-point extrapolation from the deepest pair as an independent estimate.
    const double slope2 = (W[0] - W[1]) / (x[0] - x[1]);
    const double b2 = W[0] - slope2 * x[0];
    est.tail = b - W[0];
    est.total = est.grid_value + est.tail;
    est.error_bar = fit_err + std::abs(b2 - b);
    return est;
}

/// log det g' - log det g = phi' - phi for the reduced equations (shared density), paired with
/// R(t) measured in g. On the polar grid the theta-mean is reported.
inline RadialProfile rigidity_profile(const PotentialField& phi, const PotentialField& phi2) {
    detail::check_same_grid(phi, phi2);
    const auto& d = phi.domain;
    RadialProfile p = distance_profile(phi);
    p.quantity = "log_det_ratio";
    std::vector<double> diff(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) diff[k] = phi2.phi[k] - phi.phi[k];
    p.value.resize(d.n_t);
    for (int i = 0; i < d.n_t; ++i) p.value[i] = d.n_theta == 1 ? diff[i] : detail::theta_mean(phi, diff, i);
    return p;
}

struct LadderRung {
    double R0 = 0.0;
    double sup_abs = 0.0;  // sup over R >= R0 of |value|
    double product = 0.0;  // R0 * sup_abs
    int nodes = 0;
};

/// sup_{R >= R0} |value| for each R0 (a relative tolerance of 1e-6 admits nodes at R0).
inline std::vector<LadderRung> rigidity_ladder(const RadialProfile& p, std::span<const double> R0s) {
    std::vector<LadderRung> out;
    for (double R0 : R0s) {
        LadderRung r;
        r.R0 = R0;
        const double tol = 1e-6 * std::max(1.0, std::abs(R0));
        for (std::size_t i = 0; i < p.R.size(); ++i)
            if (p.R[i] >= R0 - tol) {
                r.sup_abs = std::max(r.sup_abs, std::abs(p.value[i]));
                ++r.nodes;
            }
        r.product = R0 * r.sup_abs;
        out.push_back(r);
    }
    return out;
}

/// max |value| over the deepest tenth of the nodes.
inline double deepest_decile_sup(const RadialProfile& p) {
    const std::size_t n = std::max<std::size_t>(1, p.value.size() / 10);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(p.value[i]));
    return m;
}

/// Least-squares slope of phi against log|sigma_D|^2 = l t over the `window` deepest interior nodes.
inline double lelong_estimate(const PotentialField& f, int window, int pole_order = 1) {
    detail::check_field(f);
    const auto& d = f.domain;
    if (window < 10) throw AnalysisError("lelong_estimate: window must contain at least 10 nodes");
    if (window > d.n_t - 2) throw AnalysisError("lelong_estimate: window larger than the interior");
    if (pole_order < 1) throw InputError("lelong_estimate: pole_order must be positive");
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs(window), ys(window);
    for (int q = 0; q < window; ++q) {
        const int i = 1 + q;
        xs[q] = pole_order * d.t(i);
        ys[q] = d.n_theta == 1 ? f.phi[i] : detail::theta_mean(f, f.phi, i);
        sx += xs[q];
        sy += ys[q];
    }
    const double mx = sx / window, my = sy / window;
    double sxx = 0.0, sxy = 0.0;
    for (int q = 0; q < window; ++q) {
        sxx += (xs[q] - mx) * (xs[q] - mx);
        sxy += (xs[q] - mx) * (ys[q] - my);
    }
    return sxy / sxx;
}

struct TraceReport {
    double sup = 0.0;
    double t_at_sup = 0.0;
    double theta_at_sup = 0.0;
    std::size_t node = 0;
    bool at_inner_end = false;  // sup attained in the deepest tenth (degeneration signal)
    bool at_outer_end = false;  // sup attained in the outermost tenth
    RadialProfile profile;      // max over theta of the trace
};

/// tr_{g'} g in the diagonal reduced frame:
///   n = 1 : Delta phi / Delta phi'
///   cone  : phi' / phi2' + phi'' / phi2''   (horizontal and fiber eigenvalues)
inline TraceReport trace_comparison(const PotentialField& phi, const PotentialField& phi2) {
    detail::check_same_grid(phi, phi2);
    const auto& d = phi.domain;
    std::vector<double> tr(d.size());
    if (d.reduction == Reduction::calabi_cone_n2) {
        const auto a1 = detail::radial_first_derivative(phi), b1 = detail::radial_first_derivative(phi2);
        const auto a2 = detail::radial_second_derivative(phi), b2 = detail::radial_second_derivative(phi2);
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (!(a1[k] > 0 && a2[k] > 0 && b1[k] > 0 && b2[k] > 0))
                throw AnalysisError("trace_comparison: positivity violation");
            tr[k] = a1[k] / b1[k] + a2[k] / b2[k];
        }
    } else {
        const auto a = detail::n1_metric_coefficient(phi), b = detail::n1_metric_coefficient(phi2);
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (!(a[k] > 0 && b[k] > 0)) throw AnalysisError("trace_comparison: positivity violation");
            tr[k] = a[k] / b[k];
        }
    }
    TraceReport rep;
    rep.sup = -INFINITY;
    rep.profile.quantity = "trace";
    rep.profile.t = d.t_grid();
    rep.profile.value.assign(d.n_t, -INFINITY);
    for (int i = 0; i < d.n_t; ++i)
        for (int j = 0; j < d.n_theta; ++j) {
            const std::size_t k = d.index(i, j);
            rep.profile.value[i] = std::max(rep.profile.value[i], tr[k]);
            if (tr[k] > rep.sup) {
                rep.sup = tr[k];
                rep.node = k;
                rep.t_at_sup = d.t(i);
                rep.theta_at_sup = d.theta(j);
            }
        }
    const int i_sup = static_cast<int>(rep.node / d.n_theta);
    const int tenth = std::max(1, d.n_t / 10);
    rep.at_inner_end = i_sup < tenth;
    rep.at_outer_end = i_sup >= d.n_t - tenth;
    return rep;
}

struct SublogEntry {
    double eps = 0.0;
    std::vector<double> depths;  // inner ends t_min, 2 t_min, 4 t_min
    std::vector<double> C;       // fitted C_eps at each depth
    bool stable = false;
};

struct SublogReport {
    std::vector<SublogEntry> entries;
    bool sublog = false;  // every entry stable
};

struct SublogOptions {
    std::vector<double> eps = {1.0, 0.5, 0.25, 0.125};
    double pole_shift = 0.0;  // adds pole_shift * t to the left side (engineered discrepancy)
    double tol = 1e-9;
    int nodes = 4097;
};

/// L(t) = log(omega^n / nu ^ nubar) - rho for the closed-form model profile, against the
/// log-pole weight sigma = pole_order * t:
///   cusp_disk     : L = log(rho_tt / 4) - rho         (nu = dz / z)
///   cone_elliptic : L = log(k rho' rho'') - rho
/// C_eps = min(L - eps sigma) on grids reaching t_min, 2 t_min, 4 t_min. C_eps is stable when
/// |C3 - C2| <= max(tol, |C2 - C1| / 2).
inline SublogReport sublog_check(const ModelMetric& model, const ReducedDomain& d, const SublogOptions& opt = {},
                                 int pole_order = 1) {
    if (model.kind != ModelKind::cusp_disk && model.kind != ModelKind::cone_elliptic)
        throw InputError("sublog_check: need cusp_disk or cone_elliptic");
    if (!(d.t_max < 0.0)) throw InputError("sublog_check: need t_max < 0");
    if (opt.nodes < 5) throw InputError("sublog_check: need at least 5 nodes");
    auto L = [&](double t) {
        const ReducedPotential r = reduced_potential(model, t);
        const double lhs = model.kind == ModelKind::cusp_disk ? std::log(r.d2 / 4.0) - r.value
                                                              : std::log(model.k * r.d1 * r.d2) - r.value;
        return lhs + opt.pole_shift * t;
    };
    SublogReport rep;
    rep.sublog = true;
    for (double eps : opt.eps) {
        SublogEntry e;
        e.eps = eps;
        for (int q = 0; q < 3; ++q) {
            const double tmin = d.t_min * std::ldexp(1.0, q);
            e.depths.push_back(tmin);
            auto g = [&](double t) { return L(t) - eps * pole_order * t; };
            auto node = [&](int i) {
                return i == opt.nodes - 1 ? d.t_max : tmin + (d.t_max - tmin) * i / (opt.nodes - 1);
            };
            double c = INFINITY;
            int arg = 0;
            for (int i = 0; i < opt.nodes; ++i)
                if (const double v = g(node(i)); v < c) c = v, arg = i;
            // Golden-section refinement between the neighbours of an interior minimum.
            if (arg > 0 && arg < opt.nodes - 1) {
                const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
                double lo = node(arg - 1), hi = node(arg + 1);
                for (int it = 0; it < 200 && hi - lo > 1e-13 * std::abs(lo); ++it) {
                    const double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
                    if (g(x1) < g(x2))
                        hi = x2;
                    else
                        lo = x1;
                }
                c = std::min(c, g(0.5 * (lo + hi)));
            }
            e.C.push_back(c);
        }
        e.stable = std::abs(e.C[2] - e.C[1]) <= std::max(opt.tol, 0.5 * std::abs(e.C[1] - e.C[0]));
        rep.sublog = rep.sublog && e.stable;
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

}  // namespace kecusp
