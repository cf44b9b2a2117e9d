#pragma once

// Newton solvers for the reduced Monge-Ampere equations, the s-continuation family,
// the log-log barrier seed and the boundary sandwich check.
//
//   radial_n1      : phi_tt + 4 s e^{2t} = 4 e^{2t + phi} F
//   polar2d_n1     : phi_tt + phi_thth + 4 s e^{2t} = 4 e^{2t + phi} F
//   calabi_cone_n2 : 2k phi' phi'' = e^phi F        (F = c for the cone_pole density)

#include "kecusp/error.hpp"
#include "kecusp/geom.hpp"
#include "kecusp/linalg.hpp"
#include "kecusp/newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace kecusp {

/// Solution candidate on a reduced grid with its Dirichlet traces.
struct PotentialField {
    ReducedDomain domain;
    std::vector<double> phi;        // domain.size() samples, index(i, j)
    std::vector<double> inner_psi;  // n_theta samples at t_min
    std::vector<double> outer_psi;  // n_theta samples at t_max

    double operator()(int i, int j = 0) const { return phi[domain.index(i, j)]; }
};

struct SolveReport {
    std::vector<double> s_values;
    std::vector<std::vector<double>> residual_history;     // per s, sup-norm
    std::vector<std::vector<double>> residual_l2_history;  // per s, 2-norm (the line-search merit)
    std::vector<int> iterations;                           // per s
    double final_residual = 0.0;
    bool converged = false;
    bool positivity_maintained = true;
    int attempts = 1;  // seeds tried by the cone solver
    std::string message;

    // continuation only
    std::vector<double> lipschitz_quotients;  // sup_K |phi_s - phi_s'| / |s - s'|
    double lipschitz_constant = 0.0;
    std::vector<double> barrier_constants;    // max(barrier - phi_s) per s
    double barrier_constant = 0.0;
};

struct SolveResult {
    PotentialField field;
    SolveReport report;
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 50;
};

inline void write_potential_csv(std::ostream& os, const PotentialField& f) {
    os.precision(17);
    const auto& d = f.domain;
    os << (d.polar() ? "t,theta,phi\n" : "t,phi\n");
    for (int i = 0; i < d.n_t; ++i)
        for (int j = 0; j < d.n_theta; ++j) {
            os << d.t(i) << ',';
            if (d.polar()) os << d.theta(j) << ',';
            os << f.phi[d.index(i, j)] << '\n';
        }
}

namespace detail {

using Work = long double;

inline void check_density(const ReducedDomain& dom, const DensityField& den) {
    if (den.log_f.size() != dom.size()) throw InputError("solver: density does not match the domain grid");
    for (double v : den.log_f)
        if (!std::isfinite(v)) throw InputError("solver: non-finite density sample");
    if (!(den.amplitude >= 0.0)) throw InputError("solver: negative density");
}

inline void check_trace(std::span<const double> psi, int n, const char* what) {
    if (static_cast<int>(psi.size()) != n) throw InputError(std::string("solver: ") + what + " has the wrong length");
    for (double v : psi)
        if (!std::isfinite(v)) throw InputError(std::string("solver: non-finite ") + what);
}

/// phi on the grid, affine in t along every ray between the two traces.
inline std::vector<double> affine_fill(const ReducedDomain& d, std::span<const double> inner,
                                       std::span<const double> outer) {
    std::vector<double> phi(d.size());
    for (int i = 0; i < d.n_t; ++i) {
        const double w = (d.t(i) - d.t_min) / (d.t_max - d.t_min);
        for (int j = 0; j < d.n_theta; ++j) phi[d.index(i, j)] = (1.0 - w) * inner[j] + w * outer[j];
    }
    return phi;
}

inline std::vector<Work> to_work(const std::vector<double>& v) { return {v.begin(), v.end()}; }

inline std::vector<double> to_double(const std::vector<Work>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](Work x) { return static_cast<double>(x); });
    return out;
}

inline void pin_boundary(const ReducedDomain& d, std::vector<Work>& x, std::span<const double> inner,
                         std::span<const double> outer) {
    for (int j = 0; j < d.n_theta; ++j) {
        x[d.index(0, j)] = inner[j];
        x[d.index(d.n_t - 1, j)] = outer[j];
    }
}

/// Newton for the n = 1 reductions (radial and periodic polar grids).
inline SolveResult solve_n1(const ReducedDomain& d, const DensityField& den, std::span<const double> inner,
                            std::span<const double> outer, std::vector<double> seed, const SolveOptions& opt) {
    const int nt = d.n_t, nth = d.n_theta;
    const Work h = static_cast<Work>(d.h());
    const Work ih2 = 1 / (h * h);
    const bool polar = d.polar();
    const Work dth = static_cast<Work>(d.dtheta());
    const Work ith2 = polar ? 1 / (dth * dth) : Work(0);
    std::vector<Work> e2t(nt), logF(d.size());
    for (int i = 0; i < nt; ++i) e2t[i] = std::exp(2 * static_cast<Work>(d.t(i)));
    for (std::size_t k = 0; k < d.size(); ++k)
        logF[k] = den.amplitude > 0 ? std::log(static_cast<Work>(den.amplitude)) + den.log_f[k]
                                    : -std::numeric_limits<Work>::infinity();
    const Work bg = den.background;

    auto nonlinear = [&](int i, std::size_t k, Work phi) {
        return den.amplitude > 0 ? 4 * std::exp(2 * static_cast<Work>(d.t(i)) + phi + logF[k]) : Work(0);
    };
    auto residual = [&](const std::vector<Work>& x, std::vector<Work>& r) {
        std::fill(r.begin(), r.end(), Work(0));
        for (int i = 1; i < nt - 1; ++i)
            for (int j = 0; j < nth; ++j) {
                const std::size_t k = d.index(i, j);
                Work lap = (x[d.index(i + 1, j)] - 2 * x[k] + x[d.index(i - 1, j)]) * ih2;
                if (polar)
                    lap += (x[d.index(i, (j + 1) % nth)] - 2 * x[k] + x[d.index(i, (j + nth - 1) % nth)]) * ith2;
                r[k] = lap + 4 * bg * e2t[i] - nonlinear(i, k, x[k]);
            }
        return true;
    };
    auto solve = [&](const std::vector<Work>& x, const std::vector<Work>& r, std::vector<Work>& dx) {
        std::fill(dx.begin(), dx.end(), Work(0));
        const int m = nt - 2;
        if (!polar) {
            std::vector<Work> lo(m, ih2), di(m), up(m, ih2), b(m);
            for (int i = 1; i < nt - 1; ++i) {
                di[i - 1] = -2 * ih2 - nonlinear(i, i, x[i]);
                b[i - 1] = -r[i];
            }
            linalg::solve_tridiagonal<Work>(lo, di, up, b);
            for (int i = 1; i < nt - 1; ++i) dx[i] = b[i - 1];
            return;
        }
        std::vector<linalg::Dense<Work>> blocks;
        blocks.reserve(m);
        std::vector<Work> b(static_cast<std::size_t>(m) * nth);
        for (int i = 1; i < nt - 1; ++i) {
            linalg::Dense<Work> D(nth);
            for (int j = 0; j < nth; ++j) {
                const std::size_t k = d.index(i, j);
                D(j, j) = -2 * ih2 - 2 * ith2 - nonlinear(i, k, x[k]);
                D(j, (j + 1) % nth) += ith2;
                D(j, (j + nth - 1) % nth) += ith2;
                b[static_cast<std::size_t>(i - 1) * nth + j] = -r[k];
            }
            blocks.push_back(std::move(D));
        }
        std::vector<Work> off(m > 0 ? m - 1 : 0, ih2);
        linalg::solve_block_tridiagonal<Work>(std::move(blocks), off, b);
        for (int i = 1; i < nt - 1; ++i)
            for (int j = 0; j < nth; ++j) dx[d.index(i, j)] = b[static_cast<std::size_t>(i - 1) * nth + j];
    };

    std::vector<Work> x = to_work(seed);
    pin_boundary(d, x, inner, outer);
    NewtonOptions no;
    no.tol = opt.tol;
    no.max_iter = opt.max_iter;
    const NewtonOutcome out = damped_newton<Work>(x, residual, solve, no);

    SolveResult res;
    res.field = PotentialField{d, to_double(x), {inner.begin(), inner.end()}, {outer.begin(), outer.end()}};
    res.report.s_values = {den.s};
    res.report.residual_history = {out.history};
    res.report.residual_l2_history = {out.history_l2};
    res.report.iterations = {out.iterations};
    res.report.final_residual = out.residual;
    res.report.converged = out.converged;
    // Positivity of s + e^{-2t} phi_tt / 4 (n = 1 metric coefficient).
    for (int i = 1; i < nt - 1; ++i)
        for (int j = 0; j < nth; ++j) {
            const std::size_t k = d.index(i, j);
            Work lap = (x[d.index(i + 1, j)] - 2 * x[k] + x[d.index(i - 1, j)]) * ih2;
            if (polar) lap += (x[d.index(i, (j + 1) % nth)] - 2 * x[k] + x[d.index(i, (j + nth - 1) % nth)]) * ith2;
            if (lap + 4 * bg * e2t[i] < -Work(opt.tol)) res.report.positivity_maintained = false;
        }
    if (!out.converged)
        res.report.message = out.stalled ? "line search stalled" : "maximum Newton iterations reached";
    return res;
}

}  // namespace detail

/// Log-log barrier -2n log(-l t), optionally made to match Dirichlet traces by adding a
/// function affine in t along each ray.
inline PotentialField barrier_initializer(const ReducedDomain& d, const DivisorData& div,
                                          std::span<const double> inner = {},
                                          std::span<const double> outer = {}) {
    const std::vector<double> sig = sigma_d_weight(d, div);
    const double n = d.complex_dim();
    PotentialField f;
    f.domain = d;
    f.phi.resize(d.size());
    for (int i = 0; i < d.n_t; ++i)
        for (int j = 0; j < d.n_theta; ++j) f.phi[d.index(i, j)] = -2.0 * n * std::log(-sig[i]);
    const double b_in = f.phi[d.index(0, 0)], b_out = f.phi[d.index(d.n_t - 1, 0)];
    if (!inner.empty() || !outer.empty()) {
        detail::check_trace(inner, d.n_theta, "inner trace");
        detail::check_trace(outer, d.n_theta, "outer trace");
        for (int i = 0; i < d.n_t; ++i) {
            const double w = (d.t(i) - d.t_min) / (d.t_max - d.t_min);
            for (int j = 0; j < d.n_theta; ++j)
                f.phi[d.index(i, j)] += (1.0 - w) * (inner[j] - b_in) + w * (outer[j] - b_out);
        }
    }
    f.inner_psi.resize(d.n_theta);
    f.outer_psi.resize(d.n_theta);
    for (int j = 0; j < d.n_theta; ++j) {
        f.inner_psi[j] = f.phi[d.index(0, j)];
        f.outer_psi[j] = f.phi[d.index(d.n_t - 1, j)];
    }
    return f;
}

/// Radial n = 1 problem on the annulus t in [t_min, t_max] with Dirichlet values at both ends.
inline SolveResult solve_liouville_radial(const ReducedDomain& d, const DensityField& den, double phi_inner,
                                          double phi_outer, const SolveOptions& opt = {},
                                          std::optional<std::vector<double>> seed = std::nullopt) {
    if (d.reduction != Reduction::radial_n1) throw InputError("solve_liouville_radial: need a radial_n1 domain");
    if (!(opt.tol > 0.0)) throw InputError("solver: tol must be positive");
    detail::check_density(d, den);
    const double in[1] = {phi_inner}, out[1] = {phi_outer};
    detail::check_trace(in, 1, "inner value");
    detail::check_trace(out, 1, "outer value");
    if (seed && seed->size() != d.size()) throw InputError("solver: seed does not match the grid");
    std::vector<double> x0 = seed ? *seed
                             : (d.t_max < 0.0 ? barrier_initializer(d, DivisorData{}, in, out).phi
                                              : detail::affine_fill(d, in, out));
    return detail::solve_n1(d, den, in, out, std::move(x0), opt);
}

/// Periodic polar n = 1 problem with Dirichlet traces on both circles.
inline SolveResult solve_liouville_2d(const ReducedDomain& d, const DensityField& den,
                                      std::span<const double> inner_psi, std::span<const double> outer_psi,
                                      const SolveOptions& opt = {},
                                      std::optional<std::vector<double>> seed = std::nullopt) {
    if (d.reduction != Reduction::polar2d_n1) throw InputError("solve_liouville_2d: need a polar2d_n1 domain");
    if (!(opt.tol > 0.0)) throw InputError("solver: tol must be positive");
    detail::check_density(d, den);
    detail::check_trace(inner_psi, d.n_theta, "inner trace");
    detail::check_trace(outer_psi, d.n_theta, "outer trace");
    if (seed && seed->size() != d.size()) throw InputError("solver: seed does not match the grid");
    std::vector<double> x0 = seed ? *seed
                             : (d.t_max < 0.0 ? barrier_initializer(d, DivisorData{}, inner_psi, outer_psi).phi
                                              : detail::affine_fill(d, inner_psi, outer_psi));
    return detail::solve_n1(d, den, inner_psi, outer_psi, std::move(x0), opt);
}

namespace detail {

/// -B log(-t) + c0 through both boundary values (B > 0 keeps phi' > 0 and phi'' > 0).
inline std::optional<std::vector<double>> fitted_log_seed(const ReducedDomain& d, double a, double b) {
    const double la = std::log(-d.t_min), lb = std::log(-d.t_max);
    const double B = (b - a) / (la - lb);
    if (!(B > 0.0) || !std::isfinite(B)) return std::nullopt;
    const double c0 = b + B * lb;
    std::vector<double> x(d.n_t);
    for (int i = 0; i < d.n_t; ++i) x[i] = -B * std::log(-d.t(i)) + c0;
    return x;
}

inline SolveResult solve_cone_once(const ReducedDomain& d, const DensityField& den, double a, double b,
                                   std::vector<double> seed, const SolveOptions& opt) {
    const int nt = d.n_t;
    const Work h = static_cast<Work>(d.h());
    const Work k2 = 2 * static_cast<Work>(d.k);
    std::vector<Work> logF(nt);
    for (int i = 0; i < nt; ++i) logF[i] = std::log(static_cast<Work>(den.amplitude)) + den.log_f[i];

    auto residual = [&](const std::vector<Work>& x, std::vector<Work>& r) {
        std::fill(r.begin(), r.end(), Work(0));
        for (int i = 1; i < nt - 1; ++i) {
            const Work d1 = (x[i + 1] - x[i - 1]) / (2 * h);
            const Work d2 = (x[i + 1] - 2 * x[i] + x[i - 1]) / (h * h);
            if (!(d1 > 0 && d2 > 0)) return false;
            r[i] = k2 * d1 * d2 - std::exp(x[i] + logF[i]);
        }
        return true;
    };
    auto solve = [&](const std::vector<Work>& x, const std::vector<Work>& r, std::vector<Work>& dx) {
        const int m = nt - 2;
        std::vector<Work> lo(m), di(m), up(m), rhs(m);
        for (int i = 1; i < nt - 1; ++i) {
            const Work d1 = (x[i + 1] - x[i - 1]) / (2 * h);
            const Work d2 = (x[i + 1] - 2 * x[i] + x[i - 1]) / (h * h);
            lo[i - 1] = k2 * (-d2 / (2 * h) + d1 / (h * h));
            di[i - 1] = k2 * (-2 * d1 / (h * h)) - std::exp(x[i] + logF[i]);
            up[i - 1] = k2 * (d2 / (2 * h) + d1 / (h * h));
            rhs[i - 1] = -r[i];
        }
        linalg::solve_tridiagonal<Work>(lo, di, up, rhs);
        std::fill(dx.begin(), dx.end(), Work(0));
        for (int i = 1; i < nt - 1; ++i) dx[i] = rhs[i - 1];
    };

    std::vector<Work> x = to_work(seed);
    x.front() = a;
    x.back() = b;
    NewtonOptions no;
    no.tol = opt.tol;
    no.max_iter = opt.max_iter;
    const NewtonOutcome out = damped_newton<Work>(x, residual, solve, no);

    SolveResult res;
    res.field = PotentialField{d, to_double(x), {a}, {b}};
    res.report.s_values = {den.s};
    res.report.residual_history = {out.history};
    res.report.residual_l2_history = {out.history_l2};
    res.report.iterations = {out.iterations};
    res.report.final_residual = out.residual;
    res.report.converged = out.converged;
    std::vector<Work> r(x.size());
    res.report.positivity_maintained = residual(x, r);
    if (!out.converged)
        res.report.message = out.stalled ? "line search stalled (positivity or residual)" : "maximum Newton iterations reached";
    return res;
}

}  // namespace detail

/// Calabi-ansatz cone equation 2k phi' phi'' = e^phi F with Dirichlet values at both ends.
/// Seeds are tried in order: the supplied one, the barrier initializer, a fitted -B log(-t) profile.
inline SolveResult solve_calabi_ansatz(const ReducedDomain& d, const DensityField& den, double phi_inner,
                                       double phi_outer, const SolveOptions& opt = {},
                                       std::optional<std::vector<double>> seed = std::nullopt) {
    if (d.reduction != Reduction::calabi_cone_n2) throw InputError("solve_calabi_ansatz: need a calabi_cone_n2 domain");
    if (!(opt.tol > 0.0)) throw InputError("solver: tol must be positive");
    detail::check_density(d, den);
    if (!(den.amplitude > 0.0)) throw InputError("solve_calabi_ansatz: density must be positive");
    if (den.background != 0.0)
        throw InputError("solve_calabi_ansatz: the s-background term is supported only for n = 1 reductions");
    if (!std::isfinite(phi_inner) || !std::isfinite(phi_outer)) throw InputError("solver: non-finite boundary value");
    if (!(phi_inner < phi_outer))
        throw InputError("solve_calabi_ansatz: boundary values must increase in t (phi' > 0)");
    if (seed && seed->size() != d.size()) throw InputError("solver: seed does not match the grid");

    std::vector<std::vector<double>> seeds;
    if (seed) seeds.push_back(*seed);
    if (d.t_max < 0.0) {
        const double in[1] = {phi_inner}, out[1] = {phi_outer};
        seeds.push_back(barrier_initializer(d, DivisorData{}, in, out).phi);
    }
    if (auto s = detail::fitted_log_seed(d, phi_inner, phi_outer)) seeds.push_back(*s);
    if (seeds.empty()) seeds.push_back(detail::affine_fill(d, std::span(&phi_inner, 1), std::span(&phi_outer, 1)));

    SolveResult best;
    int attempts = 0;
    for (auto& s : seeds) {
        ++attempts;
        SolveResult r = detail::solve_cone_once(d, den, phi_inner, phi_outer, std::move(s), opt);
        if (r.report.converged && r.report.positivity_maintained) {
            r.report.attempts = attempts;
            return r;
        }
        if (attempts == 1 || r.report.final_residual < best.report.final_residual) best = std::move(r);
    }
    best.report.attempts = attempts;
    return best;
}

/// Dispatches on the reduction of the domain.
inline SolveResult solve_reduced(const ReducedDomain& d, const DensityField& den, std::span<const double> inner,
                                 std::span<const double> outer, const SolveOptions& opt = {},
                                 std::optional<std::vector<double>> seed = std::nullopt) {
    switch (d.reduction) {
        case Reduction::radial_n1:
            detail::check_trace(inner, 1, "inner trace");
            detail::check_trace(outer, 1, "outer trace");
            return solve_liouville_radial(d, den, inner[0], outer[0], opt, std::move(seed));
        case Reduction::polar2d_n1: return solve_liouville_2d(d, den, inner, outer, opt, std::move(seed));
        case Reduction::calabi_cone_n2:
            detail::check_trace(inner, 1, "inner trace");
            detail::check_trace(outer, 1, "outer trace");
            return solve_calabi_ansatz(d, den, inner[0], outer[0], opt, std::move(seed));
    }
    throw InputError("solver: unknown reduction");
}

struct ContinuationSchedule {
    std::vector<double> s_values;
    double tol = 1e-10;
    int max_iter = 50;

    /// {1, 1/2, ..., 2^-levels, 0}
    static ContinuationSchedule halving(int levels, double tol = 1e-10, int max_iter = 50) {
        ContinuationSchedule s;
        for (int j = 0; j <= levels; ++j) s.s_values.push_back(std::ldexp(1.0, -j));
        s.s_values.push_back(0.0);
        s.tol = tol;
        s.max_iter = max_iter;
        return s;
    }
};

inline void validate(const ContinuationSchedule& s) {
    if (s.s_values.empty()) throw InputError("schedule: s_values must not be empty");
    if (!(s.s_values.front() <= 1.0)) throw InputError("schedule: s_values[0] must be <= 1");
    for (std::size_t i = 1; i < s.s_values.size(); ++i)
        if (!(s.s_values[i] < s.s_values[i - 1])) throw InputError("schedule: s_values must be strictly decreasing");
    if (s.s_values.back() != 0.0) throw InputError("schedule: the last entry must be 0");
    for (double v : s.s_values)
        if (!(v >= 0.0)) throw InputError("schedule: s_values must be >= 0");
    if (!(s.tol > 0.0)) throw InputError("schedule: tol must be positive");
    if (s.max_iter < 1) throw InputError("schedule: max_iter must be >= 1");
}

/// Regularized family (s theta + i ddbar phi_s)^n = e^phi_s (|sigma_E|^2 + s)/(|sigma_F|^2 + s) Omega
/// on an n = 1 reduction with fixed Dirichlet traces.
struct ContinuationProblem {
    ReducedDomain domain;
    DivisorData divisor;
    DensityKind density = DensityKind::smooth_unit;
    std::vector<double> custom_log_f;
    std::vector<double> inner_psi;
    std::vector<double> outer_psi;
    std::optional<std::vector<double>> seed;  // warm start for the first s
    int compact_margin = 10;                  // nodes excluded at each end of K
};

struct ContinuationResult {
    std::vector<PotentialField> fields;
    SolveReport report;
};

inline ContinuationResult continuation_solve(const ContinuationProblem& p, const ContinuationSchedule& sched) {
    validate(sched);
    const ReducedDomain& d = p.domain;
    if (d.reduction == Reduction::calabi_cone_n2)
        throw InputError("continuation_solve: supported for n = 1 reductions only");
    validate(p.divisor);
    detail::check_trace(p.inner_psi, d.n_theta, "inner trace");
    detail::check_trace(p.outer_psi, d.n_theta, "outer trace");
    if (d.n_t <= 2 * p.compact_margin) throw InputError("continuation_solve: grid too small for the interior compact");

    const PotentialField barrier = barrier_initializer(d, p.divisor);
    ContinuationResult res;
    SolveReport& rep = res.report;
    rep.converged = true;
    std::optional<std::vector<double>> warm = p.seed;
    if (!warm) warm = barrier_initializer(d, p.divisor, p.inner_psi, p.outer_psi).phi;
    const SolveOptions opt{sched.tol, sched.max_iter};

    for (double s : sched.s_values) {
        const DensityField den = build_density(d, p.divisor, s, p.density, p.custom_log_f);
        SolveResult r = solve_reduced(d, den, p.inner_psi, p.outer_psi, opt, warm);
        rep.s_values.push_back(s);
        rep.residual_history.push_back(r.report.residual_history.front());
        rep.residual_l2_history.push_back(r.report.residual_l2_history.front());
        rep.iterations.push_back(r.report.iterations.front());
        rep.final_residual = r.report.final_residual;
        rep.positivity_maintained = rep.positivity_maintained && r.report.positivity_maintained;
        if (!r.report.converged) {
            rep.converged = false;
            rep.message = "Newton failed at s = " + std::to_string(s) + ": " + r.report.message;
            break;
        }
        double c = -INFINITY;
        for (std::size_t k = 0; k < d.size(); ++k) c = std::max(c, barrier.phi[k] - r.field.phi[k]);
        rep.barrier_constants.push_back(c);
        warm = r.field.phi;
        res.fields.push_back(std::move(r.field));
    }

    const int m = p.compact_margin;
    for (std::size_t q = 1; q < res.fields.size(); ++q) {
        double sup = 0.0;
        for (int i = m; i < d.n_t - m; ++i)
            for (int j = 0; j < d.n_theta; ++j) {
                const std::size_t k = d.index(i, j);
                sup = std::max(sup, std::abs(res.fields[q].phi[k] - res.fields[q - 1].phi[k]));
            }
        rep.lipschitz_quotients.push_back(sup / (rep.s_values[q - 1] - rep.s_values[q]));
    }
    for (double v : rep.lipschitz_quotients) rep.lipschitz_constant = std::max(rep.lipschitz_constant, v);
    rep.barrier_constant = rep.barrier_constants.empty()
                               ? 0.0
                               : *std::max_element(rep.barrier_constants.begin(), rep.barrier_constants.end());
    return res;
}

struct SandwichReport {
    bool upper_ok = false;
    bool lower_ok = false;
    bool supersolution_ok = false;
    double upper_margin = 0.0;   // min (u - phi)
    double lower_margin = 0.0;   // min (phi - lower)
    std::size_t upper_node = 0;  // node attaining upper_margin
    std::size_t lower_node = 0;
    double A = 0.0;
    double A_min = 0.0;  // smallest A for which u is a supersolution comparison function
    double a = 0.0;      // rho at the outer boundary
    double b = 0.0;      // fitted slope of the lower barrier
    std::vector<double> upper;
    std::vector<double> lower;
};

/// Nodewise lower <= phi <= upper with margins; `tol` absorbs roundoff.
inline SandwichReport sandwich_margins(std::span<const double> phi, std::span<const double> lower,
                                       std::span<const double> upper, double tol = 1e-12) {
    if (phi.size() != lower.size() || phi.size() != upper.size()) throw AnalysisError("sandwich: size mismatch");
    SandwichReport r;
    r.upper_margin = r.lower_margin = INFINITY;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double su = upper[k] - phi[k], sl = phi[k] - lower[k];
        if (su < r.upper_margin) r.upper_margin = su, r.upper_node = k;
        if (sl < r.lower_margin) r.lower_margin = sl, r.lower_node = k;
    }
    const double scale = tol * std::max(1.0, *std::max_element(phi.begin(), phi.end(),
                                                               [](double x, double y) { return std::abs(x) < std::abs(y); }));
    r.upper_ok = r.upper_margin >= -std::abs(scale);
    r.lower_ok = r.lower_margin >= -std::abs(scale);
    r.upper.assign(upper.begin(), upper.end());
    r.lower.assign(lower.begin(), lower.end());
    return r;
}

/// b (rho - a) + psi_out <= phi <= u, where u carries phi's boundary traces and solves
/// Delta u = -A (Euclidean Laplacian of the unreduced geometry); rho = |z|^2 or |w|^2.
/// The slope b is the smallest one making the lower inequality hold on the outer layer of
/// `layer` nodes.
inline SandwichReport sandwich_check(const PotentialField& f, double A, int layer = 10) {
    const ReducedDomain& d = f.domain;
    if (f.phi.size() != d.size()) throw AnalysisError("sandwich: field does not match its domain");
    if (!(A >= 0.0) || !std::isfinite(A)) throw InputError("sandwich: A must be >= 0");
    const int nt = d.n_t, nth = d.n_theta;
    layer = std::clamp(layer, 1, nt - 1);
    const bool cone = d.reduction == Reduction::calabi_cone_n2;
    const double h = d.h();
    // Delta = w(t) (d_tt [+ d_thth]) with w = e^{-2t} (n = 1) or 4 e^{-t} (cone).
    auto weight = [&](double t) { return cone ? 4.0 * std::exp(-t) : std::exp(-2.0 * t); };
    auto rho = [&](double t) { return cone ? std::exp(t) : std::exp(2.0 * t); };

    double A_min = 0.0;
    for (int i = 1; i < nt - 1; ++i)
        for (int j = 0; j < nth; ++j) {
            const std::size_t k = d.index(i, j);
            double lap = (f.phi[d.index(i + 1, j)] - 2 * f.phi[k] + f.phi[d.index(i - 1, j)]) / (h * h);
            if (d.polar()) {
                const double dth = d.dtheta();
                lap += (f.phi[d.index(i, (j + 1) % nth)] - 2 * f.phi[k] + f.phi[d.index(i, (j + nth - 1) % nth)]) /
                       (dth * dth);
            }
            A_min = std::max(A_min, -weight(d.t(i)) * lap);
        }

    // Upper function: discrete Poisson problem with phi's traces.
    ReducedDomain dz = d;
    if (cone) dz.reduction = Reduction::radial_n1;
    DensityField zero;
    zero.kind = DensityKind::zero;
    zero.amplitude = 0.0;
    zero.log_f.assign(d.size(), 0.0);
    // A e^{2t} / 4 (n = 1) enters like the background term 4 s e^{2t}; the cone uses a rescaled copy.
    std::vector<double> in(nth), out(nth);
    for (int j = 0; j < nth; ++j) {
        in[j] = f.phi[d.index(0, j)];
        out[j] = f.phi[d.index(nt - 1, j)];
    }
    std::vector<double> u;
    if (!cone) {
        zero.background = A / 4.0;
        u = detail::solve_n1(dz, zero, in, out, detail::affine_fill(dz, in, out), SolveOptions{1e-9, 5}).field.phi;
    } else {
        // u'' = -A e^t / 4: direct tridiagonal solve.
        const int m = nt - 2;
        std::vector<long double> lo(m, 1.0L / (h * h)), di(m, -2.0L / (h * h)), up(m, 1.0L / (h * h)), b(m);
        for (int i = 1; i < nt - 1; ++i) b[i - 1] = -A * std::exp(d.t(i)) / 4.0;
        b.front() -= in[0] / (h * h);
        b.back() -= out[0] / (h * h);
        linalg::solve_tridiagonal<long double>(lo, di, up, b);
        u.resize(nt);
        u.front() = in[0];
        u.back() = out[0];
        for (int i = 1; i < nt - 1; ++i) u[i] = static_cast<double>(b[i - 1]);
    }

    // Lower barrier slope from the outer layer.
    const double a = rho(d.t_max);
    double b = 0.0;
    for (int i = nt - 1 - layer; i < nt - 1; ++i)
        for (int j = 0; j < nth; ++j)
            b = std::max(b, (f.phi[d.index(i, j)] - out[j]) / (rho(d.t(i)) - a));
    std::vector<double> lower(d.size());
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nth; ++j) lower[d.index(i, j)] = out[j] + b * (rho(d.t(i)) - a);

    SandwichReport r = sandwich_margins(f.phi, lower, u);
    r.A = A;
    r.A_min = A_min;
    r.supersolution_ok = A >= A_min;
    r.a = a;
    r.b = b;
    return r;
}

}  // namespace kecusp
