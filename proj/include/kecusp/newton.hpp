#pragma once

// Damped Newton iteration with Armijo backtracking on the residual 2-norm.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace kecusp {

struct NewtonOptions {
    double tol = 1e-10;      // sup-norm of the discrete residual
    int max_iter = 50;
    double min_step = 1.0 / (1 << 20);
    double armijo = 1e-4;
};

struct NewtonOutcome {
    bool converged = false;
    bool stalled = false;  // line search exhausted
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;     // sup-norm residual of every accepted iterate
    std::vector<double> history_l2;  // 2-norm residual of every accepted iterate
};

namespace detail {

template <typename Real>
double sup_norm(const std::vector<Real>& r) {
    Real m = 0;
    for (const Real& v : r) m = std::max<Real>(m, std::abs(v));
    return static_cast<double>(m);
}

template <typename Real>
Real two_norm(const std::vector<Real>& r) {
    Real s = 0;
    for (const Real& v : r) s += v * v;
    return std::sqrt(s);
}

}  // namespace detail

/// `residual(x, r)` fills r and returns false when x is inadmissible (e.g. positivity lost);
/// `solve(x, r, dx)` solves J(x) dx = -r. Entries of dx for fixed (boundary) unknowns must be 0.
template <typename Real, typename Residual, typename LinearSolve>
NewtonOutcome damped_newton(std::vector<Real>& x, Residual&& residual, LinearSolve&& solve,
                            const NewtonOptions& opt) {
    NewtonOutcome out;
    std::vector<Real> r(x.size()), trial(x.size()), rt(x.size()), dx(x.size());
    if (!residual(x, r)) {
        out.stalled = true;
        out.residual = INFINITY;
        return out;
    }
    out.residual = detail::sup_norm(r);
    out.history.push_back(out.residual);
    Real norm = detail::two_norm(r);
    out.history_l2.push_back(static_cast<double>(norm));
    while (true) {
        if (out.residual <= opt.tol) {
            out.converged = true;
            return out;
        }
        if (out.iterations >= opt.max_iter || !std::isfinite(out.residual)) return out;
        solve(x, r, dx);
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= opt.min_step) {
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + Real(alpha) * dx[i];
            if (residual(trial, rt)) {
                const Real nt = detail::two_norm(rt);
                if (std::isfinite(static_cast<double>(nt)) && nt <= (Real(1) - Real(opt.armijo * alpha)) * norm) {
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            out.stalled = true;
            return out;
        }
        x.swap(trial);
        r.swap(rt);
        norm = detail::two_norm(r);
        ++out.iterations;
        out.residual = detail::sup_norm(r);
        out.history.push_back(out.residual);
        out.history_l2.push_back(static_cast<double>(norm));
    }
}

}  // namespace kecusp
