// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include "kecusp/kecusp.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace kecusp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

SolveResult solve_config(const RunConfig& c) {
    const ReducedDomain d = c.domain.build();
    const DensityField den = build_density(d, c.divisor, c.density.s, c.density.kind, c.density.log_f);
    const auto [in, out] = boundary_traces(c.boundary, d, c.density);
    return solve_reduced(d, den, in, out, c.solver);
}

double max_error(const PotentialField& f, const std::function<double(double)>& exact) {
    double e = 0.0;
    for (int i = 0; i < f.domain.n_t; ++i) e = std::max(e, std::abs(f(i) - exact(f.domain.t(i))));
    return e;
}

PotentialField sampled(const ReducedDomain& d, const std::function<double(double)>& f) {
    PotentialField p;
    p.domain = d;
    p.phi.resize(d.size());
    for (int i = 0; i < d.n_t; ++i)
        for (int j = 0; j < d.n_theta; ++j) p.phi[d.index(i, j)] = f(d.t(i));
    return p;
}

SolveResult solve_cone(double t_min, double t_max, int n) {
    const auto d = build_domain(Reduction::calabi_cone_n2, t_min, t_max, n, std::nullopt, 1);
    const auto den = build_density(d, DivisorData{{}, {1.0}, 1}, 0.0, DensityKind::cone_pole);
    return solve_calabi_ansatz(d, den, oracle::cone_phi(t_min), oracle::cone_phi(t_max));
}

SolveResult solve_cusp(double t_min, double t_max, int n, double outer_shift = 0.0) {
    const auto d = build_domain(Reduction::radial_n1, t_min, t_max, n);
    const auto den = build_density(d, DivisorData{}, 0.0, DensityKind::smooth_unit);
    return solve_liouville_radial(d, den, oracle::cusp_phi(t_min), oracle::cusp_phi(t_max) + outer_shift);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Verdict cusp_exact() {
    const auto t0 = Clock::now();
    RunConfig c = preset("cusp-exact");
    const auto r1 = solve_config(c);
    c.domain.n_t = 2049;
    const auto r2 = solve_config(c);
    const double dt = seconds_since(t0);
    const double e1 = max_error(r1.field, oracle::cusp_phi), e2 = max_error(r2.field, oracle::cusp_phi);
    const int its = r1.report.iterations.front();
    const bool ok = r1.report.converged && its <= 12 && r1.report.final_residual <= 1e-10 && e1 <= 5e-4 &&
                    e1 / e2 >= 3.2 && e1 / e2 <= 4.8 && dt < 5.0;
    return {ok, fmt("iterations=%d residual=%.2e err1025=%.3e ratio=%.3f time=%.2fs", its, r1.report.final_residual,
                    e1, e1 / e2, dt)};
}

Verdict barrier_exponent() {
    const auto r = solve_config(preset("cone-exact"));
    if (!r.report.converged) return {false, "cone-exact did not converge"};
    const auto& f = r.field;
    // Least-squares slope of phi against log(-t) over the deepest tenth of the grid.
    const int m = f.domain.n_t / 10;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        const double x = std::log(-f.domain.t(i)), y = f(i);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    // C_j = max(barrier - phi) over depth doublings.
    std::vector<double> C;
    for (double t_min : {-100.0, -200.0, -400.0}) {
        const auto s = solve_cone(t_min, -2.0, 4097);
        if (!s.report.converged) return {false, "cone solve failed during depth doubling"};
        const auto b = barrier_initializer(s.field.domain, DivisorData{});
        double c = -INFINITY;
        for (std::size_t k = 0; k < b.phi.size(); ++k) c = std::max(c, b.phi[k] - s.field.phi[k]);
        C.push_back(c);
    }
    const double spread = *std::max_element(C.begin(), C.end()) - *std::min_element(C.begin(), C.end());
    const bool ok = std::abs(slope + 3.0) <= 0.05 && slope > -4.0 && spread <= 1e-3;
    return {ok, fmt("deep slope=%.5f C=[%.6f, %.6f, %.6f] spread=%.2e", slope, C[0], C[1], C[2], spread)};
}

Verdict finite_volume() {
    const double pi = std::numbers::pi;
    const auto d = build_domain(Reduction::radial_n1, -16, -0.25, 4097);
    const auto f = sampled(d, oracle::cusp_phi);
    const double v = volume_integral(f, -std::log(2.0)).total, ref = 2 * pi / std::log(2.0);
    const bool ok_a = std::abs(v - ref) <= 0.005 * ref;
    std::string tails;
    bool ok_b = true;
    const auto deep = build_domain(Reduction::radial_n1, -256, -1, 16385);
    const auto fd = sampled(deep, oracle::cusp_phi);
    for (int k : {4, 8, 16}) {
        const double tail = volume_integral(fd, -k).total, want = pi / k;
        ok_b = ok_b && std::abs(tail - want) <= 0.02 * want;
        tails += fmt(" k=%d:%.5f(target %.5f)", k, tail, want);
    }
    return {ok_a && ok_b, fmt("vol(|z|<=1/2)=%.6f target=%.6f;", v, ref) + tails};
}

Verdict volume_rigidity() {
    RunConfig c = preset("rigidity-pair");
    const auto a = solve_config(c);
    c.boundary.outer_shift = c.analysis.rigidity_shift;
    const auto b = solve_config(c);
    if (!a.report.converged || !b.report.converged) return {false, "rigidity pair did not converge"};
    const auto prof = rigidity_profile(a.field, b.field);
    const std::vector<double> R0 = {1, 2, 4};
    const auto ladder = rigidity_ladder(prof, R0);
    double C = 0.0;
    bool ok = prof.R.front() >= 4.0 - 1e-3;
    std::string s;
    for (const auto& r : ladder) {
        C = std::max(C, r.product);
        ok = ok && r.nodes > 0 && std::isfinite(r.product);
        s += fmt(" R0=%g:sup=%.4f", r.R0, r.sup_abs);
    }
    for (const auto& r : ladder) ok = ok && r.sup_abs <= C / r.R0 + 1e-15;
    const double dec = deepest_decile_sup(prof);
    const double lo = std::exp(-dec), hi = std::exp(dec);
    ok = ok && lo >= 0.99 && hi <= 1.01;
    return {ok, fmt("R_max=%.4f C=%.4f", prof.R.front(), C) + s + fmt(" decile ratio in [%.5f, %.5f]", lo, hi)};
}

Verdict comparison_principle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> val(-1.0, 1.0), gap(0.0, 1.0);
    const auto d1 = build_domain(Reduction::radial_n1, -8, -1, 257);
    const int nth = 16;
    const auto d2 = build_domain(Reduction::polar2d_n1, -8, -1, 65, nth);
    const auto den1 = build_density(d1, DivisorData{}, 0.0, DensityKind::smooth_unit);
    const auto den2 = build_density(d2, DivisorData{}, 0.0, DensityKind::smooth_unit);
    double worst = INFINITY;
    int failures = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const double a1 = val(rng), b1 = val(rng);
        const double a2 = a1 + gap(rng), b2 = b1 + gap(rng);
        const auto p = solve_liouville_radial(d1, den1, a1, b1), q = solve_liouville_radial(d1, den1, a2, b2);
        if (!p.report.converged || !q.report.converged) ++failures;
        for (std::size_t k = 0; k < d1.size(); ++k) worst = std::min(worst, q.field.phi[k] - p.field.phi[k]);
    }
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> in1(nth), out1(nth), in2(nth), out2(nth);
        for (int j = 0; j < nth; ++j) {
            in1[j] = val(rng), out1[j] = val(rng);
            in2[j] = in1[j] + gap(rng), out2[j] = out1[j] + gap(rng);
        }
        const auto p = solve_liouville_2d(d2, den2, in1, out1), q = solve_liouville_2d(d2, den2, in2, out2);
        if (!p.report.converged || !q.report.converged) ++failures;
        for (std::size_t k = 0; k < d2.size(); ++k) worst = std::min(worst, q.field.phi[k] - p.field.phi[k]);
    }
    const double dt = seconds_since(t0);
    const bool ok = failures == 0 && worst >= -1e-12 && dt < 30.0;
    return {ok, fmt("50 pairs, min(phi2 - phi1)=%.3e nonconverged=%d time=%.2fs", worst, failures, dt)};
}

Verdict continuation_lipschitz() {
    const RunConfig c = preset("continuation-ladder");
    const ReducedDomain d = c.domain.build();
    ContinuationProblem p;
    p.domain = d;
    p.divisor = c.divisor;
    p.density = c.density.kind;
    std::tie(p.inner_psi, p.outer_psi) = boundary_traces(c.boundary, d, c.density);
    const auto res = continuation_solve(p, c.schedule);
    if (!res.report.converged) return {false, "continuation failed: " + res.report.message};
    const auto& q = res.report.lipschitz_quotients;
    // The final step s = 2^-10 -> 0 is not a halving; the criterion covers s = 2^0 ... 2^-10.
    const auto last = q.end() - 1;
    const auto [lo, hi] = std::minmax_element(q.begin(), last);
    const double spread = *hi / *lo;
    return {spread <= 2.0, fmt("%zu halving quotients in [%.5f, %.5f], spread=%.4f (final step to s=0: %.5f)",
                               static_cast<std::size_t>(last - q.begin()), *lo, *hi, spread, q.back())};
}

Verdict einstein_constants() {
    bool ok = true;
    std::string s;
    for (double h : {1e-3, 5e-4}) {
        for (auto [kind, lambda, tol] : {std::tuple{ModelKind::hilbert_cusp, 2.0, 1e-6},
                                         std::tuple{ModelKind::ball_cusp, 3.0, 1e-4},
                                         std::tuple{ModelKind::cusp_disk, 2.0, 1e-4}}) {
            const auto m = make_model(kind);
            const auto rep = einstein_check(m, default_model_points(kind), h);
            ok = ok && std::abs(rep.lambda_hat - lambda) <= tol && rep.max_residual <= 1e-6;
            s += fmt(" %s@%g:%.9f/%.1e", std::string(to_string(kind)).c_str(), h, rep.lambda_hat, rep.max_residual);
        }
        // Analytic oracle for the Hilbert metric: g = diag(1 / (4 y1^2), 1 / (4 y2^2)).
        for (const auto& p : default_model_points(ModelKind::hilbert_cusp)) {
            const auto g = metric_tensor(make_model(ModelKind::hilbert_cusp), p, h);
            const double y1 = p[0].imag(), y2 = p[1].imag();
            ok = ok && std::abs(g(0, 0).real() - 1 / (4 * y1 * y1)) <= 1e-8 &&
                 std::abs(g(1, 1).real() - 1 / (4 * y2 * y2)) <= 1e-8 && std::abs(g(0, 1)) <= 1e-8;
        }
    }
    return {ok, "lambda/residual:" + s};
}

Verdict collapse() {
    const auto t0 = Clock::now();
    const auto L = make_quadratic_lattice(2, make_rational(1), make_rational(0), make_rational(0), make_rational(1));
    const double mu0 = covering_radius(L, 0.0);
    const double brute = oracle::covering_radius_bruteforce(L.embedded, 1e-12);
    std::vector<double> c;
    for (int i = 0; i <= 8; ++i) c.push_back(i);
    const auto prof = collapse_profile(L, c);
    const Mat2 g = cylinder_limit_gram();
    const bool gram_ok = g[0][0] == 2.0 && g[0][1] == -1.0 && g[1][0] == -1.0 && g[1][1] == 1.0;
    const double dt = seconds_since(t0);
    const bool ok = std::abs(mu0 - brute) <= 1e-9 && std::abs(mu0 - std::sqrt(6.0) / 2) <= 1e-9 && prof.monotone &&
                    prof.radii.back() < prof.radii.front() / 2 && gram_ok && dt < 20.0;
    return {ok, fmt("mu(0)=%.12f oracle=%.12f mu(8)=%.6f decreasing=%d gram=%d time=%.2fs", mu0, brute,
                    prof.radii.back(), prof.monotone, gram_ok, dt)};
}

Verdict completeness() {
    // R(t_min) at log(-t_min) = 3 and 5.
    auto R_cusp = [](double t_min) { return distance_profile(solve_cusp(t_min, -1, 8193).field).R.front(); };
    auto R_cone = [](double t_min) { return distance_profile(solve_cone(t_min, -1, 8193).field).R.front(); };
    const double dc = R_cusp(-std::exp(5.0)) - R_cusp(-std::exp(3.0));
    const double dk = R_cone(-std::exp(5.0)) - R_cone(-std::exp(3.0));
    const bool ok_cusp = std::abs(dc - 2.0) <= 0.04, ok_cone = std::abs(dk - 2.0) <= 0.04;
    return {ok_cusp && ok_cone, fmt("cusp dR=%.5f (%s), cone dR=%.5f (%s); target 2 +- 2%%", dc,
                                    ok_cusp ? "pass" : "fail", dk, ok_cone ? "pass" : "fail")};
}

Verdict lelong() {
    const auto r = solve_cone(-1000, -2, 4097);
    if (!r.report.converged) return {false, "deep cone solve did not converge"};
    const double nu = lelong_estimate(r.field, 10);
    const auto d = build_domain(Reduction::radial_n1, -1000, -2, 4097);
    const double one = lelong_estimate(sampled(d, [](double t) { return t; }), 10);
    const bool ok = std::abs(nu) <= 0.03 && std::abs(one - 1.0) <= 0.01;
    return {ok, fmt("cone slope at t~%.0f = %.5f; phi=t slope = %.5f", d.t(1), nu, one)};
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    const std::vector<std::pair<const char*, Verdict (*)()>> criteria = {
        {"cusp exact solution", cusp_exact},
        {"barrier exponent n+k", barrier_exponent},
        {"finite volume", finite_volume},
        {"volume rigidity", volume_rigidity},
        {"comparison principle", comparison_principle},
        {"s-Lipschitz continuation", continuation_lipschitz},
        {"model Einstein constants", einstein_constants},
        {"collapse", collapse},
        {"completeness", completeness},
        {"Lelong number", lelong},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("%s %2zu %-26s %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu passed in %.1fs\n", criteria.size() - failed, criteria.size(), seconds_since(t0));
    return failed == 0 ? 0 : 1;
}
