#pragma once

// Command orchestration: validates a RunConfig, runs the requested computation and writes
// report.txt, manifest.json and CSV data into the output directory.

#include "kecusp/analysis.hpp"
#include "kecusp/collapse.hpp"
#include "kecusp/config.hpp"
#include "kecusp/models.hpp"
#include "kecusp/solver.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace kecusp {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_diagnostic = 4 };

struct RunOutcome {
    int exit_code = exit_ok;
    std::string message;
    std::filesystem::path out_dir;
    std::vector<std::string> files;
};

/// --out flag, then $KECUSP_OUT_DIR, then the config's output_dir.
inline std::filesystem::path resolve_output_dir(const RunConfig& c, const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("KECUSP_OUT_DIR"); env && *env) return env;
    return c.output_dir;
}

namespace detail {

/// Collects "key = value" lines (grouped in sections) and the fitted constants for the manifest.
class RunReport {
public:
    void section(const std::string& name) { text_ << "\n[" << name << "]\n"; current_ = name; }

    void add(const std::string& key, double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        text_ << key << " = " << s.str() << '\n';
        json_[current_][key] = v;
    }
    void add(const std::string& key, long long v) {
        text_ << key << " = " << v << '\n';
        json_[current_][key] = v;
    }
    void add(const std::string& key, int v) { add(key, static_cast<long long>(v)); }
    void add(const std::string& key, bool v) {
        text_ << key << " = " << (v ? "true" : "false") << '\n';
        json_[current_][key] = v;
    }
    void add(const std::string& key, const std::string& v) {
        text_ << key << " = " << v << '\n';
        json_[current_][key] = v;
    }
    void add(const std::string& key, const char* v) { add(key, std::string(v)); }
    void add(const std::string& key, const std::vector<double>& v) {
        std::ostringstream s;
        s.precision(17);
        for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
        text_ << key << " = [" << s.str() << "]\n";
        json_[current_][key] = v;
    }

    std::string text() const { return text_.str(); }
    const nlohmann::json& json() const { return json_; }

private:
    std::ostringstream text_;
    nlohmann::json json_ = nlohmann::json::object();
    std::string current_ = "run";
};

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw ConfigError("output_dir", "cannot create '" + dir_.string() + "'");
    }

    template <typename Writer>
    void write(const std::string& name, Writer&& w) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw ConfigError("output_dir", "cannot write '" + (dir_ / name).string() + "'");
        w(os);
        files_.push_back(name);
    }

    const std::filesystem::path& path() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

struct SolvedProblem {
    ReducedDomain domain;
    DensityField density;
    SolveResult result;
};

inline SolvedProblem solve_problem(const RunConfig& c, const DomainSpec& ds, double outer_extra = 0.0) {
    SolvedProblem p;
    p.domain = ds.build();
    p.density = build_density(p.domain, c.divisor, c.density.s, c.density.kind, c.density.log_f);
    auto [in, out] = boundary_traces(c.boundary, p.domain, c.density);
    for (double& v : out) v += outer_extra;
    p.result = solve_reduced(p.domain, p.density, in, out, c.solver);
    return p;
}

inline void report_solve(RunReport& rep, const SolveReport& s) {
    rep.add("converged", s.converged);
    rep.add("positivity_maintained", s.positivity_maintained);
    rep.add("iterations", s.iterations.empty() ? 0 : s.iterations.front());
    rep.add("final_residual", s.final_residual);
    if (!s.residual_history.empty()) rep.add("residual_history", s.residual_history.front());
    if (s.attempts > 1) rep.add("seed_attempts", s.attempts);
    if (!s.message.empty()) rep.add("message", s.message);
}

/// Deep-end slope of phi against log(-t) over the deepest tenth of the grid.
inline double log_slope(const PotentialField& f) {
    const auto& d = f.domain;
    const int n = std::max(10, d.n_t / 10);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 1; i <= n; ++i) {
        const double x = std::log(-d.t(i)), y = f.phi[d.index(i, 0)];
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline bool exact_available(const RunConfig& c, const ReducedDomain& d) {
    if (c.boundary.kind != BoundaryKind::model_trace || c.boundary.outer_shift != 0.0 || c.density.s != 0.0) return false;
    if (c.divisor.has_e() || c.divisor.has_f()) return false;
    return d.reduction == Reduction::calabi_cone_n2 ? c.density.kind == DensityKind::cone_pole
                                                     : c.density.kind == DensityKind::smooth_unit;
}

inline double max_error_vs_exact(const PotentialField& f) {
    const auto& d = f.domain;
    double e = 0.0;
    for (int i = 0; i < d.n_t; ++i) {
        const double ex = d.reduction == Reduction::calabi_cone_n2 ? exact::cone(d.t(i), d.k) : exact::cusp(d.t(i));
        for (int j = 0; j < d.n_theta; ++j) e = std::max(e, std::abs(f.phi[d.index(i, j)] - ex));
    }
    return e;
}

inline int command_solve(const RunConfig& c, OutputDir& out, RunReport& rep) {
    const SolvedProblem p = solve_problem(c, c.domain);
    const PotentialField& f = p.result.field;
    out.write("phi.csv", [&](std::ostream& os) { write_potential_csv(os, f); });
    rep.section("solve");
    report_solve(rep, p.result.report);
    if (exact_available(c, p.domain)) rep.add("max_error_vs_exact", max_error_vs_exact(f));
    if (!p.result.report.converged) return exit_solver;

    rep.section("barrier");
    const PotentialField bar = barrier_initializer(p.domain, c.divisor);
    double C = -INFINITY;
    for (std::size_t k = 0; k < f.phi.size(); ++k) C = std::max(C, bar.phi[k] - f.phi[k]);
    rep.add("barrier_exponent", -2.0 * p.domain.complex_dim());
    rep.add("barrier_constant", C);
    rep.add("deep_log_slope", log_slope(f));

    rep.section("sandwich");
    const SandwichReport s = sandwich_check(f, c.analysis.A);
    rep.add("A", s.A);
    rep.add("A_min", s.A_min);
    rep.add("supersolution_ok", s.supersolution_ok);
    rep.add("upper_ok", s.upper_ok);
    rep.add("upper_margin", s.upper_margin);
    rep.add("lower_ok", s.lower_ok);
    rep.add("lower_margin", s.lower_margin);
    rep.add("lower_slope_b", s.b);
    rep.add("outer_rho_a", s.a);
    if (s.supersolution_ok && !s.upper_ok) return exit_diagnostic;
    return exit_ok;
}

inline int command_continuation(const RunConfig& c, OutputDir& out, RunReport& rep) {
    ContinuationProblem prob;
    prob.domain = c.domain.build();
    prob.divisor = c.divisor;
    prob.density = c.density.kind;
    prob.custom_log_f = c.density.log_f;
    std::tie(prob.inner_psi, prob.outer_psi) = boundary_traces(c.boundary, prob.domain, c.density);
    const ContinuationResult r = continuation_solve(prob, c.schedule);
    const SolveReport& s = r.report;
    out.write("continuation.csv", [&](std::ostream& os) {
        os.precision(17);
        os << "s,iterations,final_residual,barrier_constant,lipschitz_quotient\n";
        for (std::size_t q = 0; q < s.s_values.size(); ++q) {
            os << s.s_values[q] << ',' << s.iterations[q] << ',' << s.residual_history[q].back() << ',';
            if (q < s.barrier_constants.size()) os << s.barrier_constants[q];
            os << ',';
            if (q > 0 && q - 1 < s.lipschitz_quotients.size()) os << s.lipschitz_quotients[q - 1];
            os << '\n';
        }
    });
    if (!r.fields.empty()) out.write("phi.csv", [&](std::ostream& os) { write_potential_csv(os, r.fields.back()); });
    rep.section("continuation");
    rep.add("converged", s.converged);
    rep.add("positivity_maintained", s.positivity_maintained);
    rep.add("s_values", s.s_values);
    rep.add("iterations", std::vector<double>(s.iterations.begin(), s.iterations.end()));
    rep.add("final_residual", s.final_residual);
    rep.add("lipschitz_quotients", s.lipschitz_quotients);
    rep.add("lipschitz_constant", s.lipschitz_constant);
    if (!s.lipschitz_quotients.empty()) {
        const auto [lo, hi] = std::minmax_element(s.lipschitz_quotients.begin(), s.lipschitz_quotients.end());
        rep.add("lipschitz_spread", *lo > 0 ? *hi / *lo : INFINITY);
    }
    rep.add("barrier_constants", s.barrier_constants);
    rep.add("barrier_constant", s.barrier_constant);
    if (!s.message.empty()) rep.add("message", s.message);
    return s.converged ? exit_ok : exit_solver;
}

inline int command_verify_model(const RunConfig& c, OutputDir& out, RunReport& rep) {
    const auto& entries = c.models.entries;
    std::vector<std::vector<ChartPoint>> points(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        points[i] = entries[i].points.empty() ? default_model_points(entries[i].model.kind) : entries[i].points;
    std::vector<EinsteinReport> reports(entries.size());
    auto work = [&](std::size_t i) { reports[i] = einstein_check(entries[i].model, points[i], c.models.fd_step); };
    if (c.threads > 1) {
        std::vector<std::future<void>> jobs;
        for (std::size_t i = 0; i < entries.size(); ++i) jobs.push_back(std::async(std::launch::async, work, i));
        for (auto& j : jobs) j.get();
    } else {
        for (std::size_t i = 0; i < entries.size(); ++i) work(i);
    }
    out.write("models.csv", [&](std::ostream& os) {
        std::ostringstream all;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            std::ostringstream one;
            write_model_csv(one, entries[i].model, points[i], reports[i]);
            std::string s = one.str();
            if (i > 0) s = s.substr(s.find('\n') + 1);
            all << s;
        }
        os << all.str();
    });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& m = entries[i].model;
        rep.section(std::string(to_string(m.kind)) + "." + std::string(to_string(m.normalization)));
        rep.add("lambda_hat", reports[i].lambda_hat);
        rep.add("max_residual", reports[i].max_residual);
        rep.add("fd_step", reports[i].fd_step);
        rep.add("points", static_cast<int>(points[i].size()));
    }
    return exit_ok;
}

inline int command_rigidity(const RunConfig& c, OutputDir& out, RunReport& rep) {
    const DomainSpec second = c.analysis.second_domain.value_or(c.domain);
    SolvedProblem a, b;
    if (c.threads > 1) {
        auto fa = std::async(std::launch::async, [&] { return solve_problem(c, c.domain); });
        b = solve_problem(c, second, c.analysis.rigidity_shift);
        a = fa.get();
    } else {
        a = solve_problem(c, c.domain);
        b = solve_problem(c, second, c.analysis.rigidity_shift);
    }
    rep.section("solve.phi");
    report_solve(rep, a.result.report);
    rep.section("solve.phi_prime");
    report_solve(rep, b.result.report);
    if (!a.result.report.converged || !b.result.report.converged) return exit_solver;

    const RadialProfile prof = rigidity_profile(a.result.field, b.result.field);
    out.write("rigidity.csv", [&](std::ostream& os) { write_profile_csv(os, prof); });
    const auto ladder = rigidity_ladder(prof, c.analysis.R0);
    rep.section("rigidity");
    std::vector<double> sups, products;
    double C = 0.0;
    for (const auto& r : ladder) {
        sups.push_back(r.sup_abs);
        products.push_back(r.product);
        C = std::max(C, r.product);
    }
    rep.add("R0", c.analysis.R0);
    rep.add("sup_abs_log_ratio", sups);
    rep.add("R0_times_sup", products);
    rep.add("fitted_constant", C);
    rep.add("R_max", prof.R.front());
    const double dec = deepest_decile_sup(prof);
    rep.add("deepest_decile_sup_abs_log_ratio", dec);
    rep.add("deepest_decile_det_ratio_min", std::exp(-dec));
    rep.add("deepest_decile_det_ratio_max", std::exp(dec));

    const TraceReport tr = trace_comparison(a.result.field, b.result.field);
    rep.section("trace");
    rep.add("sup_trace", tr.sup);
    rep.add("t_at_sup", tr.t_at_sup);
    rep.add("at_outer_end", tr.at_outer_end);
    rep.add("at_inner_end", tr.at_inner_end);
    const TraceReport rv = trace_comparison(b.result.field, a.result.field);
    rep.section("trace.reverse");
    rep.add("sup_trace", rv.sup);
    rep.add("t_at_sup", rv.t_at_sup);
    rep.add("at_outer_end", rv.at_outer_end);
    rep.add("at_inner_end", rv.at_inner_end);
    return exit_ok;
}

inline int command_volume(const RunConfig& c, OutputDir& out, RunReport& rep) {
    const SolvedProblem p = solve_problem(c, c.domain);
    rep.section("solve");
    report_solve(rep, p.result.report);
    if (!p.result.report.converged) return exit_solver;
    std::vector<VolumeEstimate> est;
    for (double tc : c.analysis.t_cuts) est.push_back(volume_integral(p.result.field, tc, &p.density));
    out.write("volume.csv", [&](std::ostream& os) {
        os.precision(17);
        os << "t_cut,grid_value,tail,volume,error_bar\n";
        for (std::size_t i = 0; i < est.size(); ++i)
            os << c.analysis.t_cuts[i] << ',' << est[i].grid_value << ',' << est[i].tail << ',' << est[i].total << ','
               << est[i].error_bar << '\n';
    });
    rep.section("volume");
    std::vector<double> tot, err;
    for (const auto& e : est) tot.push_back(e.total), err.push_back(e.error_bar);
    rep.add("t_cuts", c.analysis.t_cuts);
    rep.add("volume", tot);
    rep.add("error_bar", err);
    rep.add("tail_exponent", est.front().tail_exponent);
    return exit_ok;
}

inline int command_collapse(const RunConfig& c, OutputDir& out, RunReport& rep) {
    const auto& L = c.lattice;
    const QuadraticLattice lat = make_quadratic_lattice(L.d, L.p1, L.q1, L.p2, L.q2);
    const CollapseProfile prof = collapse_profile(lat, L.c_hat);
    out.write("collapse.csv", [&](std::ostream& os) { write_collapse_csv(os, prof); });
    rep.section("collapse");
    rep.add("scaling", prof.scaling);
    rep.add("c_hat", prof.c_hat);
    rep.add("covering_radius", prof.radii);
    rep.add("monotone", prof.monotone);
    rep.add("halved", prof.halved);
    const Mat2 g = cylinder_limit_gram();
    rep.section("cylinder_limit");
    rep.add("gram", std::vector<double>{g[0][0], g[0][1], g[1][0], g[1][1]});
    rep.add("determinant", g[0][0] * g[1][1] - g[0][1] * g[1][0]);
    return prof.monotone && prof.halved ? exit_ok : exit_diagnostic;
}

inline int command_lelong(const RunConfig& c, OutputDir& out, RunReport& rep) {
    const SolvedProblem p = solve_problem(c, c.domain);
    out.write("phi.csv", [&](std::ostream& os) { write_potential_csv(os, p.result.field); });
    rep.section("solve");
    report_solve(rep, p.result.report);
    if (!p.result.report.converged) return exit_solver;
    rep.section("lelong");
    rep.add("window", c.analysis.window);
    rep.add("t_window_deep", p.domain.t(1));
    rep.add("t_window_shallow", p.domain.t(c.analysis.window));
    rep.add("slope", lelong_estimate(p.result.field, c.analysis.window, c.divisor.pole_order));
    return exit_ok;
}

inline int command_distance(const RunConfig& c, OutputDir& out, RunReport& rep) {
    const SolvedProblem p = solve_problem(c, c.domain);
    rep.section("solve");
    report_solve(rep, p.result.report);
    if (!p.result.report.converged) return exit_solver;
    RadialProfile prof = distance_profile(p.result.field);
    const auto c2 = detail::radial_second_derivative(p.result.field);
    prof.quantity = "length_element";
    for (int i = 0; i < p.domain.n_t; ++i) prof.value[i] = std::sqrt(c2[p.domain.index(i, 0)] / 2.0);
    out.write("distance.csv", [&](std::ostream& os) { write_profile_csv(os, prof); });
    rep.section("distance");
    rep.add("R_at_t_min", prof.R.front());
    rep.add("log_minus_t_min", std::log(-p.domain.t_min));
    return exit_ok;
}

}  // namespace detail

/// Runs one command. Never throws for config, solver or diagnostic failures: they map to exit
/// codes 2, 3 and 4 and whatever artifacts were produced stay on disk.
inline RunOutcome run(const RunConfig& config, const std::optional<std::string>& out_flag = std::nullopt) {
    RunOutcome res;
    res.out_dir = resolve_output_dir(config, out_flag);
    detail::RunReport rep;
    std::optional<detail::OutputDir> out;
    auto finish = [&](int code, std::string msg) {
        res.exit_code = code;
        res.message = std::move(msg);
        if (!out) return;
        try {
            rep.section("status");
            rep.add("exit_code", code);
            if (!res.message.empty()) rep.add("message", res.message);
            const std::string text = "command = " + std::string(to_string(config.command)) + "\nseed = " +
                                     std::to_string(config.seed) + "\n" + rep.text();
            out->write("report.txt", [&](std::ostream& os) { os << text; });
            nlohmann::json m;
            m["tool"] = "kecusp";
            m["version"] = kVersion;
            m["json_library"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH);
            m["command"] = std::string(to_string(config.command));
            m["seed"] = config.seed;
            m["exit_code"] = code;
            m["config"] = to_json(config);
            m["results"] = rep.json();
            std::vector<std::string> files = out->files();
            files.push_back("manifest.json");
            m["files"] = files;
            out->write("manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
        } catch (const std::exception& e) {
            if (res.exit_code == exit_ok) res.exit_code = exit_config;
            res.message += std::string(" (artifact write failed: ") + e.what() + ")";
        }
        res.files = out->files();
    };

    try {
        validate(config);
        out.emplace(res.out_dir);
    } catch (const ConfigError& e) {
        finish(exit_config, e.what());
        return res;
    }

    try {
        int code = exit_ok;
        switch (config.command) {
            case Command::solve: code = detail::command_solve(config, *out, rep); break;
            case Command::continuation: code = detail::command_continuation(config, *out, rep); break;
            case Command::verify_model: code = detail::command_verify_model(config, *out, rep); break;
            case Command::rigidity: code = detail::command_rigidity(config, *out, rep); break;
            case Command::volume: code = detail::command_volume(config, *out, rep); break;
            case Command::collapse: code = detail::command_collapse(config, *out, rep); break;
            case Command::lelong: code = detail::command_lelong(config, *out, rep); break;
            case Command::distance: code = detail::command_distance(config, *out, rep); break;
        }
        const char* msg = code == exit_solver ? "solver did not converge"
                          : code == exit_diagnostic ? "diagnostic check failed"
                                                    : "";
        finish(code, msg);
    } catch (const ConfigError& e) {
        finish(exit_config, e.what());
    } catch (const InputError& e) {
        finish(exit_config, e.what());
    } catch (const SolverError& e) {
        finish(exit_solver, e.what());
    } catch (const AnalysisError& e) {
        finish(exit_diagnostic, e.what());
    }
    return res;
}

}  // namespace kecusp
