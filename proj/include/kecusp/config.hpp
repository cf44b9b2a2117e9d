#pragma once

// Run configuration: JSON syntax, fail-fast validation with field paths, and presets.

#include "kecusp/collapse.hpp"
#include "kecusp/error.hpp"
#include "kecusp/geom.hpp"
#include "kecusp/models.hpp"
#include "kecusp/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kecusp {

enum class Command { solve, continuation, verify_model, rigidity, volume, collapse, lelong, distance };

inline std::string_view to_string(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::continuation: return "continuation";
        case Command::verify_model: return "verify-model";
        case Command::rigidity: return "rigidity";
        case Command::volume: return "volume";
        case Command::collapse: return "collapse";
        case Command::lelong: return "lelong";
        case Command::distance: return "distance";
    }
    return "?";
}

inline std::optional<Command> parse_command(std::string_view s) {
    for (Command c : {Command::solve, Command::continuation, Command::verify_model, Command::rigidity,
                      Command::volume, Command::collapse, Command::lelong, Command::distance})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

struct DomainSpec {
    Reduction reduction = Reduction::radial_n1;
    double t_min = -8.0;
    double t_max = -1.0;
    int n_t = 1025;
    std::optional<int> n_theta;
    std::optional<int> k;

    ReducedDomain build() const { return build_domain(reduction, t_min, t_max, n_t, n_theta, k); }
    friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct DensitySpec {
    DensityKind kind = DensityKind::smooth_unit;
    double s = 0.0;
    std::vector<double> log_f;  // custom samples
    friend bool operator==(const DensitySpec&, const DensitySpec&) = default;
};

/// constant: inner/outer values on every ray; model_trace: the exact solution of the reduction
/// (cusp for n = 1, cone for calabi_cone) evaluated at both ends; custom: per-ray samples.
enum class BoundaryKind { constant, model_trace, custom };

inline std::string_view to_string(BoundaryKind b) {
    switch (b) {
        case BoundaryKind::constant: return "constant";
        case BoundaryKind::model_trace: return "model_trace";
        case BoundaryKind::custom: return "custom";
    }
    return "?";
}

struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::model_trace;
    double inner = 0.0;
    double outer = 0.0;
    std::vector<double> inner_samples;
    std::vector<double> outer_samples;
    double outer_shift = 0.0;  // added to the outer trace after construction
    friend bool operator==(const BoundarySpec&, const BoundarySpec&) = default;
};

struct AnalysisSpec {
    std::vector<double> t_cuts;
    int window = 10;
    std::vector<double> R0 = {1.0, 2.0, 4.0};
    double A = 10.0;
    double rigidity_shift = 1.0;              // outer boundary offset of the second field
    std::optional<DomainSpec> second_domain;  // grid of the second field (defaults to domain)
    friend bool operator==(const AnalysisSpec&, const AnalysisSpec&) = default;
};

struct ModelEntry {
    ModelMetric model;
    std::vector<ChartPoint> points;  // empty: built-in sample points
    friend bool operator==(const ModelEntry&, const ModelEntry&) = default;
};

struct ModelSpec {
    std::vector<ModelEntry> entries;
    double fd_step = 1e-3;
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct LatticeSpec {
    int d = 2;
    Rational p1{1, 1}, q1{0, 1}, p2{0, 1}, q2{1, 1};
    std::vector<double> c_hat = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

struct RunConfig {
    Command command = Command::solve;
    DomainSpec domain;
    DivisorData divisor;
    DensitySpec density;
    BoundarySpec boundary;
    ContinuationSchedule schedule = ContinuationSchedule::halving(10);
    SolveOptions solver;
    AnalysisSpec analysis;
    ModelSpec models;
    LatticeSpec lattice;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
};

inline bool operator==(const ContinuationSchedule& a, const ContinuationSchedule& b) {
    return a.s_values == b.s_values && a.tol == b.tol && a.max_iter == b.max_iter;
}
inline bool operator==(const SolveOptions& a, const SolveOptions& b) {
    return a.tol == b.tol && a.max_iter == b.max_iter;
}
inline bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.command == b.command && a.domain == b.domain && a.divisor == b.divisor && a.density == b.density &&
           a.boundary == b.boundary && a.schedule == b.schedule && a.solver == b.solver &&
           a.analysis == b.analysis && a.models == b.models && a.lattice == b.lattice &&
           a.output_dir == b.output_dir && a.seed == b.seed && a.threads == b.threads;
}

/// Built-in chart points at which each model is checked.
inline std::vector<ChartPoint> default_model_points(ModelKind kind) {
    using C = std::complex<double>;
    switch (kind) {
        case ModelKind::hilbert_cusp: return {{C(0, 1), C(0, 1)}, {C(0.3, 1.2), C(-0.5, 0.7)}, {C(1.0, 0.5), C(0, 2)}};
        case ModelKind::ball_cusp: return {{C(0, 1), C(0, 0)}, {C(0.2, 1.5), C(0.3, 0.1)}, {C(-0.4, 2.0), C(0.6, -0.5)}};
        case ModelKind::cusp_disk: return {{C(std::exp(-1.0), 0), C()}, {C(0, 0.5), C()}, {C(0.2, 0.3), C()}};
        case ModelKind::cone_elliptic: return {{C(0, 0), C(0.5, 0)}, {C(0.1, 0.1), C(0, 0.3)}, {C(-0.2, 0), C(0.4, 0.2)}};
    }
    return {};
}

/// Boundary traces (inner, outer) on the n_theta rays of `d`.
inline std::pair<std::vector<double>, std::vector<double>> boundary_traces(const BoundarySpec& b,
                                                                           const ReducedDomain& d,
                                                                           const DensitySpec& den) {
    std::vector<double> in(d.n_theta), out(d.n_theta);
    switch (b.kind) {
        case BoundaryKind::constant:
            std::fill(in.begin(), in.end(), b.inner);
            std::fill(out.begin(), out.end(), b.outer);
            break;
        case BoundaryKind::model_trace:
            if (d.reduction == Reduction::calabi_cone_n2) {
                const double c = den.kind == DensityKind::cone_pole ? cone_normalization(d.k) : 1.0;
                std::fill(in.begin(), in.end(), exact::cone(d.t_min, d.k, c));
                std::fill(out.begin(), out.end(), exact::cone(d.t_max, d.k, c));
            } else {
                std::fill(in.begin(), in.end(), exact::cusp(d.t_min));
                std::fill(out.begin(), out.end(), exact::cusp(d.t_max));
            }
            break;
        case BoundaryKind::custom:
            in = b.inner_samples;
            out = b.outer_samples;
            break;
    }
    for (double& v : out) v += b.outer_shift;
    return {in, out};
}

// ---------------------------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto a : keys) ok = ok || a == k;
        if (!ok) throw ConfigError(join(path, k), "unknown field");
    }
}

inline double get_number(const json& j, const std::string& path, std::string_view key, double dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(std::string(key));
    if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(join(path, key), "must be finite");
    return x;
}

inline long long get_integer(const json& j, const std::string& path, std::string_view key, long long dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(std::string(key));
    if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
    return v.get<long long>();
}

inline std::optional<int> get_opt_int(const json& j, const std::string& path, std::string_view key) {
    if (!j.contains(key) || j.at(std::string(key)).is_null()) return std::nullopt;
    return static_cast<int>(get_integer(j, path, key, 0));
}

inline std::string get_string(const json& j, const std::string& path, std::string_view key, std::string dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(std::string(key));
    if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> get_numbers(const json& j, const std::string& path, std::string_view key,
                                       std::vector<double> dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(std::string(key));
    if (!v.is_array()) throw ConfigError(join(path, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

inline Rational get_rational(const json& j, const std::string& path, std::string_view key, Rational dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(std::string(key));
    if (v.is_number_integer()) return Rational{v.get<long long>(), 1};
    if (v.is_string())
        if (auto r = parse_rational(v.get<std::string>())) return *r;
    throw ConfigError(join(path, key), "expected an integer or a rational \"p/q\"");
}

inline json domain_to_json(const DomainSpec& d) {
    json j = {{"reduction", std::string(to_string(d.reduction))}, {"t_min", d.t_min}, {"t_max", d.t_max}, {"n_t", d.n_t}};
    if (d.n_theta) j["n_theta"] = *d.n_theta;
    if (d.k) j["k"] = *d.k;
    return j;
}

inline DomainSpec domain_from_json(const json& j, const std::string& path) {
    allow_keys(j, path, {"reduction", "t_min", "t_max", "n_t", "n_theta", "k"});
    DomainSpec d;
    const std::string red = get_string(j, path, "reduction", "radial_n1");
    const auto r = parse_reduction(red);
    if (!r) throw ConfigError(join(path, "reduction"), "unknown reduction '" + red + "'");
    d.reduction = *r;
    d.t_min = get_number(j, path, "t_min", d.t_min);
    d.t_max = get_number(j, path, "t_max", d.t_max);
    d.n_t = static_cast<int>(get_integer(j, path, "n_t", d.n_t));
    d.n_theta = get_opt_int(j, path, "n_theta");
    d.k = get_opt_int(j, path, "k");
    return d;
}

inline json point_to_json(const ChartPoint& p) {
    return json::array({p[0].real(), p[0].imag(), p[1].real(), p[1].imag()});
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    json j;
    j["command"] = std::string(to_string(c.command));
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["domain"] = detail::domain_to_json(c.domain);
    j["divisor"] = {{"a", c.divisor.a_coeffs}, {"b", c.divisor.b_coeffs}, {"pole_order", c.divisor.pole_order}};
    j["density"] = {{"kind", std::string(to_string(c.density.kind))}, {"s", c.density.s}, {"log_f", c.density.log_f}};
    j["boundary"] = {{"kind", std::string(to_string(c.boundary.kind))},
                     {"inner", c.boundary.inner},
                     {"outer", c.boundary.outer},
                     {"inner_samples", c.boundary.inner_samples},
                     {"outer_samples", c.boundary.outer_samples},
                     {"outer_shift", c.boundary.outer_shift}};
    j["schedule"] = {{"s_values", c.schedule.s_values}, {"tol", c.schedule.tol}, {"max_iter", c.schedule.max_iter}};
    j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}};
    json a = {{"t_cuts", c.analysis.t_cuts},
              {"window", c.analysis.window},
              {"R0", c.analysis.R0},
              {"A", c.analysis.A},
              {"rigidity_shift", c.analysis.rigidity_shift}};
    if (c.analysis.second_domain) a["second_domain"] = detail::domain_to_json(*c.analysis.second_domain);
    j["analysis"] = a;
    json entries = json::array();
    for (const auto& e : c.models.entries) {
        json pts = json::array();
        for (const auto& p : e.points) pts.push_back(detail::point_to_json(p));
        entries.push_back({{"kind", std::string(to_string(e.model.kind))},
                           {"normalization", std::string(to_string(e.model.normalization))},
                           {"scale", e.model.scale},
                           {"k", e.model.k},
                           {"points", pts}});
    }
    j["models"] = {{"entries", entries}, {"fd_step", c.models.fd_step}};
    j["lattice"] = {{"d", c.lattice.d},
                    {"p1", to_string(c.lattice.p1)},
                    {"q1", to_string(c.lattice.q1)},
                    {"p2", to_string(c.lattice.p2)},
                    {"q2", to_string(c.lattice.q2)},
                    {"c_hat", c.lattice.c_hat}};
    return j;
}

/// Structural parse; semantic checks live in validate().
inline RunConfig parse_config(const nlohmann::json& j) {
    using namespace detail;
    allow_keys(j, "", {"command", "output_dir", "seed", "threads", "domain", "divisor", "density", "boundary",
                       "schedule", "solver", "analysis", "models", "lattice"});
    RunConfig c;
    const std::string cmd = get_string(j, "", "command", "");
    if (cmd.empty()) throw ConfigError("command", "missing");
    const auto command = parse_command(cmd);
    if (!command) throw ConfigError("command", "unknown command '" + cmd + "'");
    c.command = *command;
    c.output_dir = get_string(j, "", "output_dir", c.output_dir);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ConfigError("seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.threads = static_cast<int>(get_integer(j, "", "threads", c.threads));

    if (j.contains("domain")) c.domain = domain_from_json(j["domain"], "domain");

    if (j.contains("divisor")) {
        const json& v = j["divisor"];
        allow_keys(v, "divisor", {"a", "b", "pole_order"});
        c.divisor.a_coeffs = get_numbers(v, "divisor", "a", {});
        c.divisor.b_coeffs = get_numbers(v, "divisor", "b", {});
        c.divisor.pole_order = static_cast<int>(get_integer(v, "divisor", "pole_order", 1));
    }
    if (j.contains("density")) {
        const json& v = j["density"];
        allow_keys(v, "density", {"kind", "s", "log_f"});
        const std::string kind = get_string(v, "density", "kind", "smooth_unit");
        const auto k = parse_density_kind(kind);
        if (!k) throw ConfigError("density.kind", "unknown density kind '" + kind + "'");
        c.density.kind = *k;
        c.density.s = get_number(v, "density", "s", 0.0);
        c.density.log_f = get_numbers(v, "density", "log_f", {});
    }
    if (j.contains("boundary")) {
        const json& v = j["boundary"];
        allow_keys(v, "boundary", {"kind", "inner", "outer", "inner_samples", "outer_samples", "outer_shift"});
        const std::string kind = get_string(v, "boundary", "kind", "model_trace");
        if (kind == "constant") c.boundary.kind = BoundaryKind::constant;
        else if (kind == "model_trace") c.boundary.kind = BoundaryKind::model_trace;
        else if (kind == "custom") c.boundary.kind = BoundaryKind::custom;
        else throw ConfigError("boundary.kind", "unknown boundary kind '" + kind + "'");
        c.boundary.inner = get_number(v, "boundary", "inner", 0.0);
        c.boundary.outer = get_number(v, "boundary", "outer", 0.0);
        c.boundary.inner_samples = get_numbers(v, "boundary", "inner_samples", {});
        c.boundary.outer_samples = get_numbers(v, "boundary", "outer_samples", {});
        c.boundary.outer_shift = get_number(v, "boundary", "outer_shift", 0.0);
    }
    if (j.contains("schedule")) {
        const json& v = j["schedule"];
        allow_keys(v, "schedule", {"s_values", "tol", "max_iter"});
        c.schedule.s_values = get_numbers(v, "schedule", "s_values", c.schedule.s_values);
        c.schedule.tol = get_number(v, "schedule", "tol", c.schedule.tol);
        c.schedule.max_iter = static_cast<int>(get_integer(v, "schedule", "max_iter", c.schedule.max_iter));
    }
    if (j.contains("solver")) {
        const json& v = j["solver"];
        allow_keys(v, "solver", {"tol", "max_iter"});
        c.solver.tol = get_number(v, "solver", "tol", c.solver.tol);
        c.solver.max_iter = static_cast<int>(get_integer(v, "solver", "max_iter", c.solver.max_iter));
    }
    if (j.contains("analysis")) {
        const json& v = j["analysis"];
        allow_keys(v, "analysis", {"t_cuts", "window", "R0", "A", "rigidity_shift", "second_domain"});
        c.analysis.t_cuts = get_numbers(v, "analysis", "t_cuts", {});
        c.analysis.window = static_cast<int>(get_integer(v, "analysis", "window", c.analysis.window));
        c.analysis.R0 = get_numbers(v, "analysis", "R0", c.analysis.R0);
        c.analysis.A = get_number(v, "analysis", "A", c.analysis.A);
        c.analysis.rigidity_shift = get_number(v, "analysis", "rigidity_shift", c.analysis.rigidity_shift);
        if (v.contains("second_domain") && !v["second_domain"].is_null())
            c.analysis.second_domain = domain_from_json(v["second_domain"], "analysis.second_domain");
    }
    if (j.contains("models")) {
        const json& v = j["models"];
        allow_keys(v, "models", {"entries", "fd_step"});
        c.models.fd_step = get_number(v, "models", "fd_step", c.models.fd_step);
        if (v.contains("entries")) {
            if (!v["entries"].is_array()) throw ConfigError("models.entries", "expected an array");
            for (std::size_t i = 0; i < v["entries"].size(); ++i) {
                const std::string path = "models.entries[" + std::to_string(i) + "]";
                const json& e = v["entries"][i];
                allow_keys(e, path, {"kind", "normalization", "scale", "k", "points"});
                const std::string kind = get_string(e, path, "kind", "");
                const auto mk = parse_model_kind(kind);
                if (!mk) throw ConfigError(join(path, "kind"), "unknown model kind '" + kind + "'");
                const std::string norm = get_string(e, path, "normalization", "standard");
                const auto nk = parse_normalization(norm);
                if (!nk) throw ConfigError(join(path, "normalization"), "unknown normalization '" + norm + "'");
                ModelEntry me;
                me.model.kind = *mk;
                me.model.normalization = *nk;
                me.model.scale = get_number(e, path, "scale", 1.0);
                me.model.k = static_cast<int>(get_integer(e, path, "k", 1));
                if (e.contains("points")) {
                    const json& pts = e["points"];
                    if (!pts.is_array()) throw ConfigError(join(path, "points"), "expected an array");
                    for (std::size_t q = 0; q < pts.size(); ++q) {
                        const std::string pp = join(path, "points") + "[" + std::to_string(q) + "]";
                        if (!pts[q].is_array() || pts[q].size() != 4)
                            throw ConfigError(pp, "expected [x1, y1, x2, y2]");
                        double x[4];
                        for (int r = 0; r < 4; ++r) {
                            if (!pts[q][r].is_number()) throw ConfigError(pp, "expected numbers");
                            x[r] = pts[q][r].get<double>();
                        }
                        me.points.push_back({std::complex<double>(x[0], x[1]), std::complex<double>(x[2], x[3])});
                    }
                }
                c.models.entries.push_back(std::move(me));
            }
        }
    }
    if (j.contains("lattice")) {
        const json& v = j["lattice"];
        allow_keys(v, "lattice", {"d", "p1", "q1", "p2", "q2", "c_hat"});
        c.lattice.d = static_cast<int>(get_integer(v, "lattice", "d", c.lattice.d));
        c.lattice.p1 = get_rational(v, "lattice", "p1", c.lattice.p1);
        c.lattice.q1 = get_rational(v, "lattice", "q1", c.lattice.q1);
        c.lattice.p2 = get_rational(v, "lattice", "p2", c.lattice.p2);
        c.lattice.q2 = get_rational(v, "lattice", "q2", c.lattice.q2);
        c.lattice.c_hat = get_numbers(v, "lattice", "c_hat", c.lattice.c_hat);
    }
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

namespace detail {

template <typename F>
void as_config_error(const std::string& field, F&& f) {
    try {
        f();
    } catch (const InputError& e) {
        throw ConfigError(field, e.what());
    }
}

inline void validate_domain(const DomainSpec& d, const std::string& path) {
    if (!(d.t_min < d.t_max)) throw ConfigError(join(path, "t_min"), "t_min must be < t_max");
    if (d.t_max > 0.0) throw ConfigError(join(path, "t_max"), "t_max must be <= 0");
    if (d.n_t < 5) throw ConfigError(join(path, "n_t"), "n_t must be >= 5");
    if (d.reduction == Reduction::polar2d_n1 && (!d.n_theta || *d.n_theta < 8))
        throw ConfigError(join(path, "n_theta"), "polar2d requires n_theta >= 8");
    if (d.reduction == Reduction::calabi_cone_n2 && (!d.k || *d.k < 1))
        throw ConfigError(join(path, "k"), "calabi_cone requires a positive line bundle degree k");
    as_config_error(path, [&] { d.build(); });
}

}  // namespace detail

/// Fail-fast semantic validation of everything the command will touch.
inline void validate(const RunConfig& c) {
    using detail::as_config_error;
    if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
    if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
    if (!(c.solver.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
    if (c.solver.max_iter < 1) throw ConfigError("solver.max_iter", "must be >= 1");

    if (c.command == Command::collapse) {
        const auto& L = c.lattice;
        as_config_error("lattice", [&] { make_quadratic_lattice(L.d, L.p1, L.q1, L.p2, L.q2); });
        if (L.c_hat.empty()) throw ConfigError("lattice.c_hat", "must not be empty");
        for (std::size_t i = 0; i < L.c_hat.size(); ++i) {
            if (!(L.c_hat[i] >= 0.0)) throw ConfigError("lattice.c_hat", "entries must be >= 0");
            if (i > 0 && !(L.c_hat[i] > L.c_hat[i - 1])) throw ConfigError("lattice.c_hat", "must be increasing");
        }
        return;
    }
    if (c.command == Command::verify_model) {
        if (c.models.entries.empty()) throw ConfigError("models.entries", "must not be empty");
        if (!(c.models.fd_step > 0.0)) throw ConfigError("models.fd_step", "must be positive");
        for (std::size_t i = 0; i < c.models.entries.size(); ++i) {
            const auto& e = c.models.entries[i];
            const std::string path = "models.entries[" + std::to_string(i) + "]";
            as_config_error(path, [&] { make_model(e.model.kind, e.model.normalization, e.model.scale, e.model.k); });
            if (!e.points.empty() && e.points.size() < 3) throw ConfigError(path + ".points", "need at least 3 points");
        }
        return;
    }

    detail::validate_domain(c.domain, "domain");
    const ReducedDomain d = c.domain.build();
    as_config_error("divisor", [&] { validate(c.divisor); });
    if (!(c.density.s >= 0.0)) throw ConfigError("density.s", "must be >= 0");
    if (c.density.kind == DensityKind::cone_pole && d.reduction != Reduction::calabi_cone_n2)
        throw ConfigError("density.kind", "cone_pole requires a calabi_cone_n2 domain");
    if (c.density.kind == DensityKind::custom && c.density.log_f.size() != d.size())
        throw ConfigError("density.log_f", "custom samples must match the grid size");
    if (d.reduction == Reduction::calabi_cone_n2 && c.density.s != 0.0)
        throw ConfigError("density.s", "the s-regularization is supported only for n = 1 reductions");
    if (c.boundary.kind == BoundaryKind::custom) {
        if (static_cast<int>(c.boundary.inner_samples.size()) != d.n_theta)
            throw ConfigError("boundary.inner_samples", "need one sample per ray");
        if (static_cast<int>(c.boundary.outer_samples.size()) != d.n_theta)
            throw ConfigError("boundary.outer_samples", "need one sample per ray");
    }
    if (c.boundary.kind == BoundaryKind::model_trace && !(d.t_max < 0.0))
        throw ConfigError("boundary.kind", "model_trace needs t_max < 0");
    as_config_error("density", [&] { build_density(d, c.divisor, c.density.s, c.density.kind, c.density.log_f); });

    switch (c.command) {
        case Command::continuation:
            as_config_error("schedule", [&] { validate(c.schedule); });
            if (d.reduction == Reduction::calabi_cone_n2)
                throw ConfigError("domain.reduction", "continuation supports n = 1 reductions only");
            if (d.n_t <= 20) throw ConfigError("domain.n_t", "continuation needs n_t > 20");
            break;
        case Command::volume:
            if (c.analysis.t_cuts.empty()) throw ConfigError("analysis.t_cuts", "must not be empty");
            for (double t : c.analysis.t_cuts)
                if (!(t > d.t_min && t <= d.t_max)) throw ConfigError("analysis.t_cuts", "entries must lie in (t_min, t_max]");
            break;
        case Command::lelong:
            if (c.analysis.window < 10) throw ConfigError("analysis.window", "must be >= 10");
            if (c.analysis.window > d.n_t - 2) throw ConfigError("analysis.window", "larger than the grid interior");
            break;
        case Command::rigidity:
            if (c.analysis.second_domain) detail::validate_domain(*c.analysis.second_domain, "analysis.second_domain");
            if (c.analysis.R0.empty()) throw ConfigError("analysis.R0", "must not be empty");
            break;
        default: break;
    }
}

/// Canonical configurations used by the acceptance suite.
inline RunConfig preset(std::string_view name) {
    RunConfig c;
    if (name == "cusp-exact") {
        c.command = Command::solve;
        c.domain = {Reduction::radial_n1, -8.0, -1.0, 1025, std::nullopt, std::nullopt};
        return c;
    }
    if (name == "cone-exact") {
        c.command = Command::solve;
        c.domain = {Reduction::calabi_cone_n2, -100.0, -2.0, 4097, std::nullopt, 1};
        c.density.kind = DensityKind::cone_pole;
        return c;
    }
    if (name == "rigidity-pair") {
        c.command = Command::rigidity;
        c.domain = {Reduction::radial_n1, -std::exp(4.0), -1.0, 8193, std::nullopt, std::nullopt};
        c.analysis.rigidity_shift = 1.0;
        c.analysis.R0 = {1.0, 2.0, 4.0};
        return c;
    }
    if (name == "continuation-ladder") {
        c.command = Command::continuation;
        c.domain = {Reduction::radial_n1, -8.0, -1.0, 1025, std::nullopt, std::nullopt};
        c.schedule = ContinuationSchedule::halving(10);
        return c;
    }
    if (name == "hilbert-collapse") {
        c.command = Command::collapse;
        c.lattice = LatticeSpec{};
        return c;
    }
    if (name == "model-atlas") {
        c.command = Command::verify_model;
        c.models.fd_step = 1e-3;
        c.models.entries = {{ModelMetric{ModelKind::hilbert_cusp, Normalization::standard, 1.0, 1}, {}},
                            {ModelMetric{ModelKind::ball_cusp, Normalization::standard, 1.0, 1}, {}},
                            {ModelMetric{ModelKind::cusp_disk, Normalization::standard, 1.0, 1}, {}},
                            {ModelMetric{ModelKind::cone_elliptic, Normalization::solver, 1.0, 1}, {}}};
        return c;
    }
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
}

inline std::vector<std::string> preset_names() {
    return {"cusp-exact", "cone-exact", "rigidity-pair", "continuation-ladder", "hilbert-collapse", "model-atlas"};
}

}  // namespace kecusp
