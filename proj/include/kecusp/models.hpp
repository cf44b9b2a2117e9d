#pragma once

// Closed-form model potentials of log canonical surface (and curve) singularities and
// finite-difference verification of their Einstein constants.
//
// Kaehler metric g_{i jbar} = d^2 rho / dz_i dzbar_j; Ric_{i jbar} = -d^2 log det g / dz_i dzbar_j.
// The Einstein constant lambda in Ric = -lambda g is always estimated from samples.

#include "kecusp/error.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kecusp {

enum class ModelKind { cusp_disk, ball_cusp, hilbert_cusp, cone_elliptic };

/// standard: the potential as written for the uniformizing model;
/// solver: the potential normalized to Ric = -omega as produced by the reduced solvers.
enum class Normalization { standard, solver };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::cusp_disk: return "cusp_disk";
        case ModelKind::ball_cusp: return "ball_cusp";
        case ModelKind::hilbert_cusp: return "hilbert_cusp";
        case ModelKind::cone_elliptic: return "cone_elliptic";
    }
    return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
    if (s == "cusp_disk") return ModelKind::cusp_disk;
    if (s == "ball_cusp") return ModelKind::ball_cusp;
    if (s == "hilbert_cusp") return ModelKind::hilbert_cusp;
    if (s == "cone_elliptic") return ModelKind::cone_elliptic;
    return std::nullopt;
}

inline std::string_view to_string(Normalization n) {
    return n == Normalization::standard ? "standard" : "solver";
}

inline std::optional<Normalization> parse_normalization(std::string_view s) {
    if (s == "standard") return Normalization::standard;
    if (s == "solver") return Normalization::solver;
    return std::nullopt;
}

struct ModelMetric {
    ModelKind kind = ModelKind::hilbert_cusp;
    Normalization normalization = Normalization::standard;
    double scale = 1.0;  // rho is multiplied by this factor
    int k = 1;           // line bundle degree for cone_elliptic

    int dim() const { return kind == ModelKind::cusp_disk ? 1 : 2; }

    friend bool operator==(const ModelMetric&, const ModelMetric&) = default;
};

inline ModelMetric make_model(ModelKind kind, Normalization norm = Normalization::standard,
                              double scale = 1.0, int k = 1) {
    if (norm == Normalization::solver && kind != ModelKind::cusp_disk &&
        kind != ModelKind::cone_elliptic)
        throw InputError("model: solver normalization exists only for cusp_disk and cone_elliptic");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("model: scale must be positive");
    if (k < 1) throw InputError("model: k must be a positive integer");
    return ModelMetric{kind, norm, scale, k};
}

/// Up to two complex coordinates; only the first dim() entries are read.
using ChartPoint = std::array<std::complex<double>, 2>;

namespace detail {

using Quad = boost::multiprecision::cpp_bin_float_quad;

/// Potential in real coordinates (x1, y1, x2, y2).
template <typename Real>
Real potential_real(const ModelMetric& m, const std::array<Real, 4>& x) {
    using std::log;
    const Real two(2), three(3), nine(9);
    Real rho(0);
    switch (m.kind) {
        case ModelKind::cusp_disk: {
            const Real r2 = x[0] * x[0] + x[1] * x[1];
            if (!(r2 > Real(0) && r2 < Real(1))) throw ChartError("cusp_disk: need 0 < |z| < 1");
            const Real s = log(r2);
            rho = m.normalization == Normalization::standard ? Real(-log(-s))
                                                          : Real(log(two) - s - two * log(-s));
            break;
        }
        case ModelKind::ball_cusp: {
            const Real q = x[1] - (x[2] * x[2] + x[3] * x[3]);
            if (!(q > Real(0))) throw ChartError("ball_cusp: need Im u > |v|^2");
            rho = -log(q);
            break;
        }
        case ModelKind::hilbert_cusp: {
            if (!(x[1] > Real(0) && x[3] > Real(0))) throw ChartError("hilbert_cusp: need y1, y2 > 0");
            rho = -log(x[1]) - log(x[3]);
            break;
        }
        case ModelKind::cone_elliptic: {
            const Real w2 = x[2] * x[2] + x[3] * x[3];
            if (!(w2 > Real(0))) throw ChartError("cone_elliptic: need w != 0");
            const Real t = log(w2) + Real(m.k) * (x[0] * x[0] + x[1] * x[1]);
            if (!(t < Real(0))) throw ChartError("cone_elliptic: need log|sigma|^2 < 0");
            rho = m.normalization == Normalization::standard ? Real(-log(-t))
                                                          : Real(-three * log(-t) + log(nine));
            break;
        }
    }
    return Real(m.scale) * rho;
}

template <typename Real>
std::array<Real, 4> to_real(const ChartPoint& p) {
    return {Real(p[0].real()), Real(p[0].imag()), Real(p[1].real()), Real(p[1].imag())};
}

/// Real Hessian of f over the first `nreal` coordinates by central differences at step h.
template <typename Real, typename F>
std::array<std::array<Real, 4>, 4> real_hessian(F&& f, const std::array<Real, 4>& x, int nreal, Real h) {
    std::array<std::array<Real, 4>, 4> H{};
    const Real f0 = f(x);
    auto shifted = [&](int a, Real da, int b, Real db) {
        std::array<Real, 4> y = x;
        y[a] += da;
        if (b >= 0) y[b] += db;
        return f(y);
    };
    for (int a = 0; a < nreal; ++a) {
        H[a][a] = (shifted(a, h, -1, Real(0)) - Real(2) * f0 + shifted(a, -h, -1, Real(0))) / (h * h);
        for (int b = a + 1; b < nreal; ++b) {
            const Real v = (shifted(a, h, b, h) - shifted(a, h, b, -h) - shifted(a, -h, b, h) +
                            shifted(a, -h, b, -h)) /
                           (Real(4) * h * h);
            H[a][b] = v;
            H[b][a] = v;
        }
    }
    return H;
}

/// Richardson-extrapolated complex Hessian d^2 f / dz_i dzbar_j over steps h and h/2.
template <typename Real, typename F>
std::array<std::array<std::complex<Real>, 2>, 2> complex_hessian(F&& f, const std::array<Real, 4>& x,
                                                                 int n, Real h) {
    const auto H1 = real_hessian<Real>(f, x, 2 * n, h);
    const auto H2 = real_hessian<Real>(f, x, 2 * n, h / Real(2));
    std::array<std::array<Real, 4>, 4> H{};
    for (int a = 0; a < 2 * n; ++a)
        for (int b = 0; b < 2 * n; ++b) H[a][b] = (Real(4) * H2[a][b] - H1[a][b]) / Real(3);
    std::array<std::array<std::complex<Real>, 2>, 2> g{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
            g[i][j] = std::complex<Real>((H[xi][xj] + H[yi][yj]) / Real(4),
                                         (H[xi][yj] - H[yi][xj]) / Real(4));
        }
    return g;
}

template <typename Real>
Real log_det(const std::array<std::array<std::complex<Real>, 2>, 2>& g, int n) {
    using std::log;
    Real det = n == 1 ? g[0][0].real()
                      : Real(g[0][0].real() * g[1][1].real() - std::norm(g[0][1]));
    if (!(det > Real(0))) throw ChartError("metric is not positive definite near this point");
    return log(det);
}

}  // namespace detail

/// Hermitian n x n matrix (n <= 2) in the complex coordinates of the model chart.
struct HermitianMatrix {
    int n = 1;
    std::array<std::array<std::complex<double>, 2>, 2> m{};
    double asymmetry = 0.0;  // max |m_ij - conj(m_ji)| before symmetrization

    std::complex<double> operator()(int i, int j) const { return m[i][j]; }
    double det() const { return n == 1 ? m[0][0].real() : m[0][0].real() * m[1][1].real() - std::norm(m[0][1]); }
    bool positive_definite() const { return m[0][0].real() > 0.0 && det() > 0.0; }
};

inline double potential(const ModelMetric& model, const ChartPoint& p) {
    return detail::potential_real<double>(model, detail::to_real<double>(p));
}

namespace detail {

inline void check_margin(const ModelMetric& model, const ChartPoint& p, double margin) {
    const auto x = to_real<double>(p);
    for (int a = 0; a < 2 * model.dim(); ++a)
        for (double sgn : {-1.0, 1.0}) {
            auto y = x;
            y[a] += sgn * margin;
            potential_real<double>(model, y);
        }
}

inline HermitianMatrix to_hermitian(const std::array<std::array<std::complex<Quad>, 2>, 2>& gq, int n) {
    HermitianMatrix out;
    out.n = n;
    std::array<std::array<std::complex<double>, 2>, 2> raw{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            raw[i][j] = {static_cast<double>(gq[i][j].real()), static_cast<double>(gq[i][j].imag())};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            out.asymmetry = std::max(out.asymmetry, std::abs(raw[i][j] - std::conj(raw[j][i])));
            out.m[i][j] = 0.5 * (raw[i][j] + std::conj(raw[j][i]));
        }
    return out;
}

inline std::array<std::array<std::complex<Quad>, 2>, 2> metric_quad(const ModelMetric& model,
                                                                     const std::array<Quad, 4>& x,
                                                                     Quad h) {
    auto f = [&](const std::array<Quad, 4>& y) { return potential_real<Quad>(model, y); };
    return complex_hessian<Quad>(f, x, model.dim(), h);
}

}  // namespace detail

/// g_{i jbar} by Richardson-extrapolated central differences (steps h, h/2), evaluated in
/// quadruple precision. Requires the point to sit at least 4 h inside the chart.
inline HermitianMatrix metric_tensor(const ModelMetric& model, const ChartPoint& p, double fd_step = 1e-3) {
    if (!(fd_step > 0.0)) throw InputError("metric_tensor: fd_step must be positive");
    detail::check_margin(model, p, 4.0 * fd_step);
    const auto gq = detail::metric_quad(model, detail::to_real<detail::Quad>(p), detail::Quad(fd_step));
    HermitianMatrix g = detail::to_hermitian(gq, model.dim());
    if (!g.positive_definite())
        throw ChartError("metric_tensor: not positive definite (chart boundary too close or step too large)");
    return g;
}

/// Ric_{i jbar} = -d dbar log det g, with g itself from metric_tensor's difference scheme.
inline HermitianMatrix ricci_fd(const ModelMetric& model, const ChartPoint& p, double fd_step = 1e-3) {
    using detail::Quad;
    if (!(fd_step > 0.0)) throw InputError("ricci_fd: fd_step must be positive");
    detail::check_margin(model, p, 8.0 * fd_step);
    const int n = model.dim();
    const Quad h(fd_step);
    auto logdet = [&](const std::array<Quad, 4>& y) {
        return detail::log_det<Quad>(detail::metric_quad(model, y, h), n);
    };
    auto hq = detail::complex_hessian<Quad>(logdet, detail::to_real<Quad>(p), n, h);
    for (auto& row : hq)
        for (auto& v : row) v = -v;
    return detail::to_hermitian(hq, n);
}

struct EinsteinReport {
    double lambda_hat = 0.0;
    double max_residual = 0.0;
    double fd_step = 0.0;
    std::vector<HermitianMatrix> metrics;
    std::vector<HermitianMatrix> riccis;
};

/// Least-squares fit of Ric = -lambda g over the sample points.
inline EinsteinReport einstein_check(const ModelMetric& model, std::span<const ChartPoint> points,
                                     double fd_step = 1e-3) {
    if (points.size() < 3) throw InputError("einstein_check: need at least 3 sample points");
    EinsteinReport rep;
    rep.fd_step = fd_step;
    double num = 0.0, den = 0.0;
    for (const auto& p : points) {
        rep.metrics.push_back(metric_tensor(model, p, fd_step));
        rep.riccis.push_back(ricci_fd(model, p, fd_step));
        const auto& g = rep.metrics.back();
        const auto& r = rep.riccis.back();
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                num += (r.m[i][j] * std::conj(g.m[i][j])).real();
                den += std::norm(g.m[i][j]);
            }
    }
    rep.lambda_hat = -num / den;
    for (std::size_t s = 0; s < points.size(); ++s) {
        const auto& g = rep.metrics[s];
        const auto& r = rep.riccis[s];
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                rep.max_residual = std::max(rep.max_residual, std::abs(r.m[i][j] + rep.lambda_hat * g.m[i][j]));
    }
    return rep;
}

/// Columns: point coordinates, g and Ric entries (upper triangle, re/im), lambda_hat.
inline void write_model_csv(std::ostream& os, const ModelMetric& model, std::span<const ChartPoint> points,
                            const EinsteinReport& rep) {
    os.precision(17);
    os << "model,x1,y1,x2,y2,g11_re,g12_re,g12_im,g22_re,ric11_re,ric12_re,ric12_im,ric22_re,lambda_hat\n";
    for (std::size_t s = 0; s < points.size(); ++s) {
        const auto& p = points[s];
        const auto& g = rep.metrics[s];
        const auto& r = rep.riccis[s];
        os << to_string(model.kind) << ',' << p[0].real() << ',' << p[0].imag() << ',' << p[1].real() << ','
           << p[1].imag() << ',' << g.m[0][0].real() << ',' << g.m[0][1].real() << ',' << g.m[0][1].imag()
           << ',' << g.m[1][1].real() << ',' << r.m[0][0].real() << ',' << r.m[0][1].real() << ','
           << r.m[0][1].imag() << ',' << r.m[1][1].real() << ',' << rep.lambda_hat << '\n';
    }
}

/// Closed-form reduced potentials along the log coordinate of each rotationally symmetric model.
///   cusp_disk     : t = log|z|
///   cone_elliptic : t = log|sigma|^2 at a point of the zero section's normal direction
struct ReducedPotential {
    double value = 0.0, d1 = 0.0, d2 = 0.0;
};

inline ReducedPotential reduced_potential(const ModelMetric& m, double t) {
    if (!(t < 0.0)) throw ChartError("reduced_potential: need t < 0");
    ReducedPotential r;
    const double L = std::log(-t);
    switch (m.kind) {
        case ModelKind::cusp_disk:
            if (m.normalization == Normalization::standard)
                r = {-std::log(-2.0 * t), -1.0 / t, 1.0 / (t * t)};
            else
                r = {std::log(2.0) - 2.0 * t - 2.0 * std::log(-2.0 * t), -2.0 - 2.0 / t, 2.0 / (t * t)};
            break;
        case ModelKind::cone_elliptic:
            if (m.normalization == Normalization::standard)
                r = {-L, -1.0 / t, 1.0 / (t * t)};
            else
                r = {-3.0 * L + std::log(9.0), -3.0 / t, 3.0 / (t * t)};
            break;
        default: throw InputError("reduced_potential: only cusp_disk and cone_elliptic are rotationally reduced");
    }
    r.value *= m.scale;
    r.d1 *= m.scale;
    r.d2 *= m.scale;
    return r;
}

namespace exact {

/// Exact solution of phi_tt = 4 e^{2t + phi} on t = log|z| < 0.
inline double cusp(double t) { return std::log(2.0) - 2.0 * t - 2.0 * std::log(-2.0 * t); }

/// Exact solution of 2k phi' phi'' = c e^phi on t < 0.
inline double cone(double t, int k = 1, double c = 0.0) {
    if (c == 0.0) c = 2.0 * k;
    return -3.0 * std::log(-t) + std::log(9.0 * 2.0 * k / c);
}

}  // namespace exact

}  // namespace kecusp
