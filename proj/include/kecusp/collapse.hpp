#pragma once

// Covering radii of translation lattices of Hilbert modular cusps under the level-set
// scaling diag(1, e^{-c_hat}), and the flat cylinder limit.

#include "kecusp/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kecusp {

struct Rational {
    long long num = 0;
    long long den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

inline Rational make_rational(long long num, long long den = 1) {
    if (den == 0) throw InputError("rational: zero denominator");
    if (den < 0) num = -num, den = -den;
    const long long g = std::gcd(num, den);
    return g > 1 ? Rational{num / g, den / g} : Rational{num, den};
}

/// Parses "p" or "p/q".
inline std::optional<Rational> parse_rational(std::string_view s) {
    auto parse_ll = [](std::string_view v) -> std::optional<long long> {
        long long x = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
        return x;
    };
    const auto slash = s.find('/');
    const auto n = parse_ll(s.substr(0, slash));
    if (!n) return std::nullopt;
    if (slash == std::string_view::npos) return Rational{*n, 1};
    const auto d = parse_ll(s.substr(slash + 1));
    if (!d || *d == 0) return std::nullopt;
    return make_rational(*n, *d);
}

inline std::string to_string(const Rational& r) {
    return r.den == 1 ? std::to_string(r.num) : std::to_string(r.num) + "/" + std::to_string(r.den);
}

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>;

/// Rank-2 module Z alpha_1 + Z alpha_2 in Q(sqrt d), embedded by (alpha, alpha').
struct QuadraticLattice {
    int d = 0;                     // 0 when the basis was injected directly
    std::array<Rational, 2> p{};   // alpha_i = p_i + q_i sqrt d
    std::array<Rational, 2> q{};
    Mat2 embedded{};               // rows (alpha_i, alpha_i')
};

namespace detail {

inline bool squarefree(int d) {
    for (int f = 2; f * f <= d; ++f)
        if (d % (f * f) == 0) return false;
    return true;
}

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }

inline void check_nonsingular(const Mat2& b) {
    const double det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    const double scale = norm(b[0]) * norm(b[1]);
    if (!(scale > 0.0) || !(std::abs(det) > 1e-13 * scale))
        throw InputError("lattice: basis is singular (collinear embedded rows)");
}

}  // namespace detail

inline QuadraticLattice make_quadratic_lattice(int d, Rational p1, Rational q1, Rational p2, Rational q2) {
    if (d < 2 || !detail::squarefree(d)) throw InputError("lattice: d must be a squarefree integer >= 2");
    for (const Rational* r : {&p1, &q1, &p2, &q2})
        if (r->den == 0) throw InputError("lattice: zero denominator");
    QuadraticLattice L;
    L.d = d;
    L.p = {p1, p2};
    L.q = {q1, q2};
    const double sd = std::sqrt(static_cast<double>(d));
    for (int i = 0; i < 2; ++i)
        L.embedded[i] = {L.p[i].value() + L.q[i].value() * sd, L.p[i].value() - L.q[i].value() * sd};
    detail::check_nonsingular(L.embedded);
    return L;
}

/// Lattice given directly by the rows of `basis`.
inline QuadraticLattice lattice_from_basis(const Mat2& basis) {
    for (const auto& row : basis)
        for (double v : row)
            if (!std::isfinite(v)) throw InputError("lattice: non-finite basis entry");
    detail::check_nonsingular(basis);
    QuadraticLattice L;
    L.embedded = basis;
    return L;
}

namespace detail {

/// Lagrange-Gauss reduction: |b0| <= |b1| and |b0 . b1| <= |b0|^2 / 2.
inline Mat2 gauss_reduce(Mat2 b) {
    if (dot(b[0], b[0]) > dot(b[1], b[1])) std::swap(b[0], b[1]);
    for (int guard = 0; guard < 10000; ++guard) {
        const double mu = std::round(dot(b[0], b[1]) / dot(b[0], b[0]));
        b[1] = {b[1][0] - mu * b[0][0], b[1][1] - mu * b[0][1]};
        if (dot(b[1], b[1]) >= dot(b[0], b[0])) return b;
        std::swap(b[0], b[1]);
    }
    throw InputError("lattice: reduction did not terminate");
}

inline Mat2 scaled_basis(const QuadraticLattice& L, double c_hat) {
    const double s = std::exp(-c_hat);
    Mat2 b = L.embedded;
    for (auto& row : b) row[1] *= s;
    check_nonsingular(b);
    return b;
}

using Polygon = std::vector<Vec2>;

/// Keeps the part of `poly` with x . v <= |v|^2 / 2.
inline Polygon clip(const Polygon& poly, const Vec2& v) {
    const double c = 0.5 * dot(v, v);
    Polygon out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        const double fa = dot(a, v) - c, fb = dot(b, v) - c;
        if (fa <= 0) out.push_back(a);
        if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
            const double s = fa / (fa - fb);
            out.push_back({a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])});
        }
    }
    return out;
}

/// Voronoi cell of the origin from all lattice vectors of norm <= max(3 lambda_1, 2 lambda_2).
inline Polygon voronoi_cell(const Mat2& reduced) {
    const double l1 = norm(reduced[0]), l2 = norm(reduced[1]);
    const double R = std::max(3.0 * l1, 2.0 * l2);
    const double box = l1 + l2;
    Polygon cell = {{-box, -box}, {box, -box}, {box, box}, {-box, box}};
    // Coefficient bounds from |m b0 + n b1| >= |n| * dist(b1, R b0) and the reduced-basis angle.
    const double det = std::abs(reduced[0][0] * reduced[1][1] - reduced[0][1] * reduced[1][0]);
    const int nmax = static_cast<int>(std::ceil(R * l1 / det)) + 1;
    const int mmax = static_cast<int>(std::ceil(R * l2 / det)) + 1;
    for (int m = -mmax; m <= mmax; ++m)
        for (int n = -nmax; n <= nmax; ++n) {
            if (m == 0 && n == 0) continue;
            const Vec2 v = {m * reduced[0][0] + n * reduced[1][0], m * reduced[0][1] + n * reduced[1][1]};
            if (norm(v) <= R * (1 + 1e-12)) cell = clip(cell, v);
        }
    return cell;
}

/// Distance from x to the lattice spanned by a Gauss-reduced basis.
inline double distance_to_lattice(const Mat2& b, const Vec2& x) {
    const double det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    const double c0 = (x[0] * b[1][1] - x[1] * b[1][0]) / det;
    const double c1 = (b[0][0] * x[1] - b[0][1] * x[0]) / det;
    const double r0 = std::round(c0), r1 = std::round(c1);
    double best = INFINITY;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            const double m = r0 + i, n = r1 + j;
            const Vec2 v = {x[0] - m * b[0][0] - n * b[1][0], x[1] - m * b[0][1] - n * b[1][1]};
            best = std::min(best, norm(v));
        }
    return best;
}

}  // namespace detail

struct CoveringRadius {
    double radius = 0.0;          // max vertex norm of the Voronoi cell
    double sampled_max = 0.0;     // max distance over the certification samples
    double sample_spacing = 0.0;  // covering radius of the sample grid
    Vec2 deep_hole{};
};

/// Covering radius of diag(1, e^{-c_hat}) Lambda with its sampling certificate:
/// sampled_max <= radius <= sampled_max + sample_spacing.
inline CoveringRadius covering_radius_detail(const QuadraticLattice& L, double c_hat, int samples = 64) {
    if (!(c_hat >= 0.0) || !std::isfinite(c_hat)) throw InputError("covering_radius: c_hat must be >= 0");
    const Mat2 b = detail::gauss_reduce(detail::scaled_basis(L, c_hat));
    const detail::Polygon cell = detail::voronoi_cell(b);
    if (cell.size() < 4) throw InputError("covering_radius: degenerate Voronoi cell");
    CoveringRadius out;
    for (const Vec2& v : cell)
        if (detail::norm(v) > out.radius) out.radius = detail::norm(v), out.deep_hole = v;

    // Certification on the fundamental parallelogram spanned by the reduced basis.
    const Vec2 e0 = {b[0][0] / samples, b[0][1] / samples}, e1 = {b[1][0] / samples, b[1][1] / samples};
    out.sample_spacing = 0.5 * std::max(detail::norm({e0[0] + e1[0], e0[1] + e1[1]}),
                                        detail::norm({e0[0] - e1[0], e0[1] - e1[1]}));
    for (int i = 0; i <= samples; ++i)
        for (int j = 0; j <= samples; ++j) {
            const Vec2 x = {i * e0[0] + j * e1[0], i * e0[1] + j * e1[1]};
            out.sampled_max = std::max(out.sampled_max, detail::distance_to_lattice(b, x));
        }
    const double slack = 1e-9 * std::max(1.0, out.radius);
    if (out.radius + slack < out.sampled_max || out.radius > out.sampled_max + out.sample_spacing + slack)
        throw InputError("covering_radius: enumeration and sampling certificate disagree");
    return out;
}

inline double covering_radius(const QuadraticLattice& L, double c_hat) {
    return covering_radius_detail(L, c_hat).radius;
}

struct CollapseProfile {
    std::vector<double> c_hat;
    std::vector<double> radii;
    bool monotone = true;      // strictly decreasing
    bool halved = true;        // mu(c_max) < mu(c_min) / 2 whenever c_max >= c_min + 8
    std::string scaling = "diag(1, exp(-c_hat))";
};

inline CollapseProfile collapse_profile(const QuadraticLattice& L, std::span<const double> c_hat) {
    if (c_hat.empty()) throw InputError("collapse_profile: c_hat list is empty");
    for (std::size_t i = 1; i < c_hat.size(); ++i)
        if (!(c_hat[i] > c_hat[i - 1])) throw InputError("collapse_profile: c_hat list must be increasing");
    CollapseProfile p;
    p.c_hat.assign(c_hat.begin(), c_hat.end());
    for (double c : c_hat) p.radii.push_back(covering_radius(L, c));
    for (std::size_t i = 1; i < p.radii.size(); ++i)
        if (!(p.radii[i] < p.radii[i - 1])) p.monotone = false;
    if (c_hat.back() >= c_hat.front() + 8.0) p.halved = p.radii.back() < p.radii.front() / 2.0;
    return p;
}

inline void write_collapse_csv(std::ostream& os, const CollapseProfile& p) {
    os.precision(17);
    os << "c_hat,covering_radius\n";
    for (std::size_t i = 0; i < p.c_hat.size(); ++i) os << p.c_hat[i] << ',' << p.radii[i] << '\n';
}

/// g_Y = 2 dy1 dy1 + dc dc - 2 dc dy1 in (y1_hat, c_hat) coordinates.
inline Mat2 cylinder_limit_gram() { return {{{2.0, -1.0}, {-1.0, 1.0}}}; }

}  // namespace kecusp
