#include "kecusp/geom.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace kecusp;

TEST(Domain, UniformRadialGrid) {
    const auto d = build_domain(Reduction::radial_n1, -8, -1, 1025);
    EXPECT_DOUBLE_EQ(d.h(), 7.0 / 1024.0);
    EXPECT_EQ(d.t(0), -8.0);
    EXPECT_EQ(d.t(1024), -1.0);
    EXPECT_EQ(d.size(), 1025u);
    EXPECT_EQ(d.complex_dim(), 1);
}

TEST(Domain, ConeWithDegree) {
    const auto d = build_domain(Reduction::calabi_cone_n2, -100, -2, 4097, std::nullopt, 1);
    EXPECT_EQ(d.k, 1);
    EXPECT_EQ(d.complex_dim(), 2);
}

TEST(Domain, PolarIsPeriodic) {
    const auto d = build_domain(Reduction::polar2d_n1, -4, -1, 33, 16);
    EXPECT_EQ(d.size(), 33u * 16u);
    EXPECT_NEAR(d.theta(15) + d.dtheta(), 2 * std::numbers::pi, 1e-15);
}

TEST(Domain, Rejections) {
    EXPECT_THROW(build_domain(Reduction::radial_n1, -1, -8, 9), InputError);
    EXPECT_THROW(build_domain(Reduction::radial_n1, -1, -1, 9), InputError);
    EXPECT_THROW(build_domain(Reduction::radial_n1, -8, -1, 4), InputError);
    EXPECT_THROW(build_domain(Reduction::radial_n1, -8, 0.5, 9), InputError);
    EXPECT_THROW(build_domain(Reduction::radial_n1, -INFINITY, -1, 9), InputError);
    EXPECT_THROW(build_domain(Reduction::polar2d_n1, -8, -1, 9), InputError);
    EXPECT_THROW(build_domain(Reduction::polar2d_n1, -8, -1, 9, 7), InputError);
    EXPECT_THROW(build_domain(Reduction::calabi_cone_n2, -8, -1, 9), InputError);
    EXPECT_THROW(build_domain(Reduction::calabi_cone_n2, -8, -1, 9, std::nullopt, 0), InputError);
}

TEST(Divisor, Validation) {
    EXPECT_NO_THROW(validate(DivisorData{{0.0, 2.0}, {1.0, 0.5}, 1}));
    EXPECT_THROW(validate(DivisorData{{-0.5}, {}, 1}), InputError);
    EXPECT_THROW(validate(DivisorData{{}, {0.0}, 1}), InputError);
    EXPECT_THROW(validate(DivisorData{{}, {1.5}, 1}), InputError);
    EXPECT_THROW(validate(DivisorData{{}, {}, 0}), InputError);
}

TEST(SigmaWeight, ScalesWithPoleOrder) {
    const auto d = build_domain(Reduction::radial_n1, -8, -1, 29);
    const auto w1 = sigma_d_weight(d, DivisorData{{}, {}, 1});
    const auto w2 = sigma_d_weight(d, DivisorData{{}, {}, 2});
    for (int i = 0; i < d.n_t; ++i) {
        EXPECT_EQ(w1[i], d.t(i));
        EXPECT_EQ(w2[i], 2 * d.t(i));
        EXPECT_LT(w1[i], 0.0);
        if (i > 0) {
            EXPECT_GT(w1[i], w1[i - 1]);
        }
        EXPECT_TRUE(std::isfinite(-std::log(-w1[i])));
    }
}

TEST(SigmaWeight, LogLogDivergesOnlyTowardZero) {
    const auto shallow = build_domain(Reduction::radial_n1, -8, -1e-3, 101);
    const auto w = sigma_d_weight(shallow, DivisorData{});
    double prev = -INFINITY;
    for (double v : w) {
        const double ll = -std::log(-v);
        EXPECT_TRUE(std::isfinite(ll));
        EXPECT_GT(ll, prev);
        prev = ll;
    }
    EXPECT_GT(prev, 6.0);
}

TEST(SigmaWeight, RejectsZeroOuterRadius) {
    const auto d = build_domain(Reduction::radial_n1, -8, 0, 9);
    EXPECT_THROW(sigma_d_weight(d, DivisorData{}), InputError);
}

TEST(Density, SmoothUnitIsZero) {
    const auto d = build_domain(Reduction::radial_n1, -8, -1, 17);
    const auto den = build_density(d, DivisorData{}, 0.0, DensityKind::smooth_unit);
    for (double v : den.log_f) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(den.background, 0.0);
}

TEST(Density, ConePoleCancelsAgainstFiberElement) {
    for (int k : {1, 2}) {
        const auto d = build_domain(Reduction::calabi_cone_n2, -100, -2, 33, std::nullopt, k);
        const auto den = build_density(d, DivisorData{{}, {1.0}, 1}, 0.0, DensityKind::cone_pole);
        const double c = std::exp(den.log_f[0]);
        for (double v : den.log_f) EXPECT_EQ(v, den.log_f[0]);
        // Oracle: Monge-Ampere of the ansatz over e^phi |w|^-2 dV at five values of t.
        auto phi = [k](long double t) { return -3 * std::log(-t) + std::log(9.0L); };
        for (double t : {-50.0, -20.0, -8.0, -4.0, -2.5}) {
            const std::complex<double> z(0.05, -0.02);
            const double w = std::sqrt(std::exp(t - k * std::norm(z)));
            EXPECT_NEAR(oracle::calabi_density_ratio(phi, k, z, {w, 0.0}), c, 1e-5 * c) << "t = " << t;
        }
    }
}

TEST(Density, FFactorFoldedPointwise) {
    const auto d = build_domain(Reduction::radial_n1, -8, -1, 33);
    std::vector<double> custom(d.size());
    for (int i = 0; i < d.n_t; ++i) custom[i] = 0.1 * std::sin(d.t(i));
    const DivisorData div{{}, {1.0}, 2};
    const auto den = build_density(d, div, 0.5, DensityKind::custom, custom);
    for (int i = 0; i < d.n_t; ++i) {
        const double l = 2 * d.t(i);
        EXPECT_NEAR(den.log_f[i] - custom[i], -std::log(std::exp(l) + 0.5), 1e-14);
    }
    const auto den0 = build_density(d, div, 0.0, DensityKind::custom, custom);
    for (int i = 0; i < d.n_t; ++i)
        EXPECT_NEAR(den.log_f[i] - den0.log_f[i], -std::log((std::exp(2 * d.t(i)) + 0.5) / std::exp(2 * d.t(i))), 1e-12);
}

TEST(Density, SignPatternInS) {
    const auto d = build_domain(Reduction::radial_n1, -8, -1, 33);
    const DivisorData e_only{{1.0, 0.5}, {}, 1}, f_only{{}, {0.5}, 1};
    for (auto [s1, s2] : {std::pair{0.0, 0.25}, std::pair{0.25, 1.0}}) {
        const auto e1 = build_density(d, e_only, s1, DensityKind::smooth_unit);
        const auto e2 = build_density(d, e_only, s2, DensityKind::smooth_unit);
        const auto f1 = build_density(d, f_only, s1, DensityKind::smooth_unit);
        const auto f2 = build_density(d, f_only, s2, DensityKind::smooth_unit);
        for (std::size_t k = 0; k < d.size(); ++k) {
            EXPECT_GT(e2.log_f[k], e1.log_f[k]);
            EXPECT_LT(f2.log_f[k], f1.log_f[k]);
        }
    }
}

TEST(Density, Rejections) {
    const auto d = build_domain(Reduction::radial_n1, -8, -1, 9);
    EXPECT_THROW(build_density(d, DivisorData{}, -0.1, DensityKind::smooth_unit), InputError);
    std::vector<double> bad(d.size(), 0.0);
    bad[3] = NAN;
    EXPECT_THROW(build_density(d, DivisorData{}, 0.0, DensityKind::custom, bad), InputError);
    EXPECT_THROW(build_density(d, DivisorData{}, 0.0, DensityKind::custom, std::vector<double>(3)), InputError);
    EXPECT_THROW(build_density(d, DivisorData{}, 0.0, DensityKind::cone_pole), InputError);
}

TEST(Density, CsvColumns) {
    const auto d = build_domain(Reduction::polar2d_n1, -2, -1, 5, 8);
    const auto den = build_density(d, DivisorData{}, 0.0, DensityKind::smooth_unit);
    std::ostringstream os;
    write_density_csv(os, d, den);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,theta,log_f,sigma_d_log");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 5 * 8);
}

TEST(Density, FiniteAtDepth) {
    const auto d = build_domain(Reduction::radial_n1, -1000, -1, 33);
    const DivisorData f_only{{}, {1.0}, 1};
    const auto den0 = build_density(d, f_only, 0.0, DensityKind::smooth_unit);
    const auto den = build_density(d, f_only, 0.5, DensityKind::smooth_unit);
    EXPECT_DOUBLE_EQ(den0.log_f[0], 1000.0);
    EXPECT_NEAR(den.log_f[0], -std::log(0.5), 1e-14);
    const auto dc = build_domain(Reduction::calabi_cone_n2, -1000, -2, 33, std::nullopt, 1);
    const auto cone = build_density(dc, f_only, 0.0, DensityKind::cone_pole);
    EXPECT_DOUBLE_EQ(cone.log_f[0], std::log(2.0));
}
