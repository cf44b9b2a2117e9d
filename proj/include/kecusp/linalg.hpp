#pragma once

// Direct solvers for the Newton systems: Thomas elimination for 1D problems and
// block-tridiagonal elimination (dense LU on the blocks) for the periodic 2D grid.

#include "kecusp/error.hpp"

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace kecusp::linalg {

/// Solves a tridiagonal system in place of `rhs`.
/// lower[i] couples row i to i-1 (lower[0] unused), upper[i] couples row i to i+1.
template <typename Real>
void solve_tridiagonal(std::span<const Real> lower, std::span<const Real> diag,
                       std::span<const Real> upper, std::span<Real> rhs) {
    const std::size_t n = diag.size();
    std::vector<Real> c(n);
    Real beta = diag[0];
    if (beta == Real(0)) throw SolverError("tridiagonal solve: zero pivot");
    c[0] = n > 1 ? upper[0] / beta : Real(0);
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        beta = diag[i] - lower[i] * c[i - 1];
        if (beta == Real(0) || !std::isfinite(static_cast<double>(beta)))
            throw SolverError("tridiagonal solve: zero pivot");
        c[i] = i + 1 < n ? upper[i] / beta : Real(0);
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

/// Row-major dense square matrix.
template <typename Real>
struct Dense {
    int n = 0;
    std::vector<Real> a;

    Dense() = default;
    explicit Dense(int size) : n(size), a(static_cast<std::size_t>(size) * size, Real(0)) {}
    Real& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    Real operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// LU factorization with partial pivoting.
template <typename Real>
class DenseLU {
public:
    explicit DenseLU(Dense<Real> m) : lu_(std::move(m)), piv_(lu_.n) {
        const int n = lu_.n;
        for (int k = 0; k < n; ++k) {
            int p = k;
            for (int i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
            piv_[k] = p;
            if (lu_(p, k) == Real(0)) throw SolverError("dense LU: singular block");
            if (p != k)
                for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
            for (int i = k + 1; i < n; ++i) {
                lu_(i, k) /= lu_(k, k);
                const Real f = lu_(i, k);
                if (f == Real(0)) continue;
                for (int j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    void solve(std::span<Real> b) const {
        const int n = lu_.n;
        for (int k = 0; k < n; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            for (int i = k + 1; i < n; ++i) b[i] -= lu_(i, k) * b[k];
        }
        for (int i = n - 1; i >= 0; --i) {
            Real s = b[i];
            for (int j = i + 1; j < n; ++j) s -= lu_(i, j) * b[j];
            b[i] = s / lu_(i, i);
        }
    }

private:
    Dense<Real> lu_;
    std::vector<int> piv_;
};

/// Block-tridiagonal system whose off-diagonal blocks are scalar multiples of the identity:
///   off[i-1] x_{i-1} + D_i x_i + off[i] x_{i+1} = b_i.
/// Block rows are stored contiguously in `rhs`, which is overwritten with the solution.
template <typename Real>
void solve_block_tridiagonal(std::vector<Dense<Real>> diag, std::span<const Real> off,
                             std::span<Real> rhs) {
    const std::size_t nb = diag.size();
    if (nb == 0) return;
    const int m = diag[0].n;
    // Forward elimination: D'_i = D_i - off^2 D'_{i-1}^{-1}, b'_i = b_i - off D'_{i-1}^{-1} b'_{i-1}.
    std::vector<DenseLU<Real>> lus;
    lus.reserve(nb);
    std::vector<Real> col(m);
    for (std::size_t i = 0; i < nb; ++i) {
        if (i > 0) {
            const Real c = off[i - 1];
            const DenseLU<Real>& prev = lus.back();
            // Columns of D'_{i-1}^{-1}.
            for (int j = 0; j < m; ++j) {
                std::fill(col.begin(), col.end(), Real(0));
                col[j] = Real(1);
                prev.solve(col);
                for (int r = 0; r < m; ++r) diag[i](r, j) -= c * c * col[r];
            }
            std::span<Real> bprev = rhs.subspan((i - 1) * m, m);
            std::copy(bprev.begin(), bprev.end(), col.begin());
            prev.solve(col);
            for (int r = 0; r < m; ++r) rhs[i * m + r] -= c * col[r];
        }
        lus.emplace_back(diag[i]);
    }
    // Back substitution.
    for (std::size_t i = nb; i-- > 0;) {
        std::span<Real> bi = rhs.subspan(i * m, m);
        if (i + 1 < nb) {
            const Real c = off[i];
            for (int r = 0; r < m; ++r) bi[r] -= c * rhs[(i + 1) * m + r];
        }
        lus[i].solve(bi);
    }
}

}  // namespace kecusp::linalg
