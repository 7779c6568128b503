#pragma once

// Steady-state Kalman-Bucy covariance for 2x2 linear models: an independent
// verification path for the closed-form conditional covariances. Models are
// built in gamma-normalized units (all rates divided by gamma), which leaves
// the dimensionless covariance unchanged.

#include <array>
#include <cmath>
#include <vector>

#include "condosc/errors.hpp"
#include "condosc/params.hpp"

namespace condosc {

using Mat2 = std::array<std::array<double, 2>, 2>;

/// One linear measurement channel y = row . (q, p) + noise.
struct MeasurementChannel {
    double row_q = 0.0;
    double row_p = 0.0;
    double noise_psd = 1.0;  // two-sided, unit shot noise = 1
};

/// dx = drift x dt + noise, diffusion = two-sided PSD matrix of the process
/// noise. noise_correlation (process vs measurement noise) must be zero for
/// the steady-state solver.
struct StateSpaceModel {
    Mat2 drift{};
    Mat2 diffusion{};
    std::vector<MeasurementChannel> channels;
    std::array<double, 2> noise_correlation{0.0, 0.0};

    void validate() const {
        if (diffusion[0][1] != diffusion[1][0])
            throw std::invalid_argument("StateSpaceModel: diffusion must be symmetric");
        if (diffusion[0][0] < 0.0 || diffusion[1][1] < 0.0 ||
            diffusion[0][0] * diffusion[1][1] <
                diffusion[0][1] * diffusion[0][1] - 1e-30)
            throw std::invalid_argument(
                "StateSpaceModel: diffusion must be positive semidefinite");
        if (diffusion[0][0] == 0.0 && diffusion[1][1] == 0.0 && diffusion[0][1] == 0.0)
            throw std::invalid_argument("StateSpaceModel: zero diffusion is not a valid model");
        for (const auto& ch : channels)
            if (!(ch.noise_psd > 0.0))
                throw std::invalid_argument("StateSpaceModel: measurement noise PSD must be > 0");
        if (noise_correlation[0] != 0.0 || noise_correlation[1] != 0.0)
            throw std::invalid_argument(
                "StateSpaceModel: correlated process/measurement noise is unsupported");
    }
};

struct SteadyStateCovariance {
    double v_qq = 0.0;
    double c_qp = 0.0;
    double v_pp = 0.0;
    double residual = 0.0;  // max |stationarity residual| / scale
};

/// Full (non-RWA) model from the equations of motion: drift [[0, W], [-W, -G]],
/// force PSD 4 G n_tot on the momentum (thermal 2G(2 n_th + 1) plus backaction
/// 4 G C), position measured at rate row = 2 sqrt(eta G C). Gamma-normalized.
inline StateSpaceModel build_full_model(const DerivedQuantities& d) {
    StateSpaceModel m;
    const double q = d.q_factor;
    m.drift = {{{0.0, q}, {-q, -1.0}}};
    m.diffusion = {{{0.0, 0.0}, {0.0, 4.0 * d.n_tot}}};
    m.channels = {{2.0 * std::sqrt(d.eta * d.c), 0.0, 1.0}};
    return m;
}

/// Rotating-frame model: both quadratures decay at G/2, feel the full force
/// noise, and are measured symmetrically. The two rows of strength
/// sqrt(2 eta G C) split the full model's information rate 4 eta G C equally,
/// which reproduces the standard RWA conditioning result
/// (sqrt(1 + 16 eta C n_tot) - 1)/(4 eta C). Gamma-normalized.
inline StateSpaceModel build_rwa_model(const DerivedQuantities& d) {
    StateSpaceModel m;
    m.drift = {{{-0.5, 0.0}, {0.0, -0.5}}};
    m.diffusion = {{{2.0 * d.n_tot, 0.0}, {0.0, 2.0 * d.n_tot}}};
    const double row = std::sqrt(2.0 * d.eta * d.c);
    m.channels = {{row, 0.0, 1.0}, {0.0, row, 1.0}};
    return m;
}

namespace detail {

struct Vec3 {
    double v[3];
};

// Stationarity residual F(vq, cq, vp) of A V + V A^T + D - sum (V c)(V c)^T / R
// and its component scales (sums of absolute contributions).
inline void riccati_residual(const StateSpaceModel& m, double vq, double cq, double vp,
                             double f[3], double scale[3]) {
    const auto& a = m.drift;
    f[0] = 2.0 * (a[0][0] * vq + a[0][1] * cq) + m.diffusion[0][0];
    f[1] = a[1][0] * vq + (a[0][0] + a[1][1]) * cq + a[0][1] * vp + m.diffusion[0][1];
    f[2] = 2.0 * (a[1][0] * cq + a[1][1] * vp) + m.diffusion[1][1];
    scale[0] = 2.0 * (std::abs(a[0][0] * vq) + std::abs(a[0][1] * cq)) + std::abs(m.diffusion[0][0]);
    scale[1] = std::abs(a[1][0] * vq) + std::abs((a[0][0] + a[1][1]) * cq) +
               std::abs(a[0][1] * vp) + std::abs(m.diffusion[0][1]);
    scale[2] = 2.0 * (std::abs(a[1][0] * cq) + std::abs(a[1][1] * vp)) + std::abs(m.diffusion[1][1]);
    for (const auto& ch : m.channels) {
        const double m0 = ch.row_q * vq + ch.row_p * cq;
        const double m1 = ch.row_q * cq + ch.row_p * vp;
        f[0] -= m0 * m0 / ch.noise_psd;
        f[1] -= m0 * m1 / ch.noise_psd;
        f[2] -= m1 * m1 / ch.noise_psd;
        scale[0] += m0 * m0 / ch.noise_psd;
        scale[1] += std::abs(m0 * m1) / ch.noise_psd;
        scale[2] += m1 * m1 / ch.noise_psd;
    }
}

inline double scaled_residual_norm(const double f[3], const double scale[3]) {
    double r = 0.0;
    for (int i = 0; i < 3; ++i) r = std::max(r, std::abs(f[i]) / std::max(scale[i], 1e-300));
    return r;
}

// 3x3 Gaussian elimination with partial pivoting.
inline bool solve3(double a[3][3], double b[3], double x[3]) {
    int idx[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[idx[r]][col]) > std::abs(a[idx[piv]][col])) piv = r;
        std::swap(idx[col], idx[piv]);
        const double d = a[idx[col]][col];
        if (d == 0.0) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double fac = a[idx[r]][col] / d;
            for (int c = col; c < 3; ++c) a[idx[r]][c] -= fac * a[idx[col]][c];
            b[idx[r]] -= fac * b[idx[col]];
        }
    }
    for (int row = 2; row >= 0; --row) {
        double s = b[idx[row]];
        for (int c = row + 1; c < 3; ++c) s -= a[idx[row]][c] * x[c];
        x[row] = s / a[idx[row]][row];
    }
    return true;
}

}  // namespace detail

/// Unconditional stationary covariance: A V + V A^T + D = 0.
inline SteadyStateCovariance lyapunov_stationary(const StateSpaceModel& m) {
    m.validate();
    const auto& a = m.drift;
    double mat[3][3] = {
        {2.0 * a[0][0], 2.0 * a[0][1], 0.0},
        {a[1][0], a[0][0] + a[1][1], a[0][1]},
        {0.0, 2.0 * a[1][0], 2.0 * a[1][1]},
    };
    double rhs[3] = {-m.diffusion[0][0], -m.diffusion[0][1], -m.diffusion[1][1]};
    double x[3];
    if (!detail::solve3(mat, rhs, x))
        throw numeric_error("lyapunov_stationary: singular drift structure");
    SteadyStateCovariance out{x[0], x[1], x[2], 0.0};
    if (!(out.v_qq > 0.0) || !(out.v_pp > 0.0))
        throw numeric_error("lyapunov_stationary: drift is not stable");
    return out;
}

/// Damped Newton on the three scalar stationarity equations, starting from the
/// thermal (unconditional) covariance. The line search descends the plain l2
/// residual; the scale-relative norm only declares convergence (the absolute
/// residual spans many decades along the descent path).
inline SteadyStateCovariance steady_state_newton(const StateSpaceModel& m,
                                                 int max_iterations = 200) {
    m.validate();
    SteadyStateCovariance v = lyapunov_stationary(m);
    double f[3], scale[3];
    detail::riccati_residual(m, v.v_qq, v.c_qp, v.v_pp, f, scale);
    double res = detail::scaled_residual_norm(f, scale);
    double merit = std::hypot(f[0], f[1], f[2]);

    for (int iter = 0; iter < max_iterations; ++iter) {
        if (res < 1e-12) break;
        const auto& a = m.drift;
        double jac[3][3] = {
            {2.0 * a[0][0], 2.0 * a[0][1], 0.0},
            {a[1][0], a[0][0] + a[1][1], a[0][1]},
            {0.0, 2.0 * a[1][0], 2.0 * a[1][1]},
        };
        for (const auto& ch : m.channels) {
            const double m0 = ch.row_q * v.v_qq + ch.row_p * v.c_qp;
            const double m1 = ch.row_q * v.c_qp + ch.row_p * v.v_pp;
            const double r = ch.noise_psd;
            jac[0][0] -= 2.0 * m0 * ch.row_q / r;
            jac[0][1] -= 2.0 * m0 * ch.row_p / r;
            jac[1][0] -= m1 * ch.row_q / r;
            jac[1][1] -= (m1 * ch.row_p + m0 * ch.row_q) / r;
            jac[1][2] -= m0 * ch.row_p / r;
            jac[2][1] -= 2.0 * m1 * ch.row_q / r;
            jac[2][2] -= 2.0 * m1 * ch.row_p / r;
        }
        double rhs[3] = {-f[0], -f[1], -f[2]};
        double step[3];
        if (!detail::solve3(jac, rhs, step))
            throw numeric_error("steady_state: singular Newton system");

        double lambda = 1.0;
        bool accepted = false;
        for (int halve = 0; halve < 60; ++halve, lambda *= 0.5) {
            const double vq = v.v_qq + lambda * step[0];
            const double cq = v.c_qp + lambda * step[1];
            const double vp = v.v_pp + lambda * step[2];
            if (!(vq > 0.0) || !(vp > 0.0) || !(vq * vp - cq * cq > 0.0)) continue;
            double ft[3], st[3];
            detail::riccati_residual(m, vq, cq, vp, ft, st);
            const double rt = detail::scaled_residual_norm(ft, st);
            const double mt = std::hypot(ft[0], ft[1], ft[2]);
            if (mt < merit || rt < 1e-13) {
                v = {vq, cq, vp, rt};
                for (int i = 0; i < 3; ++i) { f[i] = ft[i]; scale[i] = st[i]; }
                res = rt;
                merit = mt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (res < 1e-10) break;  // rounding floor reached, already converged
            throw numeric_error("steady_state: Newton line search stalled");
        }
    }
    if (res >= 1e-10)
        throw numeric_error("steady_state: no convergence within the iteration limit");
    v.residual = res;
    return v;
}

/// Bisection on v_qq using the closed chain v_qq -> c_qp -> v_pp. Requires the
/// position-measurement structure (drift [[0, W], [-W, -G]], diffusion on the
/// momentum only, one channel reading q).
inline bool has_position_chain_structure(const StateSpaceModel& m) {
    return m.drift[0][0] == 0.0 && m.drift[0][1] > 0.0 && m.drift[1][1] < 0.0 &&
           m.drift[1][0] == -m.drift[0][1] && m.diffusion[0][0] == 0.0 &&
           m.diffusion[0][1] == 0.0 && m.diffusion[1][1] > 0.0 &&
           m.channels.size() == 1 && m.channels[0].row_p == 0.0;
}

inline SteadyStateCovariance steady_state_bisection(const StateSpaceModel& m) {
    m.validate();
    if (!has_position_chain_structure(m))
        throw std::invalid_argument(
            "steady_state_bisection: model lacks the position-measurement chain structure");
    const double w = m.drift[0][1];
    const double g = -m.drift[1][1];
    const double d22 = m.diffusion[1][1];
    const double s = m.channels[0].row_q * m.channels[0].row_q / m.channels[0].noise_psd;

    const auto chain = [&](double vq, double& cq, double& vp) {
        cq = s * vq * vq / (2.0 * w);
        vp = vq + cq * (g + s * vq) / w;
    };
    const auto excess = [&](double vq) {
        double cq, vp;
        chain(vq, cq, vp);
        return 2.0 * w * cq + 2.0 * g * vp + s * cq * cq - d22;
    };

    double hi = d22 / (2.0 * g);  // unconditional position variance
    while (excess(hi) < 0.0) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && (hi - lo) > 1e-16 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    SteadyStateCovariance v;
    v.v_qq = 0.5 * (lo + hi);
    chain(v.v_qq, v.c_qp, v.v_pp);
    double f[3], scale[3];
    detail::riccati_residual(m, v.v_qq, v.c_qp, v.v_pp, f, scale);
    v.residual = detail::scaled_residual_norm(f, scale);
    return v;
}

/// Steady-state Riccati solve: Newton with the bisection chain as fallback.
inline SteadyStateCovariance steady_state(const StateSpaceModel& m) {
    try {
        return steady_state_newton(m);
    } catch (const numeric_error&) {
        if (has_position_chain_structure(m)) return steady_state_bisection(m);
        throw;
    }
}

}  // namespace condosc
