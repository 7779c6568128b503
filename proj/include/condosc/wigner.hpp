#pragma once

// Gaussian Wigner densities of conditional states on a uniform phase-space
// grid, W(q,p) = exp(-r^T V^-1 r / 2) / (2 pi sqrt|V|), zero-point variance 1.

#include <cmath>
#include <numbers>
#include <vector>

#include "condosc/conditional.hpp"
#include "condosc/errors.hpp"

namespace condosc {

/// W = exp(-1) * W_max contour of the Gaussian: semi-axis sqrt(2 v_min) along
/// `tilt` (the minimal-variance quadrature) and sqrt(2 v_max) across it.
struct ContourEllipse {
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double tilt = 0.0;
};

struct WignerGrid {
    std::vector<double> q_axis;
    std::vector<double> p_axis;
    std::vector<double> density;  // row-major, density[ip * q_axis.size() + iq]
    ContourEllipse contour;

    double at(std::size_t iq, std::size_t ip) const { return density[ip * q_axis.size() + iq]; }

    /// Trapezoid integral over the grid; 1 within 1e-6 for a well-covered state.
    double integral() const {
        const std::size_t nq = q_axis.size(), np = p_axis.size();
        const double dq = q_axis[1] - q_axis[0];
        const double dp = p_axis[1] - p_axis[0];
        double sum = 0.0;
        for (std::size_t ip = 0; ip < np; ++ip) {
            const double wp = (ip == 0 || ip + 1 == np) ? 0.5 : 1.0;
            double row = 0.0;
            for (std::size_t iq = 0; iq < nq; ++iq) {
                const double wq = (iq == 0 || iq + 1 == nq) ? 0.5 : 1.0;
                row += wq * at(iq, ip);
            }
            sum += wp * row;
        }
        return sum * dq * dp;
    }
};

/// Evaluate the Wigner density of a Gaussian state at one phase-space point.
inline double wigner_density(const ConditionalCovariance& cov, double q, double p) {
    const double det = cov.det();
    if (!(det > 0.0)) throw numeric_error("wigner_density: singular covariance");
    const double quad =
        (cov.v_pp * q * q - 2.0 * cov.c_qp * q * p + cov.v_qq * p * p) / det;
    return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
}

/// Sample W on a centered square grid spanning half_width_sigmas * sqrt(v_max)
/// in each direction. The span must cover at least 4 sigma of the largest
/// eigenvalue; the default 5.5 keeps the trapezoid normalization within 1e-6
/// even for isotropic states.
inline WignerGrid wigner(const ConditionalCovariance& cov, std::size_t points = 257,
                         double half_width_sigmas = 5.5) {
    if (points < 2) throw std::invalid_argument("wigner: need at least 2 grid points");
    if (!(half_width_sigmas >= 4.0))
        throw std::invalid_argument("wigner: grid must cover at least 4 sigma");
    const double det = cov.det();
    if (!(det > 0.0)) throw numeric_error("wigner: singular covariance");

    WignerGrid grid;
    const double half = half_width_sigmas * std::sqrt(cov.v_max);
    grid.q_axis.resize(points);
    grid.p_axis.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double x = -half + 2.0 * half * static_cast<double>(i) / (points - 1);
        grid.q_axis[i] = x;
        grid.p_axis[i] = x;
    }
    grid.density.resize(points * points);
    for (std::size_t ip = 0; ip < points; ++ip)
        for (std::size_t iq = 0; iq < points; ++iq)
            grid.density[ip * points + iq] = wigner_density(cov, grid.q_axis[iq], grid.p_axis[ip]);

    grid.contour = {std::sqrt(2.0 * cov.v_max), std::sqrt(2.0 * cov.v_min), cov.theta};
    return grid;
}

}  // namespace condosc
