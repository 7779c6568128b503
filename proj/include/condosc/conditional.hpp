#pragma once

// Closed-form conditional state of the monitored oscillator: steady-state
// covariances, optimal quadrature, purity, the RWA baseline, and the region
// boundary curves.

#include <cmath>
#include <numbers>
#include <vector>

#include "condosc/errors.hpp"
#include "condosc/params.hpp"

namespace condosc {

/// Result of the eigen-decomposition of the 2x2 covariance matrix.
struct QuadratureDecomposition {
    double theta = 0.0;  // angle of the minimal-variance quadrature, (-pi/2, pi/2]
    double v_min = 0.0;
    double v_max = 0.0;
};

/// Minimal/maximal quadrature variances and the optimal angle, measured from
/// the q axis. Satisfies tan(2 theta) = 2 c_qp / (v_qq - v_pp) on the
/// minimizing branch; degenerate (isotropic) covariances report theta = 0.
inline QuadratureDecomposition optimal_quadrature(double v_qq, double v_pp, double c_qp) {
    QuadratureDecomposition out;
    const double mean = 0.5 * (v_qq + v_pp);
    const double half_diff = 0.5 * (v_qq - v_pp);
    const double radius = std::hypot(half_diff, c_qp);
    out.v_min = mean - radius;
    out.v_max = mean + radius;
    if (radius <= 1e-15 * mean) {
        out.theta = 0.0;
        return out;
    }
    // variance along theta is mean + radius*cos(2 theta - phi); minimum at
    // 2 theta = phi + pi, folded into (-pi/2, pi/2]
    double theta = 0.5 * std::atan2(c_qp, half_diff) + 0.5 * std::numbers::pi;
    if (theta > 0.5 * std::numbers::pi) theta -= std::numbers::pi;
    out.theta = theta;
    return out;
}

/// The 2x2 symmetric conditional covariance (zero-point = 1) plus the derived
/// scalars. The off-diagonal of the matrix is exactly c_qp.
struct ConditionalCovariance {
    double v_qq = 0.0;
    double v_pp = 0.0;
    double c_qp = 0.0;

    double v_min = 0.0;
    double v_max = 0.0;
    double theta = 0.0;
    double purity = 0.0;

    double det() const { return v_qq * v_pp - c_qp * c_qp; }
};

inline double purity_of(double v_qq, double v_pp, double c_qp) {
    return 1.0 / std::sqrt(v_qq * v_pp - c_qp * c_qp);
}

/// Steady-state conditional covariance of the causal optimal filters:
///   v_qq = (G' - G) / (4 eta C G)
///   v_pp = [G'(G^2 - G G' + W'^2) - G W^2] / (4 eta C G W^2)
///   c_qp = (G^2 - G G' + W'^2 - W^2) / (4 eta C G W)
/// evaluated through the equivalent cancellation-free forms
///   c_qp = (G' - G)^2 / (8 eta C G W),    v_pp = v_qq + c_qp G'/W.
/// Cooperativities below 1e-12 short-circuit to the thermal covariance
/// (removable 0/0 singularity).
inline ConditionalCovariance conditional_covariance(const DerivedQuantities& d) {
    ConditionalCovariance cov;
    if (d.c < 1e-12) {
        const double v = 2.0 * d.n_th + 1.0;
        cov.v_qq = cov.v_pp = cov.v_min = cov.v_max = v;
        cov.c_qp = 0.0;
        cov.theta = 0.0;
        cov.purity = 1.0 / v;
        return cov;
    }

    // dimensionless, all rates in units of gamma
    const double q = d.q_factor;
    const double dg = d.gamma_prime_delta / d.gamma;   // G'/G - 1
    const double gp = 1.0 + dg;                        // G'/G
    const double k = 4.0 * d.eta * d.c;

    cov.v_qq = dg / k;
    cov.c_qp = dg * dg / (2.0 * k * q);
    cov.v_pp = cov.v_qq + cov.c_qp * gp / q;

    const auto quad = optimal_quadrature(cov.v_qq, cov.v_pp, cov.c_qp);
    cov.v_min = quad.v_min;
    cov.v_max = quad.v_max;
    cov.theta = quad.theta;
    cov.purity = purity_of(cov.v_qq, cov.v_pp, cov.c_qp);

    // Bug detector: the determinant has the independent single-expression form
    // dg^2 (2 q^2 + delta) / (2 q^2 k^2); disagreement means the assembled
    // entries are inconsistent. (det itself may drop below 1 at low Q and low
    // occupancy -- a validity limit of the white-noise model, not a defect.)
    const double delta = d.omega_prime_sq_delta / (d.gamma * d.gamma);
    const double det_closed = dg * dg * (2.0 * q * q + delta) / (2.0 * q * q * k * k);
    if (std::abs(cov.det() - det_closed) > 1e-8 * det_closed)
        throw numeric_error("conditional_covariance: covariance entries are inconsistent");
    return cov;
}

/// Closed-form estimate -arctan(W/G')/2 of the optimal angle. It matches the
/// eigen angle of conditional_covariance in both the C -> 0 and C -> inf
/// limits but differs by a factor of two inside the arctangent in between
/// (the exact eigen angle obeys tan(2 theta) = -2 W/G'); kept for comparison.
inline double quadrature_angle_closed_form(const DerivedQuantities& d) {
    return -0.5 * std::atan(d.omega / d.gamma_prime);
}

/// Conditional variance under the rotating wave approximation,
/// (sqrt(1 + 16 eta C n_tot) - 1) / (4 eta C); the RWA conditional state is
/// isotropic (V, V, 0).
inline double rwa_baseline(const DerivedQuantities& d) {
    const double x = 16.0 * d.eta * d.c * d.n_tot;
    if (x < 1e-280) return 2.0 * d.n_th + 1.0;
    return x / ((std::sqrt(1.0 + x) + 1.0) * 4.0 * d.eta * d.c);
}

/// Boundary cooperativities between the five measurement regimes at one n_th.
/// I-III and II-V are the same exact curve (RWA validity, eta C n_tot = Q^2)
/// entering from the two sides; III-IV and the squeezing threshold are the
/// fixed points of C = n_tot^(1/3) Q^(2/3) * scale with scale 1/eta and
/// 1/(4 eta); IV-V is C = n_th.
struct BoundaryPoint {
    double n_th = 0.0;
    double c_i_iii = 0.0;
    double c_iii_iv = 0.0;
    double c_iv_v = 0.0;
    double c_ii_v = 0.0;
    double c_squeezing = 0.0;
};

inline double rwa_boundary_cooperativity(double q_factor, double n_th, double eta) {
    // eta C (n_th + C + 1/2) = Q^2, the positive quadratic root
    const double b = n_th + 0.5;
    const double q2 = q_factor * q_factor;
    return 2.0 * q2 / (eta * (b + std::sqrt(b * b + 4.0 * q2 / eta)));
}

inline std::vector<BoundaryPoint> boundary_curves(double q_factor, double eta,
                                                  const std::vector<double>& n_th_grid) {
    if (!(q_factor > 0.0) || !(eta > 0.0))
        throw std::invalid_argument("boundary_curves: Q and eta must be > 0");
    std::vector<BoundaryPoint> out;
    out.reserve(n_th_grid.size());
    for (double n_th : n_th_grid) {
        if (!(n_th >= 0.0))
            throw std::invalid_argument("boundary_curves: n_th must be >= 0");
        BoundaryPoint b;
        b.n_th = n_th;
        b.c_i_iii = b.c_ii_v = rwa_boundary_cooperativity(q_factor, n_th, eta);
        b.c_iii_iv = cooperativity_fixed_point(q_factor, n_th, eta, 1.0 / eta);
        b.c_iv_v = n_th;
        b.c_squeezing = squeezing_threshold(q_factor, n_th, eta);
        out.push_back(b);
    }
    return out;
}

}  // namespace condosc
