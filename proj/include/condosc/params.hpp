#pragma once

// Physical inputs of a continuously monitored damped oscillator, the derived
// filter quantities, and the measurement-regime classifier.
//
// Conventions: zero-point variances are normalized to one ([q,p] = 2i), all
// rates are angular (rad/s), spectra are two-sided with integrals dw/2pi.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "condosc/errors.hpp"

namespace condosc {

/// CODATA 2018 values, fixed.
struct PhysicalConstants {
    static constexpr double k_boltzmann = 1.380649e-23;  // J/K
    static constexpr double hbar = 1.054571817e-34;      // J*s
};

/// Bath occupancy k_B T / (hbar omega). The linear form assumes n_th >> 1;
/// `approximation_strained` is set when the result drops below 10.
struct Occupancy {
    double value = 0.0;
    bool approximation_strained = false;
};

inline Occupancy thermal_occupancy(double omega, double temperature_k) {
    if (!(omega > 0.0))
        throw std::invalid_argument("thermal_occupancy: omega must be > 0");
    if (!(temperature_k >= 0.0))
        throw std::invalid_argument("thermal_occupancy: temperature must be >= 0");
    const double n = PhysicalConstants::k_boltzmann * temperature_k /
                     (PhysicalConstants::hbar * omega);
    return {n, n < 10.0};
}

/// Optomechanical cooperativity 4 g^2 / (Gamma kappa).
inline double cooperativity(double g, double gamma, double kappa) {
    if (!(g > 0.0) || !(gamma > 0.0) || !(kappa > 0.0))
        throw std::invalid_argument("cooperativity: all inputs must be > 0");
    return 4.0 * g * g / (gamma * kappa);
}

/// Cavity-mediated coupling: boosted rate g and optical decay kappa, rad/s.
struct CavityCoupling {
    double g = 0.0;
    double kappa = 0.0;
};

/// The five physical inputs defining one system. The bath is given either as
/// an occupancy or a temperature; the coupling either as a cooperativity or
/// as (g, kappa). Exactly one of each pair must be set.
struct OscillatorParams {
    double omega = 0.0;  // mechanical resonance, rad/s
    double gamma = 0.0;  // mechanical energy decay rate, rad/s
    double eta = 1.0;    // detection efficiency, (0, 1]

    std::optional<double> bath_occupancy;
    std::optional<double> bath_temperature_k;

    std::optional<double> coop;
    std::optional<CavityCoupling> cavity;

    // Unresolved-sideband guard: require kappa >= sideband_guard * omega when
    // the coupling is given as (g, kappa).
    double sideband_guard = 10.0;

    void validate() const {
        if (!(omega > 0.0))
            throw std::invalid_argument(
                "OscillatorParams: omega must be > 0 (the free-mass limit is not supported)");
        if (!(gamma > 0.0))
            throw std::invalid_argument("OscillatorParams: gamma must be > 0");
        if (!(eta > 0.0) || eta > 1.0)
            throw std::invalid_argument("OscillatorParams: eta must lie in (0, 1]");
        if (bath_occupancy.has_value() == bath_temperature_k.has_value())
            throw std::invalid_argument(
                "OscillatorParams: exactly one of bath occupancy / temperature required");
        if (bath_occupancy && *bath_occupancy < 0.0)
            throw std::invalid_argument("OscillatorParams: n_th must be >= 0");
        if (bath_temperature_k && *bath_temperature_k < 0.0)
            throw std::invalid_argument("OscillatorParams: temperature must be >= 0");
        if (coop.has_value() == cavity.has_value())
            throw std::invalid_argument(
                "OscillatorParams: exactly one of cooperativity / (g, kappa) required");
        if (coop && *coop < 0.0)
            throw std::invalid_argument("OscillatorParams: cooperativity must be >= 0");
        if (cavity) {
            if (!(cavity->g > 0.0) || !(cavity->kappa > 0.0))
                throw std::invalid_argument("OscillatorParams: g and kappa must be > 0");
            if (cavity->kappa < sideband_guard * omega)
                throw std::invalid_argument(
                    "OscillatorParams: kappa < " + std::to_string(sideband_guard) +
                    "*omega violates the unresolved-sideband assumption");
        }
    }

    double occupancy() const {
        return bath_occupancy ? *bath_occupancy
                              : thermal_occupancy(omega, *bath_temperature_k).value;
    }

    double cooperativity_value() const {
        return coop ? *coop : cooperativity(cavity->g, gamma, cavity->kappa);
    }
};

/// Everything the filters and boundaries need, computed once from the inputs.
///
/// omega_prime_sq_delta and gamma_prime_delta are the cancellation-free forms
/// of (omega_prime^2 - omega^2) and (gamma_prime - gamma); the naive
/// differences lose all precision for small C.
struct DerivedQuantities {
    // base inputs, echoed for downstream use
    double omega = 0.0;
    double gamma = 0.0;
    double eta = 1.0;

    double c = 0.0;         // cooperativity
    double q_factor = 0.0;  // omega / gamma
    double n_th = 0.0;
    double n_tot = 0.0;     // n_th + C + 1/2
    double mu = 0.0;        // measurement speed C*gamma, rad/s
    double gamma_th = 0.0;  // thermalisation rate n_th*gamma, rad/s

    double omega_prime = 0.0;  // modified resonance, rad/s
    double gamma_prime = 0.0;  // modified decay, rad/s
    double omega_prime_sq_delta = 0.0;  // omega_prime^2 - omega^2
    double gamma_prime_delta = 0.0;     // gamma_prime - gamma

    double coef_a = 0.0;  // filter gain A
    double coef_b = 0.0;  // filter coefficient B, s
};

/// Populate DerivedQuantities from validated params.
///
/// omega_prime^4 = 16 eta Gamma^2 C n_tot omega^2 + omega^4 and
/// gamma_prime^2 = gamma^2 + 2 (omega_prime^2 - omega^2) are evaluated via
/// sqrt1pm1-style forms so both stay accurate down to C ~ 1e-300.
inline DerivedQuantities derive(const OscillatorParams& p) {
    p.validate();

    DerivedQuantities d;
    d.omega = p.omega;
    d.gamma = p.gamma;
    d.eta = p.eta;
    d.c = p.cooperativity_value();
    if (d.c < 0.0) throw std::invalid_argument("derive: cooperativity must be >= 0");
    d.q_factor = p.omega / p.gamma;
    d.n_th = p.occupancy();
    d.n_tot = d.n_th + d.c + 0.5;
    d.mu = d.c * p.gamma;
    d.gamma_th = d.n_th * p.gamma;

    // u = 16 eta C n_tot / Q^2, so omega_prime^2 = omega^2 sqrt(1+u)
    const double u = 16.0 * d.eta * d.c * d.n_tot / (d.q_factor * d.q_factor);
    const double su = std::sqrt(1.0 + u);
    d.omega_prime_sq_delta = p.omega * p.omega * (u / (su + 1.0));
    d.omega_prime = p.omega * std::sqrt(su);

    const double w = 2.0 * d.omega_prime_sq_delta / (p.gamma * p.gamma);
    const double sw = std::sqrt(1.0 + w);
    d.gamma_prime_delta = p.gamma * (w / (sw + 1.0));
    d.gamma_prime = p.gamma * sw;

    const double op2 = d.omega_prime * d.omega_prime;
    d.coef_a = 8.0 * std::sqrt(d.eta * p.gamma * p.gamma * p.gamma * d.c) * d.n_tot *
               p.omega * p.omega / (p.omega * p.omega + op2);
    // (gamma + gamma') / (omega'^2 - omega^2 + gamma^2 + gamma gamma')
    // collapses to 2/(gamma + gamma') through the gamma' definition.
    d.coef_b = 2.0 / (p.gamma + d.gamma_prime);
    return d;
}

/// Smallest cooperativity C solving C = (n_th + C + 1/2)^(1/3) Q^(2/3) / (4 eta),
/// i.e. the quantum-squeezing threshold, found by bisection (`scale` replaces
/// the 1/(4 eta) prefactor for the other region boundaries).
inline double cooperativity_fixed_point(double q_factor, double n_th, double eta,
                                        double scale) {
    if (!(q_factor > 0.0) || !(n_th >= 0.0) || !(eta > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("cooperativity_fixed_point: inputs must be positive");
    const auto excess = [&](double c) {
        return c - scale * std::cbrt(n_th + c + 0.5) * std::cbrt(q_factor * q_factor);
    };
    double lo = 0.0, hi = 1e18;
    if (!(excess(hi) > 0.0))
        throw numeric_error("cooperativity_fixed_point: no root in [0, 1e18]");
    for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double squeezing_threshold(double q_factor, double n_th, double eta) {
    return cooperativity_fixed_point(q_factor, n_th, eta, 1.0 / (4.0 * eta));
}

enum class Regime {
    thermal_rwa,             // I
    ground_rwa,              // II
    classical_squeezed,      // III
    impure_quantum_squeezed, // IV
    pure_quantum_squeezed,   // V
};

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::thermal_rwa: return "I_thermal_rwa";
        case Regime::ground_rwa: return "II_ground_rwa";
        case Regime::classical_squeezed: return "III_classical_squeezed";
        case Regime::impure_quantum_squeezed: return "IV_impure_quantum_squeezed";
        case Regime::pure_quantum_squeezed: return "V_pure_quantum_squeezed";
    }
    return "?";
}

struct RegimeLabel {
    Regime region = Regime::thermal_rwa;
    bool rwa_valid = false;
    bool qco = false;                   // quantum coherent oscillation: Q > n_th
    bool backaction_dominated = false;  // C > n_th
    const char* name() const { return regime_name(region); }
};

/// Decision tree over the derived quantities and the optimal variance v_min.
/// The region boundaries are scaling relations; the constants used here are:
/// RWA validity eta C n_tot < Q^2 (prefactor one), ground threshold
/// v_min < threshold_ground (default 1.5), quantum squeezing v_min <= 1.
inline RegimeLabel classify(const DerivedQuantities& d, double v_min,
                            double threshold_ground = 1.5) {
    RegimeLabel label;
    label.rwa_valid = d.eta * d.c * d.n_tot < d.q_factor * d.q_factor;
    label.qco = d.q_factor > d.n_th;
    label.backaction_dominated = d.c > d.n_th;
    if (label.rwa_valid) {
        label.region = v_min >= threshold_ground ? Regime::thermal_rwa : Regime::ground_rwa;
    } else if (v_min > 1.0) {
        label.region = Regime::classical_squeezed;
    } else {
        label.region = d.c < d.n_th ? Regime::impure_quantum_squeezed
                                    : Regime::pure_quantum_squeezed;
    }
    return label;
}

}  // namespace condosc
