#pragma once

// Two-sided spectra of the monitored oscillator. PSD convention:
// S_AB(w) = int e^{+iwt} <A(t)B(0)> dt, all integrals carry dw/2pi.
//
// With the cavity adiabatically eliminated (unresolved sideband) the record is
// Y = 2 sqrt(eta Gamma C) q + unit shot noise, the force PSD on the momentum
// is 4 Gamma n_tot (thermal 2 Gamma (2 n_th + 1) plus backaction 4 Gamma C),
// and q = Omega chi(w) F with chi = 1/(Omega^2 - w^2 - i Gamma w).

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "condosc/fft.hpp"
#include "condosc/params.hpp"
#include "condosc/rational.hpp"

namespace condosc {

/// Denominator polynomial of the bare susceptibility, W^2 - w^2 - i G w.
inline Polynomial susceptibility_denominator(double omega_sq, double gamma) {
    return Polynomial{Complex(omega_sq, 0.0), Complex(0.0, -gamma), Complex(-1.0, 0.0)};
}

/// |W^2 - w^2 - i G w|^2 as a real polynomial in w.
inline Polynomial susceptibility_abs_sq_denominator(double omega_sq, double gamma) {
    const auto d = susceptibility_denominator(omega_sq, gamma);
    return d * d.conj_coefficients();
}

/// S_qq(w) = 4 G W^2 n_tot |chi(w)|^2.
inline RationalFunction mechanical_spectrum(const DerivedQuantities& d) {
    const double w2 = d.omega * d.omega;
    return {Polynomial{Complex(4.0 * d.gamma * w2 * d.n_tot, 0.0)},
            susceptibility_abs_sq_denominator(w2, d.gamma)};
}

/// S_YY(w) = 1 + 16 eta G^2 C W^2 n_tot |chi(w)|^2; equals |M_Y|^2 with
/// M_Y = (W'^2 - w^2 - i G' w)/(W^2 - w^2 - i G w).
inline RationalFunction measured_spectrum(const DerivedQuantities& d) {
    const double w2 = d.omega * d.omega;
    const Polynomial den = susceptibility_abs_sq_denominator(w2, d.gamma);
    const Polynomial num =
        den + Polynomial{Complex(16.0 * d.eta * d.gamma * d.gamma * d.c * w2 * d.n_tot, 0.0)};
    return {num, den};
}

/// The causal spectral factor of the clean measured spectrum in closed form.
inline RationalFunction measured_spectrum_factor(const DerivedQuantities& d) {
    return {susceptibility_denominator(d.omega_prime * d.omega_prime, d.gamma_prime),
            susceptibility_denominator(d.omega * d.omega, d.gamma)};
}

/// S_qY(w) = 2 sqrt(eta G C) S_qq(w); the shot noise is uncorrelated with q.
inline RationalFunction position_cross_spectrum(const DerivedQuantities& d) {
    const double g = 2.0 * std::sqrt(d.eta * d.gamma * d.c);
    RationalFunction s = mechanical_spectrum(d);
    s.num = Complex(g, 0.0) * s.num;
    return s;
}

/// S_pY(w) = -i (w/W) S_qY(w), from p = -i w q / W.
inline RationalFunction momentum_cross_spectrum(const DerivedQuantities& d) {
    RationalFunction s = position_cross_spectrum(d);
    s.num = s.num * Polynomial{Complex(0.0, 0.0), Complex(0.0, -1.0 / d.omega)};
    return s;
}

/// S_pp(w) = (w/W)^2 S_qq(w).
inline RationalFunction momentum_spectrum(const DerivedQuantities& d) {
    RationalFunction s = mechanical_spectrum(d);
    s.num = s.num * Polynomial{Complex(0.0), Complex(0.0), Complex(1.0 / (d.omega * d.omega))};
    return s;
}

/// S_qp(w) = i (w/W) S_qq(w), purely imaginary and odd.
inline RationalFunction position_momentum_cross_spectrum(const DerivedQuantities& d) {
    RationalFunction s = mechanical_spectrum(d);
    s.num = s.num * Polynomial{Complex(0.0), Complex(0.0, 1.0 / d.omega)};
    return s;
}

/// Uniformly sampled two-sided spectrum. omega(k) = omega0 + k domega; the
/// centered layout places w = 0 at index n/2 so tables map directly onto FFT
/// bin order.
struct SpectrumTable {
    double omega0 = 0.0;
    double domega = 0.0;
    std::vector<Complex> values;
    bool two_sided = true;

    std::size_t size() const { return values.size(); }
    double omega(std::size_t k) const { return omega0 + static_cast<double>(k) * domega; }
    double half_span() const { return -omega0; }

    static SpectrumTable centered(double half_span, std::size_t n) {
        if (!fft::is_power_of_two(n))
            throw std::invalid_argument("SpectrumTable: size must be a power of two");
        if (!(half_span > 0.0))
            throw std::invalid_argument("SpectrumTable: half_span must be > 0");
        SpectrumTable t;
        t.domega = 2.0 * half_span / static_cast<double>(n);
        t.omega0 = -half_span;
        t.values.assign(n, Complex(0.0));
        return t;
    }

    template <typename F>
    void fill(F&& f) {
        for (std::size_t k = 0; k < values.size(); ++k) values[k] = f(omega(k));
    }
};

inline SpectrumTable tabulate(const RationalFunction& f, double half_span, std::size_t n) {
    SpectrumTable t = SpectrumTable::centered(half_span, n);
    t.fill([&](double w) { return f(w); });
    return t;
}

/// Additive photocurrent noise PSD, dimensionless relative to unit shot noise.
/// Tabulation uses per-bin averages: a midpoint sample at the DC bin would
/// overweight a 1/w spike by orders of magnitude and make every result depend
/// on the grid.
struct ExcessNoiseModel {
    std::function<double(double)> psd;                          // s(w), even, >= 0
    std::function<double(double, double)> bin_average;          // mean over [lo, hi], 0 <= lo < hi

    double averaged_at(double omega_center, double domega) const {
        const double lo = omega_center - 0.5 * domega;
        const double hi = omega_center + 0.5 * domega;
        if (lo >= 0.0) return bin_average(lo, hi);
        if (hi <= 0.0) return bin_average(-hi, -lo);
        // bin straddling w = 0: fold both halves onto the positive axis
        const double a = -lo, b = hi;
        double mass = 0.0;
        if (a > 0.0) mass += bin_average(0.0, a) * a;
        if (b > 0.0) mass += bin_average(0.0, b) * b;
        return mass / (a + b);
    }

    /// Pink model s(w) = amplitude * W / (|w| + offset); the offset keeps the
    /// DC value finite. Bin averages are analytic.
    static ExcessNoiseModel pink(double omega_mech, double amplitude = 0.1,
                                 double offset_rad_s = 0.1) {
        ExcessNoiseModel m;
        const double a = amplitude * omega_mech, off = offset_rad_s;
        m.psd = [a, off](double w) { return a / (std::abs(w) + off); };
        m.bin_average = [a, off](double lo, double hi) {
            return a * std::log((hi + off) / (lo + off)) / (hi - lo);
        };
        return m;
    }

    /// Generic function handle; bin averages by 4-point Gauss-Legendre.
    static ExcessNoiseModel from_function(std::function<double(double)> psd) {
        ExcessNoiseModel m;
        m.psd = psd;
        m.bin_average = [psd](double lo, double hi) {
            static const double xs[4] = {-0.8611363115940526, -0.3399810435848563,
                                         0.3399810435848563, 0.8611363115940526};
            static const double ws[4] = {0.34785484513745385, 0.6521451548625461,
                                         0.6521451548625461, 0.34785484513745385};
            const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            double acc = 0.0;
            for (int i = 0; i < 4; ++i) acc += ws[i] * psd(mid + half * xs[i]);
            return 0.5 * acc;
        };
        return m;
    }

    /// Piecewise-linear table on |w|; values outside the table clamp to the
    /// end points.
    static ExcessNoiseModel from_table(std::vector<double> omegas, std::vector<double> values) {
        if (omegas.size() != values.size() || omegas.size() < 2)
            throw std::invalid_argument("ExcessNoiseModel: need >= 2 (omega, value) pairs");
        for (std::size_t i = 0; i + 1 < omegas.size(); ++i)
            if (!(omegas[i] < omegas[i + 1]))
                throw std::invalid_argument("ExcessNoiseModel: omegas must be increasing");
        for (double v : values)
            if (!(v >= 0.0)) throw std::invalid_argument("ExcessNoiseModel: PSD must be >= 0");
        auto interp = [omegas = std::move(omegas), values = std::move(values)](double w) {
            const double x = std::abs(w);
            if (x <= omegas.front()) return values.front();
            if (x >= omegas.back()) return values.back();
            const auto it = std::upper_bound(omegas.begin(), omegas.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - omegas.begin());
            const double t = (x - omegas[i - 1]) / (omegas[i] - omegas[i - 1]);
            return values[i - 1] + t * (values[i] - values[i - 1]);
        };
        return from_function(std::move(interp));
    }
};

/// S_YY table with excess noise folded in, bin-averaged.
inline SpectrumTable measured_spectrum_table(const DerivedQuantities& d,
                                             const ExcessNoiseModel* excess, double half_span,
                                             std::size_t n) {
    const auto s_yy = measured_spectrum(d);
    SpectrumTable t = SpectrumTable::centered(half_span, n);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double w = t.omega(k);
        double v = s_yy(w).real();
        if (excess) v += excess->averaged_at(w, t.domega);
        t.values[k] = Complex(v, 0.0);
    }
    return t;
}

}  // namespace condosc
