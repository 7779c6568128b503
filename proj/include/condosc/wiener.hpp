#pragma once

// Causal Wiener filter synthesis and spectrum-integral (co)variances.
//
// The optimal causal filter is H = (1/M)[S_xY / M*]_+ where M is the causal
// spectral factor of S_YY (S_YY = M M*, poles and zeros in the lower
// half-plane). Rational spectra go through exact partial fractions; tabulated
// spectra (needed for excess classical noise) go through the cepstral
// (log-spectrum) factorization and FFT-based causal projection.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "condosc/errors.hpp"
#include "condosc/fft.hpp"
#include "condosc/params.hpp"
#include "condosc/rational.hpp"
#include "condosc/spectra.hpp"

namespace condosc {

struct ImpulseResponse {
    double dt = 0.0;
    std::vector<double> h;  // h[k] = h(k dt), t >= 0; h(t < 0) == 0 by construction
};

/// A causal filter in rational or tabulated form, with its sampled impulse
/// response.
struct FilterResponse {
    std::optional<RationalFunction> rational;
    std::optional<SpectrumTable> table;
    ImpulseResponse impulse;

    Complex eval(double w) const {
        if (rational) return (*rational)(w);
        if (!table || table->size() < 2) throw std::invalid_argument("FilterResponse: empty");
        // linear interpolation between table nodes
        const double x = (w - table->omega0) / table->domega;
        if (x <= 0.0) return table->values.front();
        if (x >= static_cast<double>(table->size() - 1)) return table->values.back();
        const std::size_t k = static_cast<std::size_t>(x);
        const double t = x - static_cast<double>(k);
        return table->values[k] * (1.0 - t) + table->values[k + 1] * t;
    }
};

// -------------------------------------------------------------------------
// closed-form filters
// -------------------------------------------------------------------------

namespace detail {

// e^{-G' t/2} sin(nu t)/nu and its time derivative, nu = sqrt(W'^2 - G'^2/4)
// (complex-safe for the overdamped branch).
inline void susceptibility_impulse(const DerivedQuantities& d, double t, double& chi,
                                   double& dchi) {
    const Complex nu = std::sqrt(Complex(d.omega_prime * d.omega_prime -
                                         0.25 * d.gamma_prime * d.gamma_prime));
    const double damp = std::exp(-0.5 * d.gamma_prime * t);
    const Complex s = std::abs(nu) > 0.0 ? std::sin(nu * t) / nu : Complex(t, 0.0);
    const Complex c = std::cos(nu * t);
    chi = damp * s.real();
    dchi = damp * (c - 0.5 * d.gamma_prime * s).real();
}

}  // namespace detail

/// h_q(t) for t >= 0 of the position filter H = A (1 - i B w) chi'(w).
inline double position_impulse_at(const DerivedQuantities& d, double t) {
    if (t < 0.0) return 0.0;
    double chi, dchi;
    detail::susceptibility_impulse(d, t, chi, dchi);
    return d.coef_a * (chi + d.coef_b * dchi);
}

/// h_p(t) for t >= 0 of the momentum filter
/// H_p = -(A B / W) (W^2 + i w (W'^2 - W^2)/(G' + G)) chi'(w).
inline double momentum_impulse_at(const DerivedQuantities& d, double t) {
    if (t < 0.0) return 0.0;
    double chi, dchi;
    detail::susceptibility_impulse(d, t, chi, dchi);
    const double slope = d.omega_prime_sq_delta / (d.gamma_prime + d.gamma);
    return -(d.coef_a * d.coef_b / d.omega) * (d.omega * d.omega * chi - slope * dchi);
}

/// Sample a closed-form impulse response densely enough for direct use.
inline ImpulseResponse sample_impulse(const DerivedQuantities& d,
                                      double (*h_at)(const DerivedQuantities&, double),
                                      double dt = 0.0) {
    ImpulseResponse ir;
    ir.dt = dt > 0.0 ? dt
                     : std::min(2.0 * std::numbers::pi / d.omega_prime, 1.0 / d.gamma_prime) / 40.0;
    const double t_max = 2.0 * std::log(1e6) / d.gamma_prime;
    const std::size_t n = static_cast<std::size_t>(t_max / ir.dt) + 1;
    ir.h.resize(n);
    for (std::size_t k = 0; k < n; ++k) ir.h[k] = h_at(d, static_cast<double>(k) * ir.dt);
    return ir;
}

/// Eq.-level position filter, rational form plus sampled impulse response.
inline FilterResponse position_filter(const DerivedQuantities& d) {
    if (!(d.c > 0.0)) throw std::invalid_argument("position_filter: requires C > 0");
    if (!(d.gamma_prime > 0.0)) throw numeric_error("position_filter: invalid gamma_prime");
    FilterResponse f;
    f.rational = RationalFunction{
        Polynomial{Complex(d.coef_a, 0.0), Complex(0.0, -d.coef_a * d.coef_b)},
        susceptibility_denominator(d.omega_prime * d.omega_prime, d.gamma_prime)};
    f.impulse = sample_impulse(d, &position_impulse_at);
    return f;
}

inline FilterResponse momentum_filter(const DerivedQuantities& d) {
    if (!(d.c > 0.0)) throw std::invalid_argument("momentum_filter: requires C > 0");
    if (!(d.gamma_prime > 0.0)) throw numeric_error("momentum_filter: invalid gamma_prime");
    const double ab = d.coef_a * d.coef_b;
    const double slope = d.omega_prime_sq_delta / (d.gamma_prime + d.gamma);
    FilterResponse f;
    f.rational = RationalFunction{
        Polynomial{Complex(-ab * d.omega, 0.0), Complex(0.0, -ab * slope / d.omega)},
        susceptibility_denominator(d.omega_prime * d.omega_prime, d.gamma_prime)};
    f.impulse = sample_impulse(d, &momentum_impulse_at);
    return f;
}

// -------------------------------------------------------------------------
// spectral factorization
// -------------------------------------------------------------------------

/// Rational path: factor numerator and denominator roots, keep the lower
/// half-plane ones, and normalize so |M|^2 = S on the real axis.
inline RationalFunction spectral_factor(const RationalFunction& s) {
    const auto num_roots = roots(s.num);
    const auto den_roots = roots(s.den);
    const double lead_ratio = (s.num.coef.back() / s.den.coef.back()).real();
    if (!(lead_ratio > 0.0))
        throw numeric_error("spectral_factor: spectrum is not positive at large w");

    auto half = [](const std::vector<Complex>& rs, const char* what) {
        Polynomial p{Complex(1.0)};
        double scale = 1e-300;
        for (const auto& r : rs) scale = std::max(scale, std::abs(r));
        std::size_t kept = 0;
        for (const auto& r : rs) {
            if (std::abs(r.imag()) < 1e-9 * scale) throw numeric_error(what);
            if (r.imag() < 0.0) {
                p = p * Polynomial{-r, Complex(1.0)};
                ++kept;
            }
        }
        if (2 * kept != rs.size())
            throw numeric_error("spectral_factor: roots do not split evenly across the axis");
        return p;
    };

    RationalFunction m;
    m.num = Complex(std::sqrt(lead_ratio), 0.0) * half(num_roots, "spectral_factor: real root");
    m.den = half(den_roots, "spectral_factor: real pole");
    return m;
}

/// Tabulated path, cepstral (log-spectrum) method: transform log S to the
/// time domain, zero the anti-causal half (halving the zero-lag and Nyquist
/// bins), transform back and exponentiate. |M|^2 = S holds at the grid nodes
/// by construction; the phase is the minimum-phase one.
inline SpectrumTable spectral_factor(const SpectrumTable& s) {
    const std::size_t n = s.size();
    if (!fft::is_power_of_two(n))
        throw std::invalid_argument("spectral_factor: table size must be a power of two");
    std::vector<Complex> work(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double v = s.values[k].real();
        if (!(v > 0.0)) throw numeric_error("spectral_factor: spectrum must be > 0 everywhere");
        // reorder centered -> FFT bin order (w = 0 at index 0)
        work[(k + n / 2) % n] = Complex(0.5 * std::log(v), 0.0);
    }
    // frequency -> time uses the e^{-i} kernel under our e^{+iwt} convention
    fft::transform(work, -1);
    const double norm = 1.0 / static_cast<double>(n);
    for (auto& v : work) v *= norm;
    // causal fold
    for (std::size_t t = 1; t < n / 2; ++t) work[t] *= 2.0;
    for (std::size_t t = n / 2 + 1; t < n; ++t) work[t] = Complex(0.0);
    fft::transform(work, +1);

    SpectrumTable m = s;
    for (std::size_t k = 0; k < n; ++k) m.values[k] = std::exp(work[(k + n / 2) % n]);
    return m;
}

/// Tabulated causal projection: inverse transform, zero t < 0 (half weight at
/// the t = 0 and wrap-around bins), forward transform.
inline SpectrumTable causal_part(const SpectrumTable& f) {
    const std::size_t n = f.size();
    if (!fft::is_power_of_two(n))
        throw std::invalid_argument("causal_part: table size must be a power of two");
    std::vector<Complex> work(n);
    for (std::size_t k = 0; k < n; ++k) work[(k + n / 2) % n] = f.values[k];
    fft::transform(work, -1);
    const double norm = 1.0 / static_cast<double>(n);
    for (auto& v : work) v *= norm;
    work[0] *= 0.5;
    work[n / 2] *= 0.5;
    for (std::size_t t = n / 2 + 1; t < n; ++t) work[t] = Complex(0.0);
    fft::transform(work, +1);
    SpectrumTable out = f;
    for (std::size_t k = 0; k < n; ++k) out.values[k] = work[(k + n / 2) % n];
    return out;
}

// -------------------------------------------------------------------------
// Wiener synthesis
// -------------------------------------------------------------------------

/// H = (1/M)[S_xY/M*]_+ for rational inputs; returns the rational filter with
/// negligible-residue pole terms pruned (the measurement poles cancel
/// analytically and reappear numerically with residues at rounding level).
inline FilterResponse wiener_from_spectra(const RationalFunction& s_xy,
                                          const RationalFunction& s_yy) {
    const RationalFunction m = spectral_factor(s_yy);
    const RationalFunction g = s_xy / m.conj_on_real_axis();
    const RationalFunction g_causal = causal_part(g);
    const RationalFunction h_raw = g_causal / m;

    PartialFractions pf = partial_fractions(h_raw);
    double max_res = 0.0;
    for (const auto& t : pf.terms) max_res = std::max(max_res, std::abs(t.residue));
    PartialFractions pruned;
    pruned.constant = pf.constant;
    for (const auto& t : pf.terms)
        if (std::abs(t.residue) > 1e-10 * max_res) pruned.terms.push_back(t);

    FilterResponse f;
    f.rational = to_rational(pruned);
    // sample the impulse response from the pole expansion
    double decay = 0.0;
    for (const auto& t : pruned.terms) decay = std::max(decay, -1.0 / t.pole.imag());
    double fastest = 0.0;
    for (const auto& t : pruned.terms) fastest = std::max(fastest, std::abs(t.pole));
    if (fastest > 0.0) {
        f.impulse.dt = std::min(2.0 * std::numbers::pi / fastest, decay) / 40.0;
        const double t_max = decay * 2.0 * std::log(1e6);
        const std::size_t nsamp = static_cast<std::size_t>(t_max / f.impulse.dt) + 1;
        f.impulse.h.resize(nsamp);
        for (std::size_t k = 0; k < nsamp; ++k)
            f.impulse.h[k] = impulse_response_at(pruned, static_cast<double>(k) * f.impulse.dt);
    }
    return f;
}

/// Tabulated synthesis for non-rational spectra (e.g. excess noise).
inline FilterResponse wiener_from_spectra(const SpectrumTable& s_xy, const SpectrumTable& s_yy) {
    if (s_xy.size() != s_yy.size() || s_xy.domega != s_yy.domega || s_xy.omega0 != s_yy.omega0)
        throw std::invalid_argument("wiener_from_spectra: tables must share the grid");
    const SpectrumTable m = spectral_factor(s_yy);
    SpectrumTable g = s_xy;
    for (std::size_t k = 0; k < g.size(); ++k) g.values[k] /= std::conj(m.values[k]);
    SpectrumTable g_causal = causal_part(g);
    FilterResponse f;
    f.table = g_causal;
    for (std::size_t k = 0; k < f.table->size(); ++k) f.table->values[k] /= m.values[k];

    // impulse response on the grid's natural time step dt = 2 pi / (n domega)
    const std::size_t n = f.table->size();
    std::vector<Complex> work(n);
    for (std::size_t k = 0; k < n; ++k) work[(k + n / 2) % n] = f.table->values[k];
    fft::transform(work, -1);
    const double span = static_cast<double>(n) * f.table->domega;  // = 2 W
    f.impulse.dt = 2.0 * std::numbers::pi / span;
    const double scale = span / (2.0 * std::numbers::pi * static_cast<double>(n));
    f.impulse.h.resize(n / 2);
    for (std::size_t t = 0; t < n / 2; ++t) f.impulse.h[t] = (work[t] * scale).real();
    return f;
}

// -------------------------------------------------------------------------
// variance integrals
// -------------------------------------------------------------------------

/// The three spectra entering an error variance, as callables of omega.
struct SpectraBundle {
    std::function<Complex(double)> s_xx;
    std::function<Complex(double)> s_xy;
    std::function<Complex(double)> s_yy;
};

inline SpectraBundle bundle(const RationalFunction& s_xx, const RationalFunction& s_xy,
                            const RationalFunction& s_yy) {
    return {[s_xx](double w) { return s_xx(w); }, [s_xy](double w) { return s_xy(w); },
            [s_yy](double w) { return s_yy(w); }};
}

namespace detail {

// adaptive Simpson with recursion on [a, b]
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

inline double integrate_segments(const std::function<double(double)>& f,
                                 const std::vector<double>& knots, double tol_abs) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i], b = knots[i + 1];
        if (!(b > a)) continue;
        const double m = 0.5 * (a + b);
        acc += adaptive_simpson(f, a, b, f(a), f(m), f(b),
                                tol_abs / static_cast<double>(knots.size()), 40);
    }
    return acc;
}

}  // namespace detail

struct VarianceOptions {
    double half_span = 0.0;        // 0: derived from breakpoints
    double rel_tol = 1e-9;
    double tail_rel_tol = 1e-8;    // accepted ratio of tail estimate to result
    int max_span_doublings = 8;
    std::vector<double> breakpoints;  // known spectral features, rad/s (>= 0)
};

/// V = int [S_xx - 2 Re(H* S_xY) + |H|^2 S_YY] dw/2pi by adaptive quadrature
/// over [0, W] (the integrand is even) plus an analytic 1/w^2 tail estimate;
/// W doubles until the tail is negligible.
inline double error_variance(const std::function<Complex(double)>& h, const SpectraBundle& s,
                             VarianceOptions opt = {}) {
    const auto integrand = [&](double w) {
        const Complex hw = h(w);
        return s.s_xx(w).real() - 2.0 * (std::conj(hw) * s.s_xy(w)).real() +
               std::norm(hw) * s.s_yy(w).real();
    };

    double w_max = opt.half_span;
    for (double b : opt.breakpoints) w_max = std::max(w_max, 2.0 * b);
    if (!(w_max > 0.0)) throw std::invalid_argument("error_variance: no integration span");

    for (int attempt = 0;; ++attempt) {
        std::vector<double> knots{0.0};
        for (double b : opt.breakpoints)
            if (b > 0.0 && b < w_max) knots.push_back(b);
        knots.push_back(w_max);
        std::sort(knots.begin(), knots.end());

        // coarse magnitude estimate to set the absolute tolerance
        double coarse = 0.0;
        for (std::size_t i = 0; i + 1 < knots.size(); ++i)
            coarse += std::abs(integrand(0.5 * (knots[i] + knots[i + 1]))) *
                      (knots[i + 1] - knots[i]);
        const double tol_abs = std::max(coarse, 1e-300) * opt.rel_tol;

        const double body =
            detail::integrate_segments(integrand, knots, tol_abs) / std::numbers::pi;

        // 1/w^2 tail: c2 = w^2 g(w) sampled at the edge
        double c2 = 0.0;
        for (double fac : {1.0, 1.5, 2.0, 3.0})
            c2 = std::max(c2, std::abs(integrand(w_max * fac)) * w_max * fac * w_max * fac);
        const double tail = c2 / (std::numbers::pi * w_max);

        if (tail <= opt.tail_rel_tol * std::abs(body) || tail == 0.0) return body + tail;
        if (attempt >= opt.max_span_doublings)
            throw numeric_error("error_variance: tail estimate does not converge");
        w_max *= 2.0;
    }
}

/// Cross-covariance variant: int Re[S_qp - H_p* S_qY - H_q S_Yp + H_q H_p* S_YY] dw/2pi.
/// S_Yx(w) = conj(S_xY(w)) for stationary real signals.
inline double error_covariance(const std::function<Complex(double)>& h_q,
                               const std::function<Complex(double)>& h_p,
                               const std::function<Complex(double)>& s_qp,
                               const std::function<Complex(double)>& s_qy,
                               const std::function<Complex(double)>& s_py,
                               const std::function<Complex(double)>& s_yy,
                               VarianceOptions opt = {}) {
    const auto integrand_full = [&](double w) {
        const Complex hq = h_q(w), hp = h_p(w);
        const Complex val = s_qp(w) - std::conj(hp) * s_qy(w) - hq * std::conj(s_py(w)) +
                            hq * std::conj(hp) * s_yy(w).real();
        return val.real();
    };
    // even part: Re S at +w and -w (the integrand is not even term by term)
    const auto integrand = [&](double w) {
        return 0.5 * (integrand_full(w) + integrand_full(-w));
    };

    double w_max = opt.half_span;
    for (double b : opt.breakpoints) w_max = std::max(w_max, 2.0 * b);
    if (!(w_max > 0.0)) throw std::invalid_argument("error_covariance: no integration span");

    for (int attempt = 0;; ++attempt) {
        std::vector<double> knots{0.0};
        for (double b : opt.breakpoints)
            if (b > 0.0 && b < w_max) knots.push_back(b);
        knots.push_back(w_max);
        std::sort(knots.begin(), knots.end());

        double coarse = 0.0;
        for (std::size_t i = 0; i + 1 < knots.size(); ++i)
            coarse += std::abs(integrand(0.5 * (knots[i] + knots[i + 1]))) *
                      (knots[i + 1] - knots[i]);
        const double tol_abs = std::max(coarse, 1e-300) * opt.rel_tol;
        const double body =
            detail::integrate_segments(integrand, knots, tol_abs) / std::numbers::pi;

        double c2 = 0.0;
        for (double fac : {1.0, 1.5, 2.0, 3.0})
            c2 = std::max(c2, std::abs(integrand(w_max * fac)) * w_max * fac * w_max * fac);
        const double tail = c2 / (std::numbers::pi * w_max);
        if (tail <= opt.tail_rel_tol * std::abs(body) || tail == 0.0) return body + tail;
        if (attempt >= opt.max_span_doublings)
            throw numeric_error("error_covariance: tail estimate does not converge");
        w_max *= 2.0;
    }
}

/// Natural integration breakpoints: the mechanical peak (width G) and the
/// filter band (width G'), which adaptive panels would otherwise miss.
inline std::vector<double> spectral_breakpoints(const DerivedQuantities& d) {
    std::vector<double> b;
    for (double f : {0.25, 0.5, 0.9, 1.0, 1.1, 2.0, 4.0}) b.push_back(f * d.omega);
    for (double k : {10.0, 1.0}) {
        b.push_back(std::max(0.0, d.omega - k * d.gamma));
        b.push_back(d.omega + k * d.gamma);
    }
    for (double f : {0.5, 1.0, 2.0, 5.0}) {
        b.push_back(f * d.omega_prime);
        b.push_back(f * d.gamma_prime);
    }
    return b;
}

}  // namespace condosc
