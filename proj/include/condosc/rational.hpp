#pragma once

// Complex polynomials and rational functions of the angular frequency, with
// root finding, partial fractions, and the causal/anti-causal split. With the
// e^{+i w t} transform convention a causal decaying signal has all poles in
// the lower half of the complex w plane.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "condosc/errors.hpp"

namespace condosc {

using Complex = std::complex<double>;

struct Polynomial {
    std::vector<Complex> coef;  // ascending powers

    Polynomial() = default;
    Polynomial(std::initializer_list<Complex> c) : coef(c) { trim(); }
    explicit Polynomial(std::vector<Complex> c) : coef(std::move(c)) { trim(); }

    void trim() {
        while (coef.size() > 1 && coef.back() == Complex(0.0)) coef.pop_back();
        if (coef.empty()) coef.push_back(Complex(0.0));
    }

    std::size_t degree() const { return coef.size() - 1; }
    bool is_zero() const { return coef.size() == 1 && coef[0] == Complex(0.0); }

    Complex operator()(Complex w) const {
        Complex acc(0.0);
        for (std::size_t i = coef.size(); i-- > 0;) acc = acc * w + coef[i];
        return acc;
    }

    Polynomial derivative() const {
        if (degree() == 0) return Polynomial{Complex(0.0)};
        std::vector<Complex> d(coef.size() - 1);
        for (std::size_t i = 1; i < coef.size(); ++i)
            d[i - 1] = coef[i] * static_cast<double>(i);
        return Polynomial(std::move(d));
    }

    /// Coefficient-wise conjugate: for real w this evaluates to conj(P(w)),
    /// mirroring roots across the real axis.
    Polynomial conj_coefficients() const {
        std::vector<Complex> c(coef.size());
        for (std::size_t i = 0; i < coef.size(); ++i) c[i] = std::conj(coef[i]);
        return Polynomial(std::move(c));
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::vector<Complex> c(a.coef.size() + b.coef.size() - 1, Complex(0.0));
        for (std::size_t i = 0; i < a.coef.size(); ++i)
            for (std::size_t j = 0; j < b.coef.size(); ++j) c[i + j] += a.coef[i] * b.coef[j];
        return Polynomial(std::move(c));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<Complex> c(std::max(a.coef.size(), b.coef.size()), Complex(0.0));
        for (std::size_t i = 0; i < a.coef.size(); ++i) c[i] += a.coef[i];
        for (std::size_t i = 0; i < b.coef.size(); ++i) c[i] += b.coef[i];
        return Polynomial(std::move(c));
    }

    friend Polynomial operator*(Complex s, const Polynomial& p) {
        std::vector<Complex> c(p.coef);
        for (auto& x : c) x *= s;
        return Polynomial(std::move(c));
    }

    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        return a + (Complex(-1.0) * b);
    }
};

/// All complex roots. Degrees one and two are closed-form; higher degrees use
/// Durand-Kerner on the root-scale-normalized monic polynomial, followed by a
/// few Newton polish steps on the original.
inline std::vector<Complex> roots(const Polynomial& p) {
    const std::size_t n = p.degree();
    if (n == 0) return {};
    if (n == 1) return {-p.coef[0] / p.coef[1]};
    if (n == 2) {
        const Complex a = p.coef[2], b = p.coef[1], c = p.coef[0];
        const Complex disc = std::sqrt(b * b - 4.0 * a * c);
        // the numerically stable pairing: avoid b ~ -disc cancellation
        const Complex qq = -0.5 * (b + (std::real(std::conj(b) * disc) >= 0.0 ? disc : -disc));
        if (qq == Complex(0.0)) return {Complex(0.0), Complex(0.0)};
        return {qq / a, c / qq};
    }

    // geometric scale of the roots, |a0 / an|^(1/n) (nonzero trailing handled
    // by factoring out w = 0 roots first)
    std::vector<Complex> mon(p.coef);
    std::vector<Complex> out;
    std::size_t zeros = 0;
    while (zeros < n && std::abs(mon[zeros]) == 0.0) ++zeros;
    for (std::size_t i = 0; i < zeros; ++i) out.push_back(Complex(0.0));
    if (zeros > 0) mon.erase(mon.begin(), mon.begin() + zeros);
    const std::size_t m = mon.size() - 1;
    if (m == 0) return out;

    double scale = std::pow(std::abs(mon.front() / mon.back()), 1.0 / static_cast<double>(m));
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
    std::vector<Complex> a(mon.size());
    double pw = 1.0;
    for (std::size_t i = 0; i < mon.size(); ++i) {
        a[i] = mon[i] * pw / mon.back() / std::pow(scale, static_cast<double>(m));
        pw *= scale;
    }
    Polynomial scaled(a);  // monic-ish with O(1) roots

    std::vector<Complex> r(m);
    Complex seed(0.4, 0.9);
    Complex acc(1.0, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        acc *= seed;
        r[i] = acc;
    }
    const Complex lead = scaled.coef.back();
    for (int pass = 0; pass < 500; ++pass) {
        double moved = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            Complex denom = lead;
            for (std::size_t j = 0; j < m; ++j)
                if (j != i) denom *= (r[i] - r[j]);
            const Complex delta = scaled(r[i]) / denom;
            r[i] -= delta;
            moved = std::max(moved, std::abs(delta) / (1.0 + std::abs(r[i])));
        }
        if (moved < 1e-15) break;
    }

    const Polynomial dp = Polynomial(mon).derivative();
    for (auto& root : r) {
        root *= scale;
        for (int it = 0; it < 3; ++it) {
            const Complex d = dp(root);
            if (std::abs(d) == 0.0) break;
            root -= Polynomial(mon)(root) / d;
        }
        out.push_back(root);
    }
    return out;
}

struct RationalFunction {
    Polynomial num;
    Polynomial den{Complex(1.0)};

    Complex operator()(Complex w) const { return num(w) / den(w); }
    Complex operator()(double w) const { return (*this)(Complex(w, 0.0)); }

    RationalFunction conj_on_real_axis() const {
        return {num.conj_coefficients(), den.conj_coefficients()};
    }

    friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
        return {a.num * b.num, a.den * b.den};
    }
    friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
        return {a.num * b.den, a.den * b.num};
    }
    friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
        return {a.num * b.den + b.num * a.den, a.den * b.den};
    }
};

struct PoleTerm {
    Complex pole;
    Complex residue;
};

/// f = constant + sum residue_i / (w - pole_i); requires deg num <= deg den
/// and simple, well-separated poles.
struct PartialFractions {
    Complex constant{0.0};
    std::vector<PoleTerm> terms;

    Complex operator()(Complex w) const {
        Complex acc = constant;
        for (const auto& t : terms) acc += t.residue / (w - t.pole);
        return acc;
    }
};

inline PartialFractions partial_fractions(const RationalFunction& f) {
    if (f.num.degree() > f.den.degree())
        throw std::invalid_argument("partial_fractions: function does not decay");
    PartialFractions pf;
    if (f.num.is_zero()) return pf;
    if (f.num.degree() == f.den.degree())
        pf.constant = f.num.coef.back() / f.den.coef.back();

    const auto poles = roots(f.den);
    double scale = 0.0;
    for (const auto& p : poles) scale = std::max(scale, std::abs(p));
    for (std::size_t i = 0; i < poles.size(); ++i)
        for (std::size_t j = i + 1; j < poles.size(); ++j)
            if (std::abs(poles[i] - poles[j]) < 1e-7 * (scale + 1e-300))
                throw numeric_error("partial_fractions: poles are not simple/separated");

    const Polynomial dden = f.den.derivative();
    for (const auto& p : poles)
        pf.terms.push_back({p, f.num(p) / dden(p)});
    return pf;
}

inline RationalFunction to_rational(const PartialFractions& pf) {
    Polynomial den{Complex(1.0)};
    for (const auto& t : pf.terms) den = den * Polynomial{-t.pole, Complex(1.0)};
    Polynomial num = pf.constant * den;
    for (const auto& t : pf.terms) {
        Polynomial rest{Complex(1.0)};
        for (const auto& u : pf.terms)
            if (&u != &t) rest = rest * Polynomial{-u.pole, Complex(1.0)};
        num = num + t.residue * rest;
    }
    return {num, den};
}

/// Causal part: pole terms in the lower half-plane plus half of any constant
/// (the t = 0 delta mass splits symmetrically). Poles on the real axis are
/// rejected.
inline RationalFunction causal_part(const RationalFunction& f) {
    PartialFractions pf = partial_fractions(f);
    PartialFractions causal;
    causal.constant = 0.5 * pf.constant;
    double scale = 1e-300;
    for (const auto& t : pf.terms) scale = std::max(scale, std::abs(t.pole));
    for (const auto& t : pf.terms) {
        if (std::abs(t.pole.imag()) < 1e-9 * scale)
            throw numeric_error("causal_part: pole on the real axis");
        if (t.pole.imag() < 0.0) causal.terms.push_back(t);
    }
    return to_rational(causal);
}

inline RationalFunction anti_causal_part(const RationalFunction& f) {
    PartialFractions pf = partial_fractions(f);
    PartialFractions anti;
    anti.constant = 0.5 * pf.constant;
    double scale = 1e-300;
    for (const auto& t : pf.terms) scale = std::max(scale, std::abs(t.pole));
    for (const auto& t : pf.terms) {
        if (std::abs(t.pole.imag()) < 1e-9 * scale)
            throw numeric_error("anti_causal_part: pole on the real axis");
        if (t.pole.imag() > 0.0) anti.terms.push_back(t);
    }
    return to_rational(anti);
}

/// Impulse response of a strictly proper causal rational function at t >= 0:
/// each residue/(w - p) term contributes -i r e^{-i p t}.
inline double impulse_response_at(const PartialFractions& pf, double t) {
    if (t < 0.0) return 0.0;
    Complex acc(0.0);
    for (const auto& term : pf.terms)
        acc += Complex(0.0, -1.0) * term.residue * std::exp(Complex(0.0, -1.0) * term.pole * t);
    return acc.real();
}

}  // namespace condosc
