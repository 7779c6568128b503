#pragma once

// Time-domain classical simulation of the measurement record and empirical
// filter verification. The latent (q, p) pair is advanced by the exact
// discretization of the linear SDE: transition matrix exp(A dt) in closed
// form, per-step noise covariance from the stationary Lyapunov solution
// (Q_d = V_inf - Phi V_inf Phi^T, exact for any dt).

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "condosc/errors.hpp"
#include "condosc/fft.hpp"
#include "condosc/params.hpp"
#include "condosc/spectra.hpp"
#include "condosc/wiener.hpp"

namespace condosc {

struct SimulationConfig {
    double dt = 0.0;                // s
    double duration = 0.0;          // s, statistics window per trajectory
    double burn_in = 0.0;           // s, discarded
    int trajectories = 1;
    std::uint64_t seed = 0;
    double filter_truncation = 0.0; // s

    void validate(const DerivedQuantities& d) const {
        const double dt_max =
            std::min(2.0 * std::numbers::pi / d.omega_prime, 1.0 / d.gamma_prime) / 20.0;
        if (!(dt > 0.0) || dt > dt_max)
            throw std::invalid_argument(
                "SimulationConfig: dt must be positive and at most min(2pi/W', 1/G')/20");
        if (!(duration > 0.0))
            throw std::invalid_argument("SimulationConfig: duration must be > 0");
        if (burn_in < 10.0 / d.gamma_prime || burn_in < 10.0 / d.gamma)
            throw std::invalid_argument("SimulationConfig: burn_in must cover 10/G' and 10/G");
        if (!(std::exp(-0.5 * d.gamma_prime * filter_truncation) < 1e-4))
            throw std::invalid_argument(
                "SimulationConfig: filter_truncation too short for the filter decay");
        if (trajectories < 1)
            throw std::invalid_argument("SimulationConfig: need at least one trajectory");
    }

    static SimulationConfig standard(const DerivedQuantities& d, double duration_per_gamma_prime,
                                     int trajectories, std::uint64_t seed) {
        SimulationConfig cfg;
        cfg.dt = std::min(2.0 * std::numbers::pi / d.omega_prime, 1.0 / d.gamma_prime) / 25.0;
        cfg.duration = duration_per_gamma_prime / d.gamma_prime;
        cfg.burn_in = std::max(10.0 / d.gamma_prime, 10.0 / d.gamma) * 1.05;
        cfg.filter_truncation = 2.0 * std::log(1e5) / d.gamma_prime;
        cfg.trajectories = trajectories;
        cfg.seed = seed;
        return cfg;
    }
};

struct MeasurementRecord {
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> y;       // photocurrent samples (white noise variance 1/dt)
    std::vector<double> q_true;
    std::vector<double> p_true;
};

namespace detail {

struct Discretization {
    std::array<std::array<double, 2>, 2> phi;
    std::array<std::array<double, 2>, 2> chol;  // lower Cholesky of Q_d
    double v_stationary = 0.0;                  // 2 n_th + 1 + 2 C (isotropic)
};

inline Discretization discretize(const DerivedQuantities& d, double dt) {
    using Cx = std::complex<double>;
    const double g = d.gamma, w = d.omega;
    const Cx nu = std::sqrt(Cx(w * w - 0.25 * g * g));
    const double damp = std::exp(-0.5 * g * dt);
    const Cx s = std::abs(nu) > 0.0 ? std::sin(nu * dt) / nu : Cx(dt, 0.0);
    const double sn = (damp * s).real();
    const double cs = (damp * std::cos(nu * dt)).real();

    Discretization out;
    // exp(A dt) = e^{-g dt/2} [cos I + sin/nu (A + g/2 I)], A = [[0, w], [-w, -g]]
    out.phi = {{{cs + 0.5 * g * sn, w * sn}, {-w * sn, cs - 0.5 * g * sn}}};

    out.v_stationary = 2.0 * d.n_th + 1.0 + 2.0 * d.c;
    // Q_d = v (I - Phi Phi^T)
    const auto& f = out.phi;
    const double q00 = out.v_stationary * (1.0 - f[0][0] * f[0][0] - f[0][1] * f[0][1]);
    const double q01 = out.v_stationary * (-(f[0][0] * f[1][0] + f[0][1] * f[1][1]));
    const double q11 = out.v_stationary * (1.0 - f[1][0] * f[1][0] - f[1][1] * f[1][1]);
    if (!(q00 > 0.0) || !(q11 > 0.0) || !(q00 * q11 - q01 * q01 >= -1e-14 * q00 * q11))
        throw numeric_error("discretize: noise covariance is not positive semidefinite");
    out.chol = {{{std::sqrt(q00), 0.0},
                 {q01 / std::sqrt(q00),
                  std::sqrt(std::max(0.0, q11 - q01 * q01 / q00))}}};

    // sanity: the discrete chain must reproduce the continuous stationary
    // covariance (exact by construction; trips only if the scheme is changed)
    const double drift =
        std::abs(f[0][0] * f[0][0] * out.v_stationary + f[0][1] * f[0][1] * out.v_stationary +
                 q00 - out.v_stationary);
    if (drift > 0.01 * out.v_stationary)
        throw numeric_error("discretize: stationary variance drifts by more than 1%");
    return out;
}

/// Linear-phase FIR with |G(w)| = sqrt(s(w)), designed on the record grid by
/// inverse transform of the bin-averaged magnitude; used to color white noise
/// into the excess-noise stream.
inline std::vector<double> excess_noise_fir(const ExcessNoiseModel& excess, double dt,
                                            std::size_t taps) {
    if (!fft::is_power_of_two(taps))
        throw std::invalid_argument("excess_noise_fir: taps must be a power of two");
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(taps) * dt);
    std::vector<std::complex<double>> spec(taps);
    for (std::size_t m = 0; m < taps; ++m) {
        const double w = (m <= taps / 2 ? static_cast<double>(m)
                                        : static_cast<double>(m) - static_cast<double>(taps)) *
                         dw;
        spec[m] = std::sqrt(std::max(0.0, excess.averaged_at(w, dw)));
    }
    fft::transform(spec, -1);
    std::vector<double> h(taps);
    const double norm = 1.0 / static_cast<double>(taps);
    for (std::size_t n = 0; n < taps; ++n) {
        // circular shift by taps/2 makes the zero-phase response causal
        const std::size_t src = (n + taps / 2) % taps;
        const double hann =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                 static_cast<double>(taps));
        h[n] = spec[src].real() * norm * hann;
    }
    return h;
}

}  // namespace detail

/// One trajectory; trajectory k of an ensemble uses seed ^ k so parallel and
/// serial runs generate identical records.
inline MeasurementRecord simulate(const DerivedQuantities& d, const SimulationConfig& cfg,
                                  std::uint64_t trajectory = 0,
                                  const ExcessNoiseModel* excess = nullptr) {
    cfg.validate(d);
    const auto disc = detail::discretize(d, cfg.dt);
    const std::size_t steps =
        static_cast<std::size_t>(std::ceil((cfg.duration + cfg.burn_in) / cfg.dt));

    MeasurementRecord rec;
    rec.dt = cfg.dt;
    rec.seed = cfg.seed ^ trajectory;
    rec.y.resize(steps);
    rec.q_true.resize(steps);
    rec.p_true.resize(steps);

    std::mt19937_64 rng(rec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double meas_gain = 2.0 * std::sqrt(d.eta * d.gamma * d.c);
    const double shot_sigma = 1.0 / std::sqrt(cfg.dt);

    // stationary start
    const double s0 = std::sqrt(disc.v_stationary);
    double q = s0 * normal(rng);
    double p = s0 * normal(rng);

    std::vector<double> pink;
    if (excess) {
        // colored photocurrent noise: white noise with shot-level PSD through
        // the sqrt(s) magnitude FIR, overlap-add in blocks
        const std::size_t taps = 1 << 12;
        const auto fir = detail::excess_noise_fir(*excess, cfg.dt, taps);
        std::vector<double> white(steps + taps, 0.0);
        for (auto& v : white) v = shot_sigma * normal(rng);
        pink.assign(steps, 0.0);
        const std::size_t block = 4 * taps;
        std::vector<std::complex<double>> fir_f(2 * block, 0.0);
        for (std::size_t i = 0; i < taps; ++i) fir_f[i] = fir[i];
        fft::transform(fir_f, +1);
        for (std::size_t start = 0; start < steps; start += block) {
            std::vector<std::complex<double>> seg(2 * block, 0.0);
            for (std::size_t i = 0; i < block && start + i < white.size(); ++i)
                seg[i] = white[start + i];
            fft::transform(seg, +1);
            for (std::size_t i = 0; i < seg.size(); ++i) seg[i] *= fir_f[i];
            fft::inverse(seg);
            for (std::size_t i = 0; i < seg.size() && start + i < steps; ++i)
                pink[start + i] += seg[i].real();
        }
    }

    for (std::size_t k = 0; k < steps; ++k) {
        rec.q_true[k] = q;
        rec.p_true[k] = p;
        rec.y[k] = meas_gain * q + shot_sigma * normal(rng);
        if (excess) rec.y[k] += pink[k];
        const double z1 = normal(rng), z2 = normal(rng);
        const double nq = disc.chol[0][0] * z1;
        const double np = disc.chol[1][0] * z1 + disc.chol[1][1] * z2;
        const double qn = disc.phi[0][0] * q + disc.phi[0][1] * p + nq;
        const double pn = disc.phi[1][0] * q + disc.phi[1][1] * p + np;
        q = qn;
        p = pn;
    }
    return rec;
}

/// Causal discrete convolution est[n] = dt sum_k h[k] y[n-k], truncated at
/// the filter length; the t = 0 tap carries trapezoid half weight.
inline std::vector<double> apply_filter(const MeasurementRecord& rec,
                                        const ImpulseResponse& filter) {
    if (filter.h.empty()) throw std::invalid_argument("apply_filter: empty impulse response");
    if (std::abs(filter.dt - rec.dt) > 1e-12 * rec.dt)
        throw std::invalid_argument("apply_filter: filter dt does not match the record");
    const std::size_t n = rec.y.size(), l = filter.h.size();
    std::vector<double> est(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.5 * filter.h[0] * rec.y[i];
        const std::size_t kmax = std::min(l - 1, i);
        for (std::size_t k = 1; k <= kmax; ++k) acc += filter.h[k] * rec.y[i - k];
        est[i] = acc * rec.dt;
    }
    return est;
}

struct ErrorStatistics {
    double v_qq = 0.0, v_pp = 0.0, c_qp = 0.0;
    double se_qq = 0.0, se_pp = 0.0, se_qp = 0.0;
    std::size_t samples = 0;
    std::size_t blocks = 0;
};

/// Time-plus-ensemble averages of the filter errors with block-bootstrap
/// standard errors (block length 10/G').
inline ErrorStatistics error_statistics(const DerivedQuantities& d, const SimulationConfig& cfg,
                                        const std::vector<MeasurementRecord>& records,
                                        const std::vector<std::vector<double>>& q_estimates,
                                        const std::vector<std::vector<double>>& p_estimates) {
    if (records.size() != q_estimates.size() || records.size() != p_estimates.size())
        throw std::invalid_argument("error_statistics: mismatched ensemble sizes");

    const std::size_t skip = static_cast<std::size_t>(
        std::ceil((cfg.burn_in + cfg.filter_truncation) / cfg.dt));
    const std::size_t block_len =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(10.0 / d.gamma_prime / cfg.dt)));

    std::vector<std::array<double, 3>> block_means;
    std::size_t samples = 0;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.y.size() != q_estimates[r].size() || rec.y.size() != p_estimates[r].size())
            throw std::invalid_argument("error_statistics: estimate length mismatch");
        std::size_t i = skip;
        while (i + block_len <= rec.y.size()) {
            std::array<double, 3> acc{0.0, 0.0, 0.0};
            for (std::size_t k = i; k < i + block_len; ++k) {
                const double dq = rec.q_true[k] - q_estimates[r][k];
                const double dp = rec.p_true[k] - p_estimates[r][k];
                acc[0] += dq * dq;
                acc[1] += dp * dp;
                acc[2] += dq * dp;
            }
            for (auto& a : acc) a /= static_cast<double>(block_len);
            block_means.push_back(acc);
            samples += block_len;
            i += block_len;
        }
    }
    if (block_means.size() < 100)
        throw numeric_error("error_statistics: fewer than 100 effective samples (blocks)");

    ErrorStatistics out;
    out.samples = samples;
    out.blocks = block_means.size();
    for (const auto& b : block_means) {
        out.v_qq += b[0];
        out.v_pp += b[1];
        out.c_qp += b[2];
    }
    const double nb = static_cast<double>(block_means.size());
    out.v_qq /= nb;
    out.v_pp /= nb;
    out.c_qp /= nb;

    // block bootstrap, fixed seed derived from the run seed
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, block_means.size() - 1);
    const int resamples = 200;
    double m[3] = {0.0, 0.0, 0.0}, m2[3] = {0.0, 0.0, 0.0};
    for (int b = 0; b < resamples; ++b) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < block_means.size(); ++i) {
            const auto& blk = block_means[pick(rng)];
            for (int j = 0; j < 3; ++j) acc[j] += blk[j];
        }
        for (int j = 0; j < 3; ++j) {
            acc[j] /= nb;
            m[j] += acc[j];
            m2[j] += acc[j] * acc[j];
        }
    }
    const auto se = [&](int j) {
        const double mean = m[j] / resamples;
        return std::sqrt(std::max(0.0, m2[j] / resamples - mean * mean));
    };
    out.se_qq = se(0);
    out.se_pp = se(1);
    out.se_qp = se(2);
    return out;
}

/// Simulate an ensemble, filter every trajectory, and reduce. Trajectories
/// run on worker threads; the reduction order is fixed by trajectory index,
/// so thread count does not affect the result.
inline ErrorStatistics ensemble_error_statistics(const DerivedQuantities& d,
                                                 const SimulationConfig& cfg,
                                                 const ImpulseResponse& h_q,
                                                 const ImpulseResponse& h_p,
                                                 const ExcessNoiseModel* excess = nullptr) {
    cfg.validate(d);
    const int n = cfg.trajectories;
    std::vector<MeasurementRecord> records(n);
    std::vector<std::vector<double>> q_est(n), p_est(n);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (int k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
                records[k] = simulate(d, cfg, static_cast<std::uint64_t>(k), excess);
                q_est[k] = apply_filter(records[k], h_q);
                p_est[k] = apply_filter(records[k], h_p);
            }
        });
    for (auto& t : pool) t.join();
    return error_statistics(d, cfg, records, q_est, p_est);
}

}  // namespace condosc
