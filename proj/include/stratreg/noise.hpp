#pragma once

// The rank-one-corrected superlinear noise operator and everything derived
// from it. On the E0 ball exterior |x|_0 >= R the operator is
//
//   sigma(x) v = c_N |x|_0^eta ( v - alpha <x,v>_0 x / |x|_0^2 ),
//
// extended to the whole space by the activation profile psi (== 0 on
// [0, R/2], == 1 on [R, inf)):
//
//   sigma(x) = c_N psi(|x|_0) |x|_0^eta ( I - alpha x(x)x / |x|_0^2 ).
//
// Channel fields are sigma_k(x) = sqrt(lambda_k) sigma(x) w_k for the
// E0-orthonormal eigenbasis w_k = e_k / sqrt(mu_k) of the covariance Q.
// The Stratonovich-to-Ito conversion drift sum_k D sigma_k(x)[sigma_k(x)]
// is provided in three independent routes: the closed per-channel
// coefficients a_k, b_k (with psi/psi' Leibniz terms inside the transition
// annulus), an analytic product-rule directional derivative, and a central
// finite-difference oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hilbert.hpp"
#include "rng.hpp"
#include "smoothstep.hpp"

namespace stratreg {

struct NoiseSpec {
    double c_n = 1.0;          // amplitude c_N > 0
    double eta = 1.5;          // growth exponent
    double alpha = 2.0;        // rank-one correction weight
    double radius = 1.0;       // activation radius R; psi dead zone is [0, R/2]
    double psi_sharpness = 1.0;

    void validate() const {
        if (!(c_n > 0.0)) throw ConfigError("noise: c_n must be positive");
        if (!(radius >= 1.0)) throw ConfigError("noise: radius must be >= 1");
        if (!(psi_sharpness > 0.0)) throw ConfigError("noise: psi_sharpness must be positive");
    }
};

/// Eigenvalues of the trace-class covariance Q, non-increasing, >= 0.
struct QSpectrum {
    std::vector<double> lambdas;

    // Set when built from a power law lambda_k = lambda1 * k^-q; used by the
    // trace-summability check on the declared infinite law.
    std::optional<double> power_law_exponent;

    int channels() const { return static_cast<int>(lambdas.size()); }
    double lambda(int k) const { return lambdas[static_cast<std::size_t>(k)]; }

    double trace() const {
        double t = 0.0;
        for (double l : lambdas) t += l;
        return t;
    }
    /// Operator norm |Q| = lambda_1.
    double op_norm() const { return lambdas.empty() ? 0.0 : lambdas.front(); }

    int positive_count() const {
        int c = 0;
        for (double l : lambdas)
            if (l > 0.0) ++c;
        return c;
    }

    void validate() const {
        if (lambdas.empty()) throw ConfigError("q: spectrum must be non-empty");
        double prev = lambdas.front();
        for (double l : lambdas) {
            if (!(l >= 0.0)) throw ConfigError("q: eigenvalues must be non-negative");
            if (l > prev + 1e-15 * std::max(1.0, prev))
                throw ConfigError("q: eigenvalues must be non-increasing");
            prev = l;
        }
    }
};

inline QSpectrum make_q_explicit(std::vector<double> lambdas) {
    QSpectrum q{std::move(lambdas), std::nullopt};
    q.validate();
    return q;
}

inline QSpectrum make_q_power_law(double lambda1, double exponent, int truncation) {
    if (truncation <= 0) throw ConfigError("q: truncation must be positive");
    std::vector<double> l(static_cast<std::size_t>(truncation));
    for (int k = 1; k <= truncation; ++k)
        l[static_cast<std::size_t>(k - 1)] = lambda1 * std::pow(double(k), -exponent);
    QSpectrum q{std::move(l), exponent};
    q.validate();
    return q;
}

/// One Q-Wiener increment: dW[k] ~ N(0, dt) independent across channels.
struct WienerIncrement {
    std::vector<double> dW;
    double dt = 0.0;
};

/// n independent centered Gaussians of variance dt, addressed by
/// (stream, step, substep) so concurrent paths and reruns reproduce.
inline WienerIncrement q_increment(const rng::StreamKey& stream, std::uint64_t step, double dt,
                                   const QSpectrum& q, std::uint64_t substep = 0) {
    if (!(dt > 0.0)) throw ConfigError("q_increment: dt must be positive");
    WienerIncrement inc;
    inc.dt = dt;
    inc.dW.resize(static_cast<std::size_t>(q.channels()));
    const double sd = std::sqrt(dt);
    for (int k = 0; k < q.channels(); ++k)
        inc.dW[static_cast<std::size_t>(k)] =
            sd * rng::gaussian(stream, step, substep, static_cast<std::uint64_t>(k));
    return inc;
}

/// Activation profile: 0 on [0, R/2], 1 on [R, inf), C-infinity monotone between.
inline double psi(double s, const NoiseSpec& spec) {
    const double half = 0.5 * spec.radius;
    return smoothstep::phi((s - half) / half, spec.psi_sharpness);
}

inline double psi_prime(double s, const NoiseSpec& spec) {
    const double half = 0.5 * spec.radius;
    return smoothstep::phi_prime((s - half) / half, spec.psi_sharpness) / half;
}

/// sigma(x) v. Linear in v; zero whenever psi(|x|_0) = 0 (in particular at x = 0,
/// where no negative power of |x|_0 is ever formed).
inline GalerkinState sigma_apply(const GalerkinState& x, const GalerkinState& v,
                                 const NoiseSpec& spec) {
    detail::require_same_space(x, v, "sigma_apply");
    const double s = norm(x, Level::zero);
    const double p = psi(s, spec);
    if (p == 0.0) return zero_state(x.space);
    const double amp = spec.c_n * p * std::pow(s, spec.eta);
    const double xv = inner(x, v, Level::zero);
    GalerkinState out = v;
    const double rank1 = spec.alpha * xv / (s * s);
    for (int j = 0; j < out.dim(); ++j) out[j] = amp * (v[j] - rank1 * x[j]);
    return out;
}

namespace detail {
/// <x, w_k>_0 = sqrt(mu_k) x_k without materializing w_k.
inline double inner_with_w(const GalerkinState& x, int k) {
    return std::sqrt(x.space->weights[static_cast<std::size_t>(k)]) * x[k];
}
inline int active_channels(const GalerkinState& x, const QSpectrum& q) {
    return std::min(x.dim(), q.channels());
}
} // namespace detail

/// Channel field sigma_k(x) = sqrt(lambda_k) sigma(x) w_k (0-based k).
inline GalerkinState sigma_k(const GalerkinState& x, int k, const NoiseSpec& spec,
                             const QSpectrum& q) {
    if (k < 0 || k >= q.channels() || k >= x.dim())
        throw ConfigError("sigma_k: channel index out of range");
    const double lam = q.lambda(k);
    if (lam == 0.0) return zero_state(x.space);
    const double s = norm(x, Level::zero);
    const double p = psi(s, spec);
    if (p == 0.0) return zero_state(x.space);
    const double amp = std::sqrt(lam) * spec.c_n * p * std::pow(s, spec.eta);
    const double xw = detail::inner_with_w(x, k);
    GalerkinState out = zero_state(x.space);
    out[k] = amp / std::sqrt(x.space->weights[static_cast<std::size_t>(k)]);
    const double rank1 = amp * spec.alpha * xw / (s * s);
    for (int j = 0; j < out.dim(); ++j) out[j] -= rank1 * x[j];
    return out;
}

/// Analytic directional derivative D sigma_k(x)[v] by the product rule,
/// including the psi' term. Independent of the closed a_k/b_k assembly.
inline GalerkinState sigma_k_dir_deriv(const GalerkinState& x, int k, const GalerkinState& v,
                                       const NoiseSpec& spec, const QSpectrum& q) {
    detail::require_same_space(x, v, "sigma_k_dir_deriv");
    if (k < 0 || k >= q.channels() || k >= x.dim())
        throw ConfigError("sigma_k_dir_deriv: channel index out of range");
    const double lam = q.lambda(k);
    if (lam == 0.0) return zero_state(x.space);
    const double s = norm(x, Level::zero);
    const double p = psi(s, spec);
    const double dp = psi_prime(s, spec);
    if (p == 0.0 && dp == 0.0) return zero_state(x.space);

    const double c = spec.c_n * std::sqrt(lam);
    const double eta = spec.eta;
    const double al = spec.alpha;
    const double xv = inner(x, v, Level::zero);
    const double xw = detail::inner_with_w(x, k);
    const double vw = detail::inner_with_w(v, k);
    const double s2 = s * s;
    const double pow_eta = std::pow(s, eta);
    const double pow_em2 = std::pow(s, eta - 2.0);

    // sigma_k = c * g(s) (s^eta w_k - alpha s^(eta-2) <x,w_k> x), g = psi(s):
    // chain rule in s plus the bilinear terms of the rank-one part.
    GalerkinState out = zero_state(x.space);
    const double ds = xv / s; // d|x|_0/dx in direction v

    const double wk_coef =
        (dp * pow_eta + p * eta * std::pow(s, eta - 1.0)) * ds; // d(g s^eta)
    out[k] += c * wk_coef / std::sqrt(x.space->weights[static_cast<std::size_t>(k)]);

    const double x_coef = -al * ((dp * pow_em2 + p * (eta - 2.0) * std::pow(s, eta - 3.0)) * ds * xw +
                                 p * pow_em2 * vw);
    for (int j = 0; j < out.dim(); ++j) out[j] += c * x_coef * x[j];

    const double v_coef = -al * p * pow_em2 * xw;
    for (int j = 0; j < out.dim(); ++j) out[j] += c * v_coef * v[j];

    (void)s2;
    return out;
}

/// Per-channel closed coefficients of the exterior form
/// (sigma . nabla sigma)_k = a_k w_k + b_k x, valid wherever |x|_0 > 0 for
/// the un-cut operator.
struct ChannelCoefficients {
    double a_k; // multiplies w_k
    double b_k; // multiplies x
    double g_k; // diffusion: sigma_k = g_k w_k + d_k x
    double d_k;
};

inline ChannelCoefficients channel_coefficients(const GalerkinState& x, int k,
                                                const NoiseSpec& spec, const QSpectrum& q) {
    const double s = norm(x, Level::zero);
    if (!(s > 0.0)) throw ConfigError("channel_coefficients: zero state");
    const double lam = q.lambda(k);
    const double c2 = spec.c_n * spec.c_n;
    const double eta = spec.eta;
    const double al = spec.alpha;
    const double xw = detail::inner_with_w(x, k);
    const double pow2e2 = std::pow(s, 2.0 * eta - 2.0);
    ChannelCoefficients out{};
    out.a_k = c2 * lam * (eta - al - eta * al) * pow2e2 * xw;
    out.b_k = c2 * lam * pow2e2 *
              ((xw * xw / (s * s)) * (al * al * eta - al * (eta - 2.0)) - al /* * |w_k|_0^2 == 1 */);
    out.g_k = spec.c_n * std::sqrt(lam) * std::pow(s, eta);
    out.d_k = -spec.c_n * std::sqrt(lam) * al * std::pow(s, eta - 2.0) * xw;
    return out;
}

/// Closed-form conversion drift sum_k D sigma_k(x)[sigma_k(x)].
///
/// Saturated zone (|x|_0 >= R): sum_k (a_k w_k + b_k x).
/// Transition annulus (R/2 < |x|_0 < R): Leibniz expansion of the cut
/// operator psi(s) sigma -- psi^2 times the exterior form plus
/// (psi psi'/s) sum_k <x, sigma_k(x)>_0 sigma_k(x) with sigma_k un-cut.
/// Dead zone (|x|_0 <= R/2): identically zero.
inline GalerkinState ito_correction_closed(const GalerkinState& x, const NoiseSpec& spec,
                                           const QSpectrum& q) {
    const double s = norm(x, Level::zero);
    const double p = psi(s, spec);
    if (p == 0.0) return zero_state(x.space);
    const double dp = psi_prime(s, spec);
    const int nk = detail::active_channels(x, q);

    GalerkinState out = zero_state(x.space);
    double b_total = 0.0;
    for (int k = 0; k < nk; ++k) {
        if (q.lambda(k) == 0.0) continue;
        const ChannelCoefficients cc = channel_coefficients(x, k, spec, q);
        out[k] += cc.a_k / std::sqrt(x.space->weights[static_cast<std::size_t>(k)]);
        b_total += cc.b_k;
    }
    for (int j = 0; j < out.dim(); ++j) out[j] = p * p * (out[j] + b_total * x[j]);

    if (dp != 0.0) {
        // sum_k <x, sigma_k>_0 sigma_k with the un-cut sigma_k = g_k w_k + d_k x:
        // <x, sigma_k>_0 = g_k <x,w_k>_0 + d_k s^2.
        GalerkinState extra = zero_state(x.space);
        double extra_x = 0.0;
        for (int k = 0; k < nk; ++k) {
            if (q.lambda(k) == 0.0) continue;
            const ChannelCoefficients cc = channel_coefficients(x, k, spec, q);
            const double xw = detail::inner_with_w(x, k);
            const double xs = cc.g_k * xw + cc.d_k * s * s;
            extra[k] += xs * cc.g_k / std::sqrt(x.space->weights[static_cast<std::size_t>(k)]);
            extra_x += xs * cc.d_k;
        }
        const double fac = p * dp / s;
        for (int j = 0; j < out.dim(); ++j) out[j] += fac * (extra[j] + extra_x * x[j]);
    }
    return out;
}

/// Finite-difference oracle for the conversion drift: per channel the
/// central difference of sigma_k along sigma_k(x),
///
///   [sigma_k(x + h sigma_k(x)) - sigma_k(x - h sigma_k(x))] / (2h),
///
/// summed over channels. h <= 0 selects the default per-channel step
/// 1e-4 (1+|x|_0)/|sigma_k(x)|_0 clamped to [1e-8, 1e-3].
inline GalerkinState ito_correction_fd(const GalerkinState& x, const NoiseSpec& spec,
                                       const QSpectrum& q, double h = 0.0) {
    const int nk = detail::active_channels(x, q);
    GalerkinState out = zero_state(x.space);
    const double s = norm(x, Level::zero);
    for (int k = 0; k < nk; ++k) {
        if (q.lambda(k) == 0.0) continue;
        const GalerkinState sk = sigma_k(x, k, spec, q);
        const double sk_norm = norm(sk, Level::zero);
        if (sk_norm == 0.0) continue;
        double hk = h;
        if (!(hk > 0.0)) hk = std::clamp(1e-4 * (1.0 + s) / sk_norm, 1e-8, 1e-3);
        GalerkinState xp = x;
        axpy_inplace(xp, hk, sk);
        GalerkinState xm = x;
        axpy_inplace(xm, -hk, sk);
        const GalerkinState fp = sigma_k(xp, k, spec, q);
        const GalerkinState fm = sigma_k(xm, k, spec, q);
        for (int j = 0; j < out.dim(); ++j) out[j] += (fp[j] - fm[j]) / (2.0 * hk);
    }
    return out;
}

} // namespace stratreg
