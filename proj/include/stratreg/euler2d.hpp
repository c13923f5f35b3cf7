#pragma once

// Incompressible 2D Euler nonlinearity b(u) = -P[(u.grad)u] on the periodic
// torus [0,2pi]^2, truncated to Fourier modes |k|_inf <= K. States are
// divergence-free zero-mean velocity fields stored as real coefficients
// against the H^(s-1)-orthonormal basis of the divergence-free subspace:
// one cos/sin pair per half-plane wavevector, each mode's velocity
// direction fixed to the rotated unit vector k_perp/|k| = (k2,-k1)/|k|.
// With that layout the H^(s-1), H^s, H^(s+1) norms are exactly the
// weighted coefficient norms for weights mu = 1 + |k|^2, so the field
// plugs straight into the scale model. The transport convolution is
// summed directly over retained modes (no transforms, no aliasing), and
// the Leray projector acts per mode as I - k k^T / |k|^2.

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "hilbert.hpp"

namespace stratreg {

struct SpectralEulerDrift {
    int K = 8;            // Fourier cutoff |k|_inf <= K
    int sobolev_s = 3;    // integer s >= 3 (so s > d/2 + 1 for d = 2)
    std::optional<double> fitted_c_d; // externally fitted growth constant, if any

    struct Mode {
        int k1, k2;
        double k_sq;      // |k|^2
        double norm_coef; // sqrt(2) (1+|k|^2)^(-(s-1)/2), H^(s-1) normalization
    };
    std::vector<Mode> modes; // half-plane, sorted by |k|^2 then lexicographic
    SpacePtr space;          // dim = 2 * modes.size(), weights 1 + |k|^2

    SpectralEulerDrift() = default;
    SpectralEulerDrift(int K_, int s_) : K(K_), sobolev_s(s_) {
        if (K <= 0) throw ConfigError("euler2d: K must be positive");
        if (sobolev_s < 3) throw ConfigError("euler2d: s must be an integer >= 3");
        for (int k1 = -K; k1 <= K; ++k1)
            for (int k2 = -K; k2 <= K; ++k2) {
                const bool half = k1 > 0 || (k1 == 0 && k2 > 0);
                if (!half) continue;
                Mode m;
                m.k1 = k1;
                m.k2 = k2;
                m.k_sq = double(k1) * k1 + double(k2) * k2;
                m.norm_coef = std::sqrt(2.0) * std::pow(1.0 + m.k_sq, -0.5 * (sobolev_s - 1));
                modes.push_back(m);
            }
        std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
            if (a.k_sq != b.k_sq) return a.k_sq < b.k_sq;
            if (a.k1 != b.k1) return a.k1 < b.k1;
            return a.k2 < b.k2;
        });
        std::vector<double> weights;
        weights.reserve(2 * modes.size());
        for (const Mode& m : modes) {
            weights.push_back(1.0 + m.k_sq);
            weights.push_back(1.0 + m.k_sq);
        }
        space = make_space(std::move(weights));
    }
};

namespace euler {

using Complex = std::complex<double>;
using Vec2c = std::array<Complex, 2>;

/// Divergence-free unit direction of mode k: k_perp / |k| = (k2, -k1)/|k|.
inline std::array<double, 2> perp_dir(int k1, int k2) {
    const double n = std::sqrt(double(k1) * k1 + double(k2) * k2);
    return {k2 / n, -k1 / n};
}

/// Complex half-plane amplitudes A_j with u-hat_k = A_j * k_perp/|k|;
/// A_j = (norm_coef/2)(x_cos - i x_sin).
inline std::vector<Complex> to_amplitudes(const SpectralEulerDrift& m, const GalerkinState& x) {
    if (x.dim() != m.space->dim()) throw ConfigError("euler2d: state/space dimension mismatch");
    std::vector<Complex> amps(m.modes.size());
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        const double xc = x[static_cast<int>(2 * j)];
        const double xs = x[static_cast<int>(2 * j + 1)];
        amps[j] = 0.5 * m.modes[j].norm_coef * Complex(xc, -xs);
    }
    return amps;
}

inline GalerkinState from_amplitudes(const SpectralEulerDrift& m, const std::vector<Complex>& amps) {
    GalerkinState x = zero_state(m.space);
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        x[static_cast<int>(2 * j)] = 2.0 * amps[j].real() / m.modes[j].norm_coef;
        x[static_cast<int>(2 * j + 1)] = -2.0 * amps[j].imag() / m.modes[j].norm_coef;
    }
    return x;
}

namespace detail {
struct ModeGrid {
    int K;
    std::vector<Vec2c> uhat; // (2K+1)^2 dense grid of velocity modes
    int idx(int k1, int k2) const { return (k1 + K) * (2 * K + 1) + (k2 + K); }
    Vec2c& at(int k1, int k2) { return uhat[static_cast<std::size_t>(idx(k1, k2))]; }
    const Vec2c& at(int k1, int k2) const { return uhat[static_cast<std::size_t>(idx(k1, k2))]; }
};

inline ModeGrid fill_grid(const SpectralEulerDrift& m, const std::vector<Complex>& amps) {
    ModeGrid g;
    g.K = m.K;
    g.uhat.assign(static_cast<std::size_t>((2 * m.K + 1) * (2 * m.K + 1)), Vec2c{});
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        const auto& md = m.modes[j];
        const auto dir = perp_dir(md.k1, md.k2);
        const Vec2c up{amps[j] * dir[0], amps[j] * dir[1]};
        g.at(md.k1, md.k2) = up;
        g.at(-md.k1, -md.k2) = Vec2c{std::conj(up[0]), std::conj(up[1])};
    }
    return g;
}
} // namespace detail

/// -P[(u.grad)u] as half-plane amplitudes. The transport term is the exact
/// convolution ((u.grad)u)-hat_k = i sum_p (u-hat_p . (k-p)) u-hat_(k-p)
/// over retained p, projected onto k_perp and truncated to |k|_inf <= K.
inline std::vector<Complex> nonlinear_amplitudes(const SpectralEulerDrift& m,
                                                 const std::vector<Complex>& amps) {
    const detail::ModeGrid g = detail::fill_grid(m, amps);
    const int K = m.K;
    std::vector<Complex> out(m.modes.size());
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        const auto& md = m.modes[j];
        Vec2c conv{Complex(0.0), Complex(0.0)};
        for (int p1 = std::max(-K, md.k1 - K); p1 <= std::min(K, md.k1 + K); ++p1)
            for (int p2 = std::max(-K, md.k2 - K); p2 <= std::min(K, md.k2 + K); ++p2) {
                const int q1 = md.k1 - p1;
                const int q2 = md.k2 - p2;
                const Vec2c& up = g.at(p1, p2);
                const Vec2c& uq = g.at(q1, q2);
                const Complex dot = up[0] * double(q1) + up[1] * double(q2);
                conv[0] += dot * uq[0];
                conv[1] += dot * uq[1];
            }
        conv[0] *= Complex(0.0, 1.0);
        conv[1] *= Complex(0.0, 1.0);
        // Leray-project onto the divergence-free direction and negate.
        const auto dir = perp_dir(md.k1, md.k2);
        out[j] = -(conv[0] * dir[0] + conv[1] * dir[1]);
    }
    return out;
}

inline GalerkinState drift_eval(const SpectralEulerDrift& m, const GalerkinState& x) {
    return from_amplitudes(m, nonlinear_amplitudes(m, to_amplitudes(m, x)));
}

/// <b(u), u>_{H^m} = sum_k (1+|k|^2)^m Re(b-hat_k . conj(u-hat_k)); the level
/// norms of the scale are the cases m = s-1, s, s+1, and m = 0 gives the L^2
/// energy pairing that the projected transport conserves exactly.
inline double pairing_sobolev(const SpectralEulerDrift& m, const GalerkinState& x, int sobolev_m) {
    const auto amps = to_amplitudes(m, x);
    const auto bamps = nonlinear_amplitudes(m, amps);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        const double w = std::pow(1.0 + m.modes[j].k_sq, double(sobolev_m));
        acc += 2.0 * w * (bamps[j] * std::conj(amps[j])).real();
    }
    return acc;
}

inline double norm_sobolev(const SpectralEulerDrift& m, const GalerkinState& x, int sobolev_m) {
    const auto amps = to_amplitudes(m, x);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        const double w = std::pow(1.0 + m.modes[j].k_sq, double(sobolev_m));
        acc += 2.0 * w * std::norm(amps[j]);
    }
    return std::sqrt(acc);
}

/// Build a state from raw velocity modes, validating divergence-freeness,
/// zero mean, and conjugate symmetry. Entry point for external fields.
inline GalerkinState from_velocity_modes(const SpectralEulerDrift& m,
                                         const std::map<std::pair<int, int>, Vec2c>& uhat,
                                         double tol = 1e-12) {
    double scale = 0.0;
    for (const auto& [k, v] : uhat) scale = std::max({scale, std::abs(v[0]), std::abs(v[1])});
    if (scale == 0.0) return zero_state(m.space);
    std::vector<Complex> amps(m.modes.size(), Complex(0.0));
    for (const auto& [k, v] : uhat) {
        const auto [k1, k2] = k;
        if (k1 == 0 && k2 == 0) {
            if (std::abs(v[0]) > tol * scale || std::abs(v[1]) > tol * scale)
                throw ConfigError("euler2d: field must have zero mean");
            continue;
        }
        if (std::abs(k1) > m.K || std::abs(k2) > m.K)
            throw ConfigError("euler2d: mode outside the |k|_inf <= K truncation");
        const Complex div = v[0] * double(k1) + v[1] * double(k2);
        if (std::abs(div) > tol * scale * std::sqrt(double(k1) * k1 + double(k2) * k2))
            throw ConfigError("euler2d: field is not divergence-free");
        const bool half = k1 > 0 || (k1 == 0 && k2 > 0);
        const auto dir = perp_dir(k1, k2);
        const Complex a = v[0] * dir[0] + v[1] * dir[1];
        for (std::size_t j = 0; j < m.modes.size(); ++j)
            if (m.modes[j].k1 == (half ? k1 : -k1) && m.modes[j].k2 == (half ? k2 : -k2)) {
                const Complex contribution = half ? a : std::conj(-a);
                if (std::abs(amps[j]) > 0.0 && std::abs(amps[j] - contribution) > tol * scale)
                    throw ConfigError("euler2d: modes violate conjugate symmetry");
                amps[j] = contribution;
                break;
            }
    }
    return from_amplitudes(m, amps);
}

/// Raw velocity modes of a state (half plane and conjugates, plus zero mode).
inline std::map<std::pair<int, int>, Vec2c> to_velocity_modes(const SpectralEulerDrift& m,
                                                              const GalerkinState& x) {
    const auto amps = to_amplitudes(m, x);
    std::map<std::pair<int, int>, Vec2c> out;
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        const auto& md = m.modes[j];
        const auto dir = perp_dir(md.k1, md.k2);
        const Vec2c up{amps[j] * dir[0], amps[j] * dir[1]};
        out[{md.k1, md.k2}] = up;
        out[{-md.k1, -md.k2}] = Vec2c{std::conj(up[0]), std::conj(up[1])};
    }
    return out;
}

} // namespace euler
} // namespace stratreg
