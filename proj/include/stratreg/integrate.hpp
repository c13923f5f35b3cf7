#pragma once

// Time stepping for the converted SDE and its Stratonovich original:
//
//   Ito-EM (converted drift):
//     x' = x + theta(|x|_0) [ b(x) + 1/2 (sigma.grad sigma)(x) ] dt
//            + theta(|x|_0) sum_k sigma_k(x) dW^k,
//
//   Stratonovich Heun on the coefficient-multiplied system
//   (b_theta, sigma_theta) = (theta b, theta sigma):
//     xt = x + sum_k sigma_theta_k(x) dW^k,
//     x' = x + b_theta(x) dt + 1/2 sum_k [sigma_theta_k(x) + sigma_theta_k(xt)] dW^k.
//
// Without a cutoff theta == 1 and the two schemes solve the same process;
// with a cutoff they agree wherever theta == 1 (in particular below M,
// which is all the gluing comparisons use). step_em_plain integrates the
// plain Ito reading of (b, sigma) -- conversion drift omitted -- and is the
// comparison endpoint for the Wong-Zakai gap.
//
// Blow-up is operationalized as the exit time tau_N = inf{t : |X_t|_0 >= N}
// plus non-finite detection; a step guard activates above N/10, splitting a
// step into substeps so displacement per substep stays near N/10 and the
// exit time is resolved (calibrated against the exact radial blow-up law).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drift.hpp"
#include "hilbert.hpp"
#include "noise.hpp"
#include "rng.hpp"

namespace stratreg {

enum class Scheme { ito_em, strat_heun, wong_zakai };

struct SolverConfig {
    Scheme scheme = Scheme::ito_em;
    double dt = 1e-4;
    double t_end = 1.0;
    double blowup_n = 1e6;           // exit threshold N > 2R
    std::optional<CutoffSpec> cutoff;
    int galerkin_n = 0;              // 0: full dimension
    std::uint64_t seed = 0;
    int record_every = 100;
    double wz_coarse_dt = 0.0;       // wong_zakai scheme: 0 -> 16 dt

    void validate(double noise_radius) const {
        if (!(dt > 0.0)) throw ConfigError("solver: dt must be positive");
        if (!(t_end >= dt)) throw ConfigError("solver: dt must not exceed T");
        if (!(blowup_n > 2.0 * noise_radius))
            throw ConfigError("solver: blowup_n must exceed 2R");
        if (record_every < 1) throw ConfigError("solver: record_every must be >= 1");
        if (cutoff) cutoff->validate();
    }
};

enum class ExitReason { horizon, threshold, nonfinite };

inline const char* to_string(ExitReason r) {
    switch (r) {
        case ExitReason::horizon: return "horizon";
        case ExitReason::threshold: return "threshold";
        case ExitReason::nonfinite: return "nonfinite";
    }
    return "?";
}

struct PathRecord {
    std::vector<double> times;
    std::vector<GalerkinState> states;               // subsampled, pre-exit only
    std::vector<std::array<double, 3>> norms;        // (|.|_-1, |.|_0, |.|_1)
    std::optional<double> exit_time;
    ExitReason exit_reason = ExitReason::horizon;
    std::uint64_t seed = 0;
};

namespace detail {
inline GalerkinState maybe_project(GalerkinState x, int galerkin_n) {
    if (galerkin_n > 0 && galerkin_n < x.dim()) return project(x, galerkin_n);
    return x;
}
inline int channel_count(const GalerkinState& x, const QSpectrum& q, int galerkin_n) {
    int n = std::min(x.dim(), q.channels());
    if (galerkin_n > 0) n = std::min(n, galerkin_n);
    return n;
}
} // namespace detail

/// One Euler-Maruyama step of the converted equation.
inline GalerkinState step_ito_em(const GalerkinState& x, double dt, const WienerIncrement& dW,
                                 const DriftModel& drift, const NoiseSpec& noise,
                                 const QSpectrum& q, const std::optional<CutoffSpec>& cutoff = {},
                                 int galerkin_n = 0) {
    const double theta = cutoff ? theta_M(norm(x, Level::zero), *cutoff) : 1.0;
    GalerkinState out = x;
    if (theta > 0.0) {
        GalerkinState d =
            drift_eval(drift, x) + 0.5 * ito_correction_closed(x, noise, q);
        d = detail::maybe_project(std::move(d), galerkin_n);
        axpy_inplace(out, theta * dt, d);
        const int nk = detail::channel_count(x, q, galerkin_n);
        for (int k = 0; k < nk; ++k) {
            if (q.lambda(k) == 0.0 || dW.dW[static_cast<std::size_t>(k)] == 0.0) continue;
            GalerkinState sk = detail::maybe_project(sigma_k(x, k, noise, q), galerkin_n);
            axpy_inplace(out, theta * dW.dW[static_cast<std::size_t>(k)], sk);
        }
    }
    return out;
}

/// One Heun predictor-corrector step of the Stratonovich system.
inline GalerkinState step_strat_heun(const GalerkinState& x, double dt, const WienerIncrement& dW,
                                     const DriftModel& drift, const NoiseSpec& noise,
                                     const QSpectrum& q,
                                     const std::optional<CutoffSpec>& cutoff = {},
                                     int galerkin_n = 0) {
    const double theta = cutoff ? theta_M(norm(x, Level::zero), *cutoff) : 1.0;
    const int nk = detail::channel_count(x, q, galerkin_n);

    GalerkinState pred = x;
    std::vector<GalerkinState> sk_base;
    sk_base.reserve(static_cast<std::size_t>(nk));
    for (int k = 0; k < nk; ++k) {
        GalerkinState sk = detail::maybe_project(sigma_k(x, k, noise, q), galerkin_n);
        if (theta != 1.0) sk = theta * std::move(sk);
        axpy_inplace(pred, dW.dW[static_cast<std::size_t>(k)], sk);
        sk_base.push_back(std::move(sk));
    }

    GalerkinState out = x;
    if (theta > 0.0) {
        GalerkinState d = detail::maybe_project(drift_eval(drift, x), galerkin_n);
        axpy_inplace(out, theta * dt, d);
    }
    const double theta_pred = cutoff ? theta_M(norm(pred, Level::zero), *cutoff) : 1.0;
    for (int k = 0; k < nk; ++k) {
        GalerkinState sk_pred = detail::maybe_project(sigma_k(pred, k, noise, q), galerkin_n);
        if (theta_pred != 1.0) sk_pred = theta_pred * std::move(sk_pred);
        axpy_inplace(out, 0.5 * dW.dW[static_cast<std::size_t>(k)], sk_base[static_cast<std::size_t>(k)]);
        axpy_inplace(out, 0.5 * dW.dW[static_cast<std::size_t>(k)], sk_pred);
    }
    return out;
}

/// Plain Ito reading of (b, sigma): conversion drift omitted. Comparison
/// endpoint in the Wong-Zakai studies.
inline GalerkinState step_em_plain(const GalerkinState& x, double dt, const WienerIncrement& dW,
                                   const DriftModel& drift, const NoiseSpec& noise,
                                   const QSpectrum& q,
                                   const std::optional<CutoffSpec>& cutoff = {},
                                   int galerkin_n = 0) {
    const double theta = cutoff ? theta_M(norm(x, Level::zero), *cutoff) : 1.0;
    GalerkinState out = x;
    if (theta > 0.0) {
        GalerkinState d = detail::maybe_project(drift_eval(drift, x), galerkin_n);
        axpy_inplace(out, theta * dt, d);
        const int nk = detail::channel_count(x, q, galerkin_n);
        for (int k = 0; k < nk; ++k) {
            if (q.lambda(k) == 0.0 || dW.dW[static_cast<std::size_t>(k)] == 0.0) continue;
            GalerkinState sk = detail::maybe_project(sigma_k(x, k, noise, q), galerkin_n);
            axpy_inplace(out, theta * dW.dW[static_cast<std::size_t>(k)], sk);
        }
    }
    return out;
}

/// Simulate one path up to min(tau_N, T). Fully deterministic in
/// (config, seed); recorded states all satisfy |x|_0 < N with finite
/// coefficients (the crossing state is never recorded).
inline PathRecord simulate_path(const GalerkinState& x0, const SolverConfig& cfg,
                                const DriftModel& drift, const NoiseSpec& noise,
                                const QSpectrum& q) {
    cfg.validate(noise.radius);
    if (cfg.scheme == Scheme::wong_zakai)
        throw ConfigError("simulate_path: use wong_zakai_path for the random-ODE scheme");
    if (!(norm(x0, Level::zero) < cfg.blowup_n))
        throw ConfigError("simulate_path: initial state already beyond the threshold");

    PathRecord rec;
    rec.seed = cfg.seed;
    const rng::StreamKey stream{cfg.seed, 0};
    GalerkinState x = detail::maybe_project(x0, cfg.galerkin_n);

    const std::uint64_t n_steps = static_cast<std::uint64_t>(std::llround(cfg.t_end / cfg.dt));
    const double guard_level = cfg.blowup_n / 10.0;

    auto record = [&](double t, const GalerkinState& state) {
        rec.times.push_back(t);
        rec.states.push_back(state);
        rec.norms.push_back({norm(state, Level::minus1), norm(state, Level::zero),
                             norm(state, Level::plus1)});
    };

    record(0.0, x);
    for (std::uint64_t i = 0; i < n_steps; ++i) {
        const double t = double(i) * cfg.dt;
        const double s = norm(x, Level::zero);

        // Overshoot guard: above N/10 split the step so one substep moves at
        // most about N/10 along the drift.
        std::uint64_t substeps = 1;
        if (s > guard_level) {
            const double drift_norm = norm(drift_eval(drift, x), Level::zero);
            if (drift_norm > 0.0) {
                const double dt_guard = cfg.blowup_n / (10.0 * drift_norm);
                if (dt_guard < cfg.dt)
                    substeps = std::min<std::uint64_t>(
                        1024, static_cast<std::uint64_t>(std::ceil(cfg.dt / dt_guard)));
            }
        }
        const double sub_dt = cfg.dt / double(substeps);

        bool exited = false;
        for (std::uint64_t sub = 0; sub < substeps && !exited; ++sub) {
            const WienerIncrement dW = q_increment(stream, i, sub_dt, q, sub);
            switch (cfg.scheme) {
                case Scheme::ito_em:
                    x = step_ito_em(x, sub_dt, dW, drift, noise, q, cfg.cutoff, cfg.galerkin_n);
                    break;
                case Scheme::strat_heun:
                    x = step_strat_heun(x, sub_dt, dW, drift, noise, q, cfg.cutoff, cfg.galerkin_n);
                    break;
                case Scheme::wong_zakai:
                    break;
            }
            const double t_sub = t + double(sub + 1) * sub_dt;
            if (!all_finite(x)) {
                rec.exit_time = t_sub;
                rec.exit_reason = ExitReason::nonfinite;
                exited = true;
            } else if (norm(x, Level::zero) >= cfg.blowup_n) {
                rec.exit_time = t_sub;
                rec.exit_reason = ExitReason::threshold;
                exited = true;
            }
        }
        if (exited) return rec;
        if ((i + 1) % static_cast<std::uint64_t>(cfg.record_every) == 0 || i + 1 == n_steps)
            record(double(i + 1) * cfg.dt, x);
    }
    rec.exit_reason = ExitReason::horizon;
    return rec;
}

/// A fine-grid Brownian path for refinement studies: all increments up
/// front, coarsenable by summing stride-sized groups.
struct BrownianPath {
    double dt_fine;
    std::vector<WienerIncrement> increments; // one per fine step

    /// Cumulative path value W(t_j) for channel k, j in [0, n_steps].
    std::vector<std::vector<double>> cumulative() const {
        const std::size_t n = increments.size();
        const std::size_t ch = n ? increments.front().dW.size() : 0;
        std::vector<std::vector<double>> w(ch, std::vector<double>(n + 1, 0.0));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < ch; ++k) w[k][j + 1] = w[k][j] + increments[j].dW[k];
        return w;
    }
};

inline BrownianPath make_brownian_path(const rng::StreamKey& stream, std::uint64_t n_steps,
                                       double dt_fine, const QSpectrum& q) {
    BrownianPath path;
    path.dt_fine = dt_fine;
    path.increments.reserve(n_steps);
    for (std::uint64_t j = 0; j < n_steps; ++j)
        path.increments.push_back(q_increment(stream, j, dt_fine, q));
    return path;
}

/// Sum groups of `stride` fine increments into coarse increments.
inline std::vector<WienerIncrement> coarsen(const BrownianPath& path, std::uint64_t stride) {
    std::vector<WienerIncrement> out;
    const std::size_t ch = path.increments.empty() ? 0 : path.increments.front().dW.size();
    for (std::size_t j = 0; j + stride <= path.increments.size(); j += stride) {
        WienerIncrement inc;
        inc.dt = path.dt_fine * double(stride);
        inc.dW.assign(ch, 0.0);
        for (std::uint64_t u = 0; u < stride; ++u)
            for (std::size_t k = 0; k < ch; ++k) inc.dW[k] += path.increments[j + u].dW[k];
        out.push_back(std::move(inc));
    }
    return out;
}

/// Random-ODE path driven by the piecewise-linear interpolation of a fine
/// Brownian path over a coarse mesh: integrate
///   x' = b(x) + sum_k sigma_k(x) Wdot_lin^k
/// with deterministic Heun steps of size fine_dt. The coarse mesh spacing
/// must be a multiple of fine_dt (coarse mesh contained in the fine grid).
inline PathRecord wong_zakai_path(const GalerkinState& x0, const BrownianPath& brownian,
                                  std::uint64_t coarse_stride, const DriftModel& drift,
                                  const NoiseSpec& noise, const QSpectrum& q, double blowup_n,
                                  int record_every = 1 << 20) {
    if (coarse_stride == 0) throw ConfigError("wong_zakai_path: coarse stride must be positive");
    if (brownian.increments.size() % coarse_stride != 0)
        throw ConfigError("wong_zakai_path: coarse mesh must subdivide the fine grid");
    PathRecord rec;
    const double dt = brownian.dt_fine;
    const std::vector<WienerIncrement> coarse = coarsen(brownian, coarse_stride);
    const std::size_t ch = brownian.increments.empty() ? 0 : brownian.increments.front().dW.size();

    GalerkinState x = x0;
    auto record = [&](double t, const GalerkinState& state) {
        rec.times.push_back(t);
        rec.states.push_back(state);
        rec.norms.push_back({norm(state, Level::minus1), norm(state, Level::zero),
                             norm(state, Level::plus1)});
    };
    record(0.0, x);

    std::vector<double> slope(ch, 0.0);
    auto rhs = [&](const GalerkinState& y) {
        GalerkinState f = drift_eval(drift, y);
        for (std::size_t k = 0; k < ch; ++k) {
            if (slope[k] == 0.0 || q.lambda(static_cast<int>(k)) == 0.0) continue;
            axpy_inplace(f, slope[k], sigma_k(y, static_cast<int>(k), noise, q));
        }
        return f;
    };

    const std::size_t n = brownian.increments.size();
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t ci = j / coarse_stride;
        for (std::size_t k = 0; k < ch; ++k) slope[k] = coarse[ci].dW[k] / coarse[ci].dt;
        const GalerkinState f0 = rhs(x);
        GalerkinState pred = x;
        axpy_inplace(pred, dt, f0);
        const GalerkinState f1 = rhs(pred);
        axpy_inplace(x, 0.5 * dt, f0);
        axpy_inplace(x, 0.5 * dt, f1);

        const double t = double(j + 1) * dt;
        if (!all_finite(x)) {
            rec.exit_time = t;
            rec.exit_reason = ExitReason::nonfinite;
            return rec;
        }
        if (norm(x, Level::zero) >= blowup_n) {
            rec.exit_time = t;
            rec.exit_reason = ExitReason::threshold;
            return rec;
        }
        if ((j + 1) % static_cast<std::size_t>(record_every) == 0 || j + 1 == n) record(t, x);
    }
    rec.exit_reason = ExitReason::horizon;
    return rec;
}

} // namespace stratreg
