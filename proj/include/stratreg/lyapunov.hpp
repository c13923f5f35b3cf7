#pragma once

// Radially symmetric C^2 Lyapunov profile
//
//   V(x) = rho(|x|_0),  rho == a on [0,R],  rho == log s on [2R,inf),
//
// with a quintic Hermite blend on [R,2R] matching value, first and second
// derivatives at both ends (so V is C^2 everywhere and the one-sided
// second differences agree at the seams). All gradients and Hessians are
// taken with respect to the E0 scalar product:
//
//   grad V = rho'(s) x/s,
//   D^2V v = (rho'' - rho'/s) <x,v>_0 x/s^2 + (rho'/s) v,
//
// which on |x|_0 >= 2R reduces to x/s^2 and s^-2 (I - 2 x(x)x / s^2).
//
// The generator of the converted SDE,
//
//   L V(x) = <grad V, b>_0 + 1/2 <grad V, (sigma.grad sigma)>_0
//            + 1/2 sum_k <sigma_k, D^2V sigma_k>_0,
//
// is evaluated with the closed-form conversion drift. The admissibility
// window for the rank-one weight alpha and its margin
//
//   delta = -(1-alpha) Tr Q - [(1-alpha)^2 (eta-1) - (1-alpha)] |Q|
//
// decide whether L V / V stays bounded along radial scans; the Markov
// estimate V(x0) e^(cT) / log N turns the fitted bound into an exit
// probability bound.

#include <algorithm>
#include <array>
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

struct LyapunovSpec {
    double a = 0.0;                  // floor value, in (0, log 2R)
    double radius = 1.0;             // R of the noise activation
    std::array<double, 6> blend{};   // quintic in t = (s-R)/R on [0,1]

    double two_r() const { return 2.0 * radius; }
};

namespace detail {
/// rho on [R,2R] via t = (s-R)/R; blend[i] multiplies t^i.
inline double blend_value(const LyapunovSpec& spec, double t) {
    double acc = 0.0;
    for (int i = 5; i >= 0; --i) acc = acc * t + spec.blend[static_cast<std::size_t>(i)];
    return acc;
}
inline double blend_d1(const LyapunovSpec& spec, double t) {
    double acc = 0.0;
    for (int i = 5; i >= 1; --i) acc = acc * t + i * spec.blend[static_cast<std::size_t>(i)];
    return acc;
}
inline double blend_d2(const LyapunovSpec& spec, double t) {
    double acc = 0.0;
    for (int i = 5; i >= 2; --i) acc = acc * t + i * (i - 1) * spec.blend[static_cast<std::size_t>(i)];
    return acc;
}
} // namespace detail

/// Build the spec, solving the quintic blend and verifying monotonicity on a
/// 10^3-point grid; rejects floors too close to log 2R (the blend would dip).
/// a <= 0 selects the default floor min(0.9 log 2R, log 2R - 1/4).
inline LyapunovSpec make_lyapunov(double radius, double a = 0.0) {
    if (!(radius >= 1.0)) throw ConfigError("lyapunov: radius must be >= 1");
    const double log2r = std::log(2.0 * radius);
    if (a <= 0.0) a = std::min(0.9 * log2r, log2r - 0.25);
    if (!(a > 0.0 && a < log2r))
        throw ConfigError("lyapunov: floor a must lie in (0, log 2R)");

    // Hermite data in t = (s-R)/R: value/slope/curvature 0 at t=0 except the
    // floor, and log-profile data at t=1 (d/dt = R d/ds).
    const double rise = log2r - a;
    LyapunovSpec spec;
    spec.a = a;
    spec.radius = radius;
    spec.blend[0] = a;
    spec.blend[1] = 0.0;
    spec.blend[2] = 0.0;
    spec.blend[3] = 10.0 * rise - 17.0 / 8.0;
    spec.blend[4] = -15.0 * rise + 15.0 / 4.0;
    spec.blend[5] = 6.0 * rise - 13.0 / 8.0;

    for (int i = 0; i <= 1000; ++i) {
        const double t = double(i) / 1000.0;
        if (detail::blend_d1(spec, t) < -1e-12)
            throw ConfigError("lyapunov: blend is not monotone; lower the floor a "
                              "(need log(2R) - a >= 17/80)");
    }
    return spec;
}

/// rho, rho', rho'' at s = |x|_0.
struct RadialProfile {
    double value;
    double d1;
    double d2;
};

inline RadialProfile lyap_profile(double s, const LyapunovSpec& spec) {
    const double r = spec.radius;
    if (s <= r) return {spec.a, 0.0, 0.0};
    if (s >= 2.0 * r) return {std::log(s), 1.0 / s, -1.0 / (s * s)};
    const double t = (s - r) / r;
    return {detail::blend_value(spec, t), detail::blend_d1(spec, t) / r,
            detail::blend_d2(spec, t) / (r * r)};
}

inline double lyap_value(const GalerkinState& x, const LyapunovSpec& spec) {
    return lyap_profile(norm(x, Level::zero), spec).value;
}

/// E0-gradient rho'(s) x/s (zero inside B_R).
inline GalerkinState lyap_grad(const GalerkinState& x, const LyapunovSpec& spec) {
    const double s = norm(x, Level::zero);
    if (s <= spec.radius) return zero_state(x.space);
    const RadialProfile p = lyap_profile(s, spec);
    return (p.d1 / s) * x;
}

/// E0-Hessian applied to v: (rho'' - rho'/s) <x,v>_0 x/s^2 + (rho'/s) v.
inline GalerkinState lyap_hess_apply(const GalerkinState& x, const GalerkinState& v,
                                     const LyapunovSpec& spec) {
    detail::require_same_space(x, v, "lyap_hess_apply");
    const double s = norm(x, Level::zero);
    if (s <= spec.radius) return zero_state(x.space);
    const RadialProfile p = lyap_profile(s, spec);
    const double radial = (p.d2 - p.d1 / s) * inner(x, v, Level::zero) / (s * s);
    GalerkinState out = v;
    for (int j = 0; j < out.dim(); ++j) out[j] = radial * x[j] + (p.d1 / s) * v[j];
    return out;
}

/// Generator of the converted SDE at x. Zero on B_R (V constant there).
inline double generator_LV(const GalerkinState& x, const DriftModel& drift, const NoiseSpec& noise,
                           const QSpectrum& q, const LyapunovSpec& spec) {
    const double s = norm(x, Level::zero);
    if (s <= spec.radius) return 0.0;
    const GalerkinState grad = lyap_grad(x, spec);
    double acc = inner(grad, drift_eval(drift, x), Level::zero);
    acc += 0.5 * inner(grad, ito_correction_closed(x, noise, q), Level::zero);
    const int nk = std::min(x.dim(), q.channels());
    for (int k = 0; k < nk; ++k) {
        if (q.lambda(k) == 0.0) continue;
        const GalerkinState sk = sigma_k(x, k, noise, q);
        acc += 0.5 * inner(sk, lyap_hess_apply(x, sk, spec), Level::zero);
    }
    return acc;
}

/// Admissibility of the rank-one weight: the open window
/// 1 < alpha < 1 + (TrQ - |Q|) / ((eta-1) |Q|), the derived quantities
/// alpha-hat, beta-hat, the margin delta, and the large-amplitude condition
/// (delta/2) c_N^2 > c_D that replaces eta > m/2 at equality.
struct AdmissibilityReport {
    double lower = 1.0;
    double upper = 1.0;
    bool alpha_ok = false;
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double delta = 0.0;
    bool cn_condition = true;
    bool cn_condition_known = true; // false when eta == m/2 but c_D is not available

    bool admissible() const { return alpha_ok && cn_condition; }
};

inline AdmissibilityReport admissibility(const NoiseSpec& noise, const QSpectrum& q,
                                         const DriftModel& drift) {
    if (!(noise.eta > 1.0))
        throw ConfigError("admissibility: eta must be > 1 (sign analysis of beta-hat)");
    const double tr = q.trace();
    const double nrm = q.op_norm();
    if (!(nrm > 0.0)) throw ConfigError("admissibility: Q must have a positive eigenvalue");

    AdmissibilityReport rep;
    rep.lower = 1.0;
    rep.upper = 1.0 + (tr - nrm) / ((noise.eta - 1.0) * nrm);
    rep.alpha_ok = noise.alpha > rep.lower && noise.alpha < rep.upper;
    rep.alpha_hat = 1.0 - noise.alpha;
    rep.beta_hat = rep.alpha_hat * rep.alpha_hat * (noise.eta - 1.0) - rep.alpha_hat;
    rep.delta = -rep.alpha_hat * tr - rep.beta_hat * nrm;

    const GrowthBound gb = growth_bound(drift);
    if (noise.eta > gb.m / 2.0) {
        rep.cn_condition = true;
    } else if (noise.eta == gb.m / 2.0) {
        if (gb.c_d) {
            rep.cn_condition = 0.5 * rep.delta * noise.c_n * noise.c_n > *gb.c_d;
        } else {
            rep.cn_condition = false;
            rep.cn_condition_known = false;
        }
    } else {
        rep.cn_condition = false; // eta < m/2 violates the growth prescription
    }
    return rep;
}

/// Shell scan plan for the generator fit.
struct ScanPlan {
    int shells = 24;
    int directions = 16;
    double r_min = 0.0;   // <= 0: defaults to R/4
    double r_max = 1e4;
    std::uint64_t seed = 1234;
};

struct GeneratorScan {
    std::vector<double> shell_norms;
    std::vector<double> max_lv;       // max over directions of L V
    std::vector<double> max_ratio;    // max over directions of L V / V
    double fitted_c = 0.0;            // empirical sup of max(0, LV/V) + 10%
    bool unbounded = false;           // slope test tripped at the outer shells
    std::size_t argmax_shell = 0;
};

/// Scan L V / V over logarithmic shells x random directions. The slope test
/// declares the generator unbounded when the per-shell maxima keep
/// increasing through the outermost three shells at positive values.
inline GeneratorScan scan_generator(const DriftModel& drift, const NoiseSpec& noise,
                                    const QSpectrum& q, const LyapunovSpec& spec,
                                    const SpacePtr& space, const ScanPlan& plan) {
    if (plan.shells < 4) throw ConfigError("scan: need at least 4 shells");
    if (plan.directions < 1) throw ConfigError("scan: need at least 1 direction");
    const double r_min = plan.r_min > 0.0 ? plan.r_min : spec.radius / 4.0;
    if (!(plan.r_max > r_min)) throw ConfigError("scan: r_max must exceed r_min");

    GeneratorScan scan;
    const int n = space->dim();
    for (int i = 0; i < plan.shells; ++i) {
        const double frac = double(i) / double(plan.shells - 1);
        const double s = r_min * std::pow(plan.r_max / r_min, frac);
        double worst_lv = -std::numeric_limits<double>::infinity();
        double worst_ratio = -std::numeric_limits<double>::infinity();
        for (int d = 0; d < plan.directions; ++d) {
            GalerkinState x = zero_state(space);
            if (d == 0) {
                x[0] = 1.0; // first coordinate direction, always included
            } else {
                for (int j = 0; j < n; ++j)
                    x[j] = rng::gaussian({plan.seed, static_cast<std::uint64_t>(i)},
                                         static_cast<std::uint64_t>(d), 0,
                                         static_cast<std::uint64_t>(j));
            }
            const double nrm = norm(x, Level::zero);
            x = (s / nrm) * x;
            const double lv = generator_LV(x, drift, noise, q, spec);
            const double v = lyap_value(x, spec);
            worst_lv = std::max(worst_lv, lv);
            worst_ratio = std::max(worst_ratio, lv / v);
        }
        scan.shell_norms.push_back(s);
        scan.max_lv.push_back(worst_lv);
        scan.max_ratio.push_back(worst_ratio);
    }

    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scan.max_ratio.size(); ++i) {
        if (scan.max_ratio[i] > sup) {
            sup = scan.max_ratio[i];
            scan.argmax_shell = i;
        }
    }
    scan.fitted_c = 1.1 * std::max(0.0, sup);

    const std::size_t last = scan.max_ratio.size() - 1;
    scan.unbounded = scan.max_ratio[last] > 0.0 && scan.max_ratio[last] > scan.max_ratio[last - 1] &&
                     scan.max_ratio[last - 1] > scan.max_ratio[last - 2];
    return scan;
}

/// Fitted generator constant c with L V <= c V empirically on the scan;
/// throws when the slope test reports an unbounded generator.
inline double fit_generator_constant(const DriftModel& drift, const NoiseSpec& noise,
                                     const QSpectrum& q, const LyapunovSpec& spec,
                                     const SpacePtr& space, const ScanPlan& plan) {
    const GeneratorScan scan = scan_generator(drift, noise, q, spec, space, plan);
    if (scan.unbounded)
        throw ConfigError("fit_generator_constant: unbounded generator "
                          "(L V / V increases through the outer shells)");
    return scan.fitted_c;
}

/// Exit probability bound V(x0) e^(cT) / log N for the threshold N; the
/// caller clips at 1.
inline double markov_bound(const GalerkinState& x0, double c, double t_end, double threshold_n,
                           const LyapunovSpec& spec) {
    if (!(threshold_n > spec.two_r()))
        throw ConfigError("markov_bound: threshold N must exceed 2R");
    if (!(c >= 0.0)) throw ConfigError("markov_bound: c must be non-negative");
    return lyap_value(x0, spec) * std::exp(c * t_end) / std::log(threshold_n);
}

} // namespace stratreg
