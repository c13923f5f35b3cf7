#pragma once

// Pluggable superlinear drifts and the localization cutoff theta_M.
// RadialDrift is the sharp finite-dimensional instance b(x) = c_D |x|_0^(m-2) x,
// which saturates the growth bound <b(x),x>_0 = c_D |x|_0^m exactly;
// SpectralEulerDrift is the desk-scale fluid instance (see euler2d.hpp).

#include <cmath>
#include <optional>
#include <variant>

#include "euler2d.hpp"
#include "hilbert.hpp"
#include "smoothstep.hpp"

namespace stratreg {

struct RadialDrift {
    double c_d = 1.0; // > 0
    double m = 3.0;   // growth exponent > 2

    void validate() const {
        if (!(c_d > 0.0)) throw ConfigError("drift: c_d must be positive");
        if (!(m > 2.0)) throw ConfigError("drift: m must be > 2");
    }
};

using DriftModel = std::variant<RadialDrift, SpectralEulerDrift>;

/// Growth data used by the admissibility checks: exponent m of
/// g(s) <= c_D s^(m-2), with c_D known exactly for the radial drift and
/// only as an externally fitted value (if any) for the Euler drift.
struct GrowthBound {
    double m = 3.0;
    std::optional<double> c_d;
};

inline GrowthBound growth_bound(const DriftModel& model) {
    if (const auto* r = std::get_if<RadialDrift>(&model)) return {r->m, r->c_d};
    // Euler: m = 3; c_D only as an externally fitted value, never asserted.
    return {3.0, std::get<SpectralEulerDrift>(model).fitted_c_d};
}

/// Smooth non-increasing truncation profile: 1 on [0,M], 0 on [2M,inf).
struct CutoffSpec {
    double M = 1.0;
    double sharpness = 1.0;

    void validate() const {
        if (!(M > 0.0)) throw ConfigError("cutoff: M must be positive");
        if (!(sharpness > 0.0)) throw ConfigError("cutoff: sharpness must be positive");
    }
};

inline double theta_M(double s, const CutoffSpec& cut) {
    return 1.0 - smoothstep::phi((s - cut.M) / cut.M, cut.sharpness);
}

inline GalerkinState drift_eval(const DriftModel& model, const GalerkinState& x) {
    if (const auto* r = std::get_if<RadialDrift>(&model)) {
        const double s = norm(x, Level::zero);
        const double amp = s > 0.0 ? r->c_d * std::pow(s, r->m - 2.0) : 0.0;
        return amp * x;
    }
    return euler::drift_eval(std::get<SpectralEulerDrift>(model), x);
}

/// <b(x), x> at the given scale level.
inline double drift_pairing(const DriftModel& model, const GalerkinState& x, Level level) {
    return inner(drift_eval(model, x), x, level);
}

/// Galerkin drift b^n = Pi_n b.
inline GalerkinState drift_projected(const DriftModel& model, const GalerkinState& x, int n_sub) {
    return project(drift_eval(model, x), n_sub);
}

} // namespace stratreg
