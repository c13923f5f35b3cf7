#pragma once

// C-infinity step profile with exact plateaus, shared by the noise
// activation psi and the truncation cutoff theta_M:
//
//   phi(t) = S(kt) / (S(kt) + S(k(1-t))),  S(u) = exp(-1/u) for u > 0 else 0,
//
// so phi == 0 for t <= 0, phi == 1 for t >= 1, all derivatives vanish at
// the plateau edges, and k (sharpness) steepens the transition.

#include <cmath>

namespace stratreg::smoothstep {

inline double bump(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
inline double bump_prime(double u) { return u > 0.0 ? std::exp(-1.0 / u) / (u * u) : 0.0; }

inline double phi(double t, double sharpness) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = bump(sharpness * t);
    const double b = bump(sharpness * (1.0 - t));
    return a / (a + b);
}

inline double phi_prime(double t, double sharpness) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = bump(sharpness * t);
    const double b = bump(sharpness * (1.0 - t));
    const double da = sharpness * bump_prime(sharpness * t);
    const double db = sharpness * bump_prime(sharpness * (1.0 - t));
    const double s = a + b;
    return (da * b + a * db) / (s * s);
}

} // namespace stratreg::smoothstep
