#pragma once

// Finite-dimensional model of a Hilbert scale E1 cc E0 -> E-1 as weighted
// coefficient spaces: coefficients are stored against an E-1-orthonormal
// basis {e_k}, and the three norms are
//
//   |x|_{-1}^2 = sum x_k^2,   |x|_0^2 = sum mu_k x_k^2,   |x|_1^2 = sum mu_k^2 x_k^2,
//
// for weights 1 <= mu_1 <= mu_2 <= ... The interpolation inequality
// |x|_0^2 <= |x|_1 |x|_{-1} then holds with constant 1 (Cauchy-Schwarz),
// and the Galerkin projector (zeroing trailing coefficients) is
// non-expansive at every level.

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace stratreg {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Norm level on the scale: -1 (ambient), 0 (pivot), +1 (regular).
enum class Level : int { minus1 = -1, zero = 0, plus1 = 1 };

struct WeightedSpace {
    std::vector<double> weights; // mu_k, non-decreasing, >= 1

    int dim() const { return static_cast<int>(weights.size()); }

    /// mu_k^(level+1): the per-coefficient weight of the squared norm.
    double level_weight(int k, Level level) const {
        const double mu = weights[static_cast<std::size_t>(k)];
        switch (level) {
            case Level::minus1: return 1.0;
            case Level::zero: return mu;
            case Level::plus1: return mu * mu;
        }
        return 1.0;
    }
};

using SpacePtr = std::shared_ptr<const WeightedSpace>;

inline SpacePtr make_space(std::vector<double> weights) {
    if (weights.empty()) throw ConfigError("space: dimension must be positive");
    double prev = 1.0;
    for (double mu : weights) {
        if (!(mu >= 1.0)) throw ConfigError("space: weights must be >= 1");
        if (mu < prev) throw ConfigError("space: weights must be non-decreasing");
        prev = mu;
    }
    return std::make_shared<const WeightedSpace>(WeightedSpace{std::move(weights)});
}

/// Default weight ladder mu_k = 1 + k^2 (k = 1..n).
inline SpacePtr make_space_one_plus_k_squared(int n) {
    if (n <= 0) throw ConfigError("space: dimension must be positive");
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) w[static_cast<std::size_t>(k - 1)] = 1.0 + double(k) * double(k);
    return make_space(std::move(w));
}

/// Coefficient vector against the E-1-orthonormal basis of its space.
struct GalerkinState {
    SpacePtr space;
    std::vector<double> coeffs;

    GalerkinState() = default;
    GalerkinState(SpacePtr s, std::vector<double> c) : space(std::move(s)), coeffs(std::move(c)) {
        if (!space) throw ConfigError("state: null space");
        if (static_cast<int>(coeffs.size()) != space->dim())
            throw ConfigError("state: coefficient count does not match space dimension");
    }

    int dim() const { return static_cast<int>(coeffs.size()); }
    double operator[](int k) const { return coeffs[static_cast<std::size_t>(k)]; }
    double& operator[](int k) { return coeffs[static_cast<std::size_t>(k)]; }
};

inline GalerkinState zero_state(const SpacePtr& space) {
    return {space, std::vector<double>(static_cast<std::size_t>(space->dim()), 0.0)};
}

/// E-1-orthonormal basis vector e_k (0-based index).
inline GalerkinState basis_e(const SpacePtr& space, int k) {
    if (k < 0 || k >= space->dim()) throw ConfigError("basis_e: index out of range");
    GalerkinState x = zero_state(space);
    x[k] = 1.0;
    return x;
}

/// E0-normalized basis vector w_k = e_k / sqrt(mu_k) (0-based index).
inline GalerkinState basis_w(const SpacePtr& space, int k) {
    if (k < 0 || k >= space->dim()) throw ConfigError("basis_w: index out of range");
    GalerkinState x = zero_state(space);
    x[k] = 1.0 / std::sqrt(space->weights[static_cast<std::size_t>(k)]);
    return x;
}

namespace detail {
inline void require_same_space(const GalerkinState& x, const GalerkinState& y, const char* op) {
    if (x.dim() != y.dim())
        throw ConfigError(std::string(op) + ": dimension mismatch (" + std::to_string(x.dim()) +
                          " vs " + std::to_string(y.dim()) + ")");
}
} // namespace detail

inline double inner(const GalerkinState& x, const GalerkinState& y, Level level) {
    detail::require_same_space(x, y, "inner");
    const WeightedSpace& sp = *x.space;
    double acc = 0.0;
    for (int k = 0; k < x.dim(); ++k) acc += sp.level_weight(k, level) * x[k] * y[k];
    return acc;
}

inline double norm_sq(const GalerkinState& x, Level level) {
    const WeightedSpace& sp = *x.space;
    double acc = 0.0;
    for (int k = 0; k < x.dim(); ++k) acc += sp.level_weight(k, level) * x[k] * x[k];
    return acc;
}

inline double norm(const GalerkinState& x, Level level) { return std::sqrt(norm_sq(x, level)); }

/// Galerkin projector Pi_n: zero all coefficients beyond the first n_sub.
inline GalerkinState project(const GalerkinState& x, int n_sub) {
    if (n_sub < 0 || n_sub > x.dim())
        throw ConfigError("project: subspace dimension " + std::to_string(n_sub) +
                          " out of range for dimension " + std::to_string(x.dim()));
    GalerkinState y = x;
    for (int k = n_sub; k < y.dim(); ++k) y[k] = 0.0;
    return y;
}

inline bool all_finite(const GalerkinState& x) {
    for (double c : x.coeffs)
        if (!std::isfinite(c)) return false;
    return true;
}

// Small vector algebra used by the integrators.

inline GalerkinState& axpy_inplace(GalerkinState& y, double a, const GalerkinState& x) {
    detail::require_same_space(y, x, "axpy");
    for (int k = 0; k < y.dim(); ++k) y[k] += a * x[k];
    return y;
}

inline GalerkinState operator+(GalerkinState x, const GalerkinState& y) {
    axpy_inplace(x, 1.0, y);
    return x;
}

inline GalerkinState operator-(GalerkinState x, const GalerkinState& y) {
    axpy_inplace(x, -1.0, y);
    return x;
}

inline GalerkinState operator*(double a, GalerkinState x) {
    for (int k = 0; k < x.dim(); ++k) x[k] *= a;
    return x;
}

} // namespace stratreg
