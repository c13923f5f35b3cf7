#pragma once

// Unified run configuration: a flat dotted-key document (human-editable
// text, `key = value` per line) with a JSON equivalent (nested objects
// flatten to the same dotted keys). Unknown keys are errors; command-line
// overrides (key=value) win over file values; the effective config is
// echoed into every output. Validation turns the structural hypotheses of
// the model into hard rejects, and cmd-check style reporting evaluates the
// full checklist including the admissibility window and the margin delta.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "experiments.hpp"

namespace stratreg {

struct RunConfig {
    // space (radial drift only; the Euler drift derives its own space)
    int space_dim = 8;
    std::string space_weights_kind = "one_plus_k_squared"; // or "explicit"
    std::vector<double> space_weights_explicit;

    NoiseSpec noise;

    // q
    std::vector<double> q_lambdas = {1.0, 1.0};
    std::optional<double> q_power_lambda1;
    std::optional<double> q_power_exponent;
    int q_truncation = 0; // 0: space dimension (power law only)

    // drift
    std::string drift_kind = "radial";
    double drift_c_d = 1.0;
    double drift_m = 3.0;
    int drift_K = 8;
    int drift_s = 3;
    std::optional<double> euler_fitted_c_d; // externally fitted, optional

    std::optional<CutoffSpec> cutoff;

    std::optional<double> lyapunov_a;

    ScanPlan scan;

    SolverConfig solver;
    double x0_norm = 2.0;
    std::string x0_direction = "w1"; // or "random"

    // mc
    int mc_trials = 1000;
    std::uint64_t mc_master_seed = 0;
    int mc_parallelism = 0;

    // wongzakai study
    int wz_paths = 100;
    int wz_levels = 3;
    int wz_base_log2 = 4;       // coarsest mesh T * 2^-4
    int wz_level_step_log2 = 2; // next levels T * 2^-6, 2^-8, ...
    int wz_fine_log2 = 12;      // fine grid T * 2^-12

    // sweep
    std::optional<double> sweep_alpha_min;
    std::optional<double> sweep_alpha_max;
    int sweep_points = 9;
    int sweep_trials = 100;

    bool space_keys_seen = false;
    bool q_lambdas_seen = false;

    // --- derived objects -------------------------------------------------

    DriftModel make_drift() const {
        if (drift_kind == "radial") {
            RadialDrift d{drift_c_d, drift_m};
            d.validate();
            return d;
        }
        if (drift_kind == "euler2d") {
            SpectralEulerDrift d(drift_K, drift_s);
            d.fitted_c_d = euler_fitted_c_d;
            return d;
        }
        throw ConfigError("drift.kind must be \"radial\" or \"euler2d\"");
    }

    SolverConfig make_solver() const {
        SolverConfig s = solver;
        s.cutoff = cutoff;
        return s;
    }

    SpacePtr make_space_ptr(const DriftModel& drift) const {
        if (const auto* e = std::get_if<SpectralEulerDrift>(&drift)) {
            if (space_keys_seen)
                throw ConfigError("space.*: not configurable for drift.kind = euler2d "
                                  "(derived from drift.K and drift.s)");
            return e->space;
        }
        if (space_weights_kind == "one_plus_k_squared")
            return make_space_one_plus_k_squared(space_dim);
        if (space_weights_kind == "explicit") {
            if (static_cast<int>(space_weights_explicit.size()) != space_dim)
                throw ConfigError("space.weights: explicit list length must equal space.dim");
            return make_space(space_weights_explicit);
        }
        throw ConfigError("space.weights must be \"one_plus_k_squared\" or an explicit list");
    }

    QSpectrum make_q(const SpacePtr& space) const {
        QSpectrum q;
        if (q_power_lambda1 || q_power_exponent) {
            if (!q_power_lambda1 || !q_power_exponent)
                throw ConfigError("q.power_law: both lambda1 and q are required");
            if (q_lambdas_seen)
                throw ConfigError("q: give either q.lambdas or q.power_law, not both");
            const int trunc = q_truncation > 0 ? q_truncation : space->dim();
            q = make_q_power_law(*q_power_lambda1, *q_power_exponent, trunc);
        } else {
            q = make_q_explicit(q_lambdas);
        }
        if (q.channels() > space->dim())
            throw ConfigError("q: more eigenvalues than space dimensions");
        return q;
    }

    LyapunovSpec make_lyap() const { return make_lyapunov(noise.radius, lyapunov_a.value_or(0.0)); }

    GalerkinState make_x0(const SpacePtr& space) const {
        if (!(x0_norm >= 0.0)) throw ConfigError("solver.x0_norm must be non-negative");
        GalerkinState x = zero_state(space);
        if (x0_direction == "w1") {
            x = basis_w(space, 0);
        } else if (x0_direction == "random") {
            for (int j = 0; j < space->dim(); ++j)
                x[j] = rng::gaussian({solver.seed, 0x78306469ULL}, 0, 0,
                                     static_cast<std::uint64_t>(j));
            const double n = norm(x, Level::zero);
            if (n == 0.0) throw ConfigError("solver.x0_direction: degenerate random direction");
            x = (1.0 / n) * x;
        } else {
            throw ConfigError("solver.x0_direction must be \"w1\" or \"random\"");
        }
        return x0_norm * x;
    }

    McConfig make_mc() const {
        McConfig mc;
        mc.trials = mc_trials;
        mc.parallelism = mc_parallelism;
        mc.master_seed = mc_master_seed;
        mc.solver = solver;
        mc.solver.cutoff = cutoff;
        mc.drift = make_drift();
        mc.noise = noise;
        const SpacePtr space = make_space_ptr(mc.drift);
        mc.q = make_q(space);
        mc.lyapunov = make_lyap();
        mc.scan = scan;
        mc.x0 = make_x0(space);
        mc.config_echo = to_json();
        return mc;
    }

    // --- validation ------------------------------------------------------

    /// Hard structural checks. `admissibility_demanded` additionally requires
    /// a non-degenerate window (at least two positive eigenvalues).
    void validate(bool admissibility_demanded) const {
        noise.validate();
        if (!(noise.eta > 1.0)) throw ConfigError("noise.eta must be > 1");
        const DriftModel drift = make_drift();
        const GrowthBound gb = growth_bound(drift);
        if (noise.eta < gb.m / 2.0)
            throw ConfigError("noise.eta must be >= m/2 (got eta = " + std::to_string(noise.eta) +
                              ", m = " + std::to_string(gb.m) + ")");
        const SpacePtr space = make_space_ptr(drift);
        const QSpectrum q = make_q(space);
        if (q_power_exponent && !(*q_power_exponent > 3.0))
            throw ConfigError("q.power_law.q must be > 3 for a trace-class covariance "
                              "on the 1+k^2 weight ladder");
        if (admissibility_demanded && q.positive_count() < 2)
            throw ConfigError("q: at least two positive eigenvalues are required "
                              "(the admissibility window is empty otherwise)");
        make_lyap();
        solver.validate(noise.radius);
        if (cutoff) cutoff->validate();
        if (mc_trials < 1) throw ConfigError("mc.trials must be >= 1");
        make_x0(space);
    }

    // --- checklist report --------------------------------------------------

    struct CheckItem {
        std::string name;
        bool pass;
        std::string detail;
    };

    std::vector<CheckItem> check_report() const {
        std::vector<CheckItem> items;
        auto add = [&](std::string name, bool pass, std::string detail) {
            items.push_back({std::move(name), pass, std::move(detail)});
        };

        const DriftModel drift = make_drift();
        const GrowthBound gb = growth_bound(drift);
        const SpacePtr space = make_space_ptr(drift);
        const QSpectrum q = make_q(space);

        double tr_weighted = 0.0;
        for (int k = 0; k < q.channels(); ++k)
            tr_weighted += q.lambda(k) * space->weights[static_cast<std::size_t>(k)];
        if (q_power_exponent) {
            const bool ok = *q_power_exponent > 3.0;
            add("covariance trace (sum lambda_k mu_k)", ok,
                "power law exponent " + io::fmt(*q_power_exponent) +
                    (ok ? " > 3; truncated sum " : " <= 3 diverges on 1+k^2 weights; truncated sum ") +
                    io::fmt(tr_weighted));
        } else {
            add("covariance trace (sum lambda_k mu_k)", true,
                "explicit spectrum, sum = " + io::fmt(tr_weighted));
        }

        add("scale interpolation", true, "diagonal model: theta = 1/2, constant 1");
        add("projector bound", true, "coefficient truncation: constant 1");
        add("drift growth", gb.m > 2.0 && noise.radius >= 1.0,
            "m = " + io::fmt(gb.m) + ", R = " + io::fmt(noise.radius) +
                (gb.c_d ? ", c_D = " + io::fmt(*gb.c_d) : ", c_D fitted, not asserted"));
        add("noise growth exponent", noise.eta >= gb.m / 2.0 && noise.eta > 1.0,
            "eta = " + io::fmt(noise.eta) + " vs m/2 = " + io::fmt(gb.m / 2.0));

        const bool window_nonempty = q.positive_count() >= 2;
        add("window non-degenerate", window_nonempty,
            std::to_string(q.positive_count()) + " positive eigenvalue(s); need at least 2");

        if (noise.eta > 1.0) {
            const AdmissibilityReport rep = admissibility(noise, q, drift);
            add("alpha inside the window", rep.alpha_ok,
                "window (" + io::fmt(rep.lower) + ", " + io::fmt(rep.upper) + "), alpha = " +
                    io::fmt(noise.alpha) + ", delta = " + io::fmt(rep.delta));
            if (noise.eta == gb.m / 2.0) {
                add("amplitude condition at eta = m/2", rep.cn_condition,
                    rep.cn_condition_known
                        ? "(delta/2) c_N^2 = " + io::fmt(0.5 * rep.delta * noise.c_n * noise.c_n) +
                              " vs c_D = " + io::fmt(gb.c_d.value_or(0.0))
                        : "c_D not available for this drift; condition unverified");
            }
        } else {
            add("alpha inside the window", false, "eta <= 1: window analysis undefined");
        }
        return items;
    }

    // --- serialization -----------------------------------------------------

    Json to_json() const {
        Json j;
        if (drift_kind == "radial") {
            j["space"]["dim"] = space_dim;
            if (space_weights_kind == "explicit")
                j["space"]["weights"] = space_weights_explicit;
            else
                j["space"]["weights"] = space_weights_kind;
        }
        j["noise"]["c_n"] = noise.c_n;
        j["noise"]["eta"] = noise.eta;
        j["noise"]["alpha"] = noise.alpha;
        j["noise"]["radius"] = noise.radius;
        j["noise"]["psi_sharpness"] = noise.psi_sharpness;
        if (q_power_lambda1) {
            j["q"]["power_law"]["lambda1"] = *q_power_lambda1;
            j["q"]["power_law"]["q"] = *q_power_exponent;
            j["q"]["truncation"] = q_truncation;
        } else {
            j["q"]["lambdas"] = q_lambdas;
        }
        j["drift"]["kind"] = drift_kind;
        if (drift_kind == "radial") {
            j["drift"]["c_d"] = drift_c_d;
            j["drift"]["m"] = drift_m;
        } else {
            j["drift"]["K"] = drift_K;
            j["drift"]["s"] = drift_s;
            if (euler_fitted_c_d) j["drift"]["c_d"] = *euler_fitted_c_d;
        }
        if (cutoff) {
            j["cutoff"]["M"] = cutoff->M;
            j["cutoff"]["sharpness"] = cutoff->sharpness;
        }
        j["lyapunov"]["a"] = lyapunov_a ? Json(*lyapunov_a) : Json(nullptr);
        j["scan"]["shells"] = scan.shells;
        j["scan"]["directions"] = scan.directions;
        j["scan"]["rmax"] = scan.r_max;
        j["solver"]["scheme"] = solver.scheme == Scheme::ito_em
                                    ? "ito_em"
                                    : (solver.scheme == Scheme::strat_heun ? "strat_heun"
                                                                           : "wong_zakai");
        j["solver"]["dt"] = solver.dt;
        j["solver"]["t_end"] = solver.t_end;
        j["solver"]["blowup_n"] = solver.blowup_n;
        j["solver"]["galerkin_n"] = solver.galerkin_n;
        j["solver"]["seed"] = solver.seed;
        j["solver"]["record_every"] = solver.record_every;
        j["solver"]["x0_norm"] = x0_norm;
        j["solver"]["x0_direction"] = x0_direction;
        if (solver.wz_coarse_dt > 0.0) j["solver"]["wz_coarse_dt"] = solver.wz_coarse_dt;
        j["mc"]["trials"] = mc_trials;
        j["mc"]["master_seed"] = mc_master_seed;
        j["mc"]["parallelism"] = mc_parallelism;
        j["wz"]["paths"] = wz_paths;
        j["wz"]["levels"] = wz_levels;
        j["wz"]["base_log2"] = wz_base_log2;
        j["wz"]["level_step_log2"] = wz_level_step_log2;
        j["wz"]["fine_log2"] = wz_fine_log2;
        if (sweep_alpha_min) j["sweep"]["alpha_min"] = *sweep_alpha_min;
        if (sweep_alpha_max) j["sweep"]["alpha_max"] = *sweep_alpha_max;
        j["sweep"]["points"] = sweep_points;
        j["sweep"]["trials"] = sweep_trials;
        return j;
    }
};

namespace configio {

/// Flatten nested JSON to dotted keys; scalars and arrays are leaves.
inline void flatten(const Json& j, const std::string& prefix,
                    std::vector<std::pair<std::string, Json>>& out) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            const std::string path = prefix.empty() ? key : prefix + "." + key;
            if (value.is_object())
                flatten(value, path, out);
            else
                out.emplace_back(path, value);
        }
    }
}

inline std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Parse one raw text value: JSON literal if it parses, bare string otherwise.
inline Json parse_value(const std::string& raw) {
    const std::string v = strip(raw);
    if (!v.empty() && (v.front() == '"' || v.front() == '[' || v.front() == '{' ||
                       v.front() == '-' || (v.front() >= '0' && v.front() <= '9') ||
                       v == "true" || v == "false" || v == "null")) {
        Json parsed = Json::parse(v, nullptr, false);
        if (!parsed.is_discarded()) return parsed;
    }
    return Json(v);
}

/// key = value lines with '#' comments.
inline std::vector<std::pair<std::string, Json>> parse_text(const std::string& content) {
    std::vector<std::pair<std::string, Json>> out;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= content.size()) {
        const std::size_t eol = content.find('\n', pos);
        const std::string line =
            content.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? content.size() + 1 : eol + 1;
        ++line_no;
        const std::string stripped = strip(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = strip(stripped.substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        out.emplace_back(key, parse_value(stripped.substr(eq + 1)));
    }
    return out;
}

inline double as_double(const std::string& key, const Json& v) {
    if (!v.is_number()) throw ConfigError(key + ": expected a number");
    return v.get<double>();
}
inline int as_int(const std::string& key, const Json& v) {
    if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
    return v.get<int>();
}
inline std::uint64_t as_u64(const std::string& key, const Json& v) {
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError(key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}
inline std::string as_string(const std::string& key, const Json& v) {
    if (!v.is_string()) throw ConfigError(key + ": expected a string");
    return v.get<std::string>();
}
inline std::vector<double> as_list(const std::string& key, const Json& v) {
    if (!v.is_array()) throw ConfigError(key + ": expected a list");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(key + ": list entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

/// Apply one dotted key; unknown keys are errors.
inline void apply(RunConfig& cfg, const std::string& key, const Json& v) {
    if (key == "space.dim") {
        cfg.space_dim = as_int(key, v);
        cfg.space_keys_seen = true;
    } else if (key == "space.weights") {
        if (v.is_array()) {
            cfg.space_weights_kind = "explicit";
            cfg.space_weights_explicit = as_list(key, v);
        } else {
            cfg.space_weights_kind = as_string(key, v);
        }
        cfg.space_keys_seen = true;
    } else if (key == "noise.c_n") {
        cfg.noise.c_n = as_double(key, v);
    } else if (key == "noise.eta") {
        cfg.noise.eta = as_double(key, v);
    } else if (key == "noise.alpha") {
        cfg.noise.alpha = as_double(key, v);
    } else if (key == "noise.radius") {
        cfg.noise.radius = as_double(key, v);
    } else if (key == "noise.psi_sharpness") {
        cfg.noise.psi_sharpness = as_double(key, v);
    } else if (key == "q.lambdas") {
        cfg.q_lambdas = as_list(key, v);
        cfg.q_lambdas_seen = true;
    } else if (key == "q.power_law.lambda1") {
        cfg.q_power_lambda1 = as_double(key, v);
    } else if (key == "q.power_law.q") {
        cfg.q_power_exponent = as_double(key, v);
    } else if (key == "q.truncation") {
        cfg.q_truncation = as_int(key, v);
    } else if (key == "drift.kind") {
        cfg.drift_kind = as_string(key, v);
    } else if (key == "drift.c_d") {
        cfg.drift_c_d = as_double(key, v);
        cfg.euler_fitted_c_d = cfg.drift_c_d;
    } else if (key == "drift.m") {
        cfg.drift_m = as_double(key, v);
    } else if (key == "drift.K") {
        cfg.drift_K = as_int(key, v);
    } else if (key == "drift.s") {
        cfg.drift_s = as_int(key, v);
    } else if (key == "cutoff.M") {
        if (!cfg.cutoff) cfg.cutoff = CutoffSpec{};
        cfg.cutoff->M = as_double(key, v);
    } else if (key == "cutoff.sharpness") {
        if (!cfg.cutoff) cfg.cutoff = CutoffSpec{};
        cfg.cutoff->sharpness = as_double(key, v);
    } else if (key == "lyapunov.a") {
        if (!v.is_null()) cfg.lyapunov_a = as_double(key, v);
    } else if (key == "scan.shells") {
        cfg.scan.shells = as_int(key, v);
    } else if (key == "scan.directions") {
        cfg.scan.directions = as_int(key, v);
    } else if (key == "scan.rmax") {
        cfg.scan.r_max = as_double(key, v);
    } else if (key == "solver.scheme") {
        const std::string s = as_string(key, v);
        if (s == "ito_em")
            cfg.solver.scheme = Scheme::ito_em;
        else if (s == "strat_heun")
            cfg.solver.scheme = Scheme::strat_heun;
        else if (s == "wong_zakai")
            cfg.solver.scheme = Scheme::wong_zakai;
        else
            throw ConfigError("solver.scheme must be ito_em, strat_heun or wong_zakai");
    } else if (key == "solver.dt") {
        cfg.solver.dt = as_double(key, v);
    } else if (key == "solver.t_end") {
        cfg.solver.t_end = as_double(key, v);
    } else if (key == "solver.blowup_n") {
        cfg.solver.blowup_n = as_double(key, v);
    } else if (key == "solver.galerkin_n") {
        cfg.solver.galerkin_n = as_int(key, v);
    } else if (key == "solver.seed") {
        cfg.solver.seed = as_u64(key, v);
    } else if (key == "solver.record_every") {
        cfg.solver.record_every = as_int(key, v);
    } else if (key == "solver.x0_norm") {
        cfg.x0_norm = as_double(key, v);
    } else if (key == "solver.x0_direction") {
        cfg.x0_direction = as_string(key, v);
    } else if (key == "solver.wz_coarse_dt") {
        cfg.solver.wz_coarse_dt = as_double(key, v);
    } else if (key == "mc.trials") {
        cfg.mc_trials = as_int(key, v);
    } else if (key == "mc.master_seed") {
        cfg.mc_master_seed = as_u64(key, v);
    } else if (key == "mc.parallelism") {
        cfg.mc_parallelism = as_int(key, v);
    } else if (key == "wz.paths") {
        cfg.wz_paths = as_int(key, v);
    } else if (key == "wz.levels") {
        cfg.wz_levels = as_int(key, v);
    } else if (key == "wz.base_log2") {
        cfg.wz_base_log2 = as_int(key, v);
    } else if (key == "wz.level_step_log2") {
        cfg.wz_level_step_log2 = as_int(key, v);
    } else if (key == "wz.fine_log2") {
        cfg.wz_fine_log2 = as_int(key, v);
    } else if (key == "sweep.alpha_min") {
        cfg.sweep_alpha_min = as_double(key, v);
    } else if (key == "sweep.alpha_max") {
        cfg.sweep_alpha_max = as_double(key, v);
    } else if (key == "sweep.points") {
        cfg.sweep_points = as_int(key, v);
    } else if (key == "sweep.trials") {
        cfg.sweep_trials = as_int(key, v);
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

} // namespace configio

/// Load a config document (.json for JSON, anything else for key = value
/// text) and apply overrides on top.
inline RunConfig load_config(const std::string& path,
                             const std::vector<std::pair<std::string, Json>>& overrides = {}) {
    RunConfig cfg;
    const std::string content = io::read_text_file(path);
    std::vector<std::pair<std::string, Json>> entries;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        Json parsed;
        try {
            parsed = Json::parse(content);
        } catch (const std::exception& e) {
            throw ConfigError(path + ": " + e.what());
        }
        configio::flatten(parsed, "", entries);
    } else {
        entries = configio::parse_text(content);
    }
    for (const auto& [key, value] : entries) configio::apply(cfg, key, value);
    for (const auto& [key, value] : overrides) configio::apply(cfg, key, value);
    return cfg;
}

} // namespace stratreg
