#pragma once

// Reproducible Monte Carlo harness over independent paths. Per-trial seeds
// come from the frozen mixing of (master_seed, trial index); trials run on
// a small thread pool into an index-addressed result table, so aggregates
// never depend on execution order. A trial that throws is recorded as
// failed with its reason. When the parameters are not admissible the
// harness refuses to fit the generator constant or report a Markov bound
// and marks the run exploratory; the bound, when present, is the finite-N
// finite-T surrogate V(x0) e^(cT) / log N with the fitted c.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "integrate.hpp"
#include "io.hpp"
#include "lyapunov.hpp"
#include "version.hpp"

namespace stratreg {

using Json = nlohmann::ordered_json;

struct McConfig {
    int trials = 100;
    int parallelism = 0; // 0: hardware concurrency (capped at 64)
    std::uint64_t master_seed = 0;
    SolverConfig solver;
    DriftModel drift;
    NoiseSpec noise;
    QSpectrum q;
    LyapunovSpec lyapunov;
    ScanPlan scan;
    GalerkinState x0;
    Json config_echo = Json::object();
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string fail_reason;
    bool exited = false;
    std::string exit_reason;
    double exit_time = 0.0;    // valid when exited
    double max_norm_e0 = 0.0;  // over recorded samples
};

struct McSummary {
    int schema_version = 1;
    std::string version;
    int trials = 0;
    int failed = 0;
    int exits = 0;
    double exit_fraction = 0.0;
    double exit_fraction_se = 0.0; // binomial standard error
    std::optional<std::array<double, 3>> exit_time_quantiles; // p10, p50, p90
    std::array<double, 3> max_norm_quantiles{};               // p10, p50, p90
    bool admissible = false;
    bool exploratory = false; // no generator constant available
    std::optional<double> fitted_c;
    std::optional<double> markov_bound_value; // unclipped
    bool bound_satisfied = false;             // exit_fraction <= bound + 3 SE (when bound exists)
    std::string note;
    Json config_echo = Json::object();

    bool operator==(const McSummary&) const = default;
};

namespace detail {
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = p * double(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - double(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}
} // namespace detail

inline TrialResult run_trial(const McConfig& cfg, int trial) {
    TrialResult res;
    res.trial = trial;
    res.seed = rng::derive_trial_seed(cfg.master_seed, static_cast<std::uint64_t>(trial));
    try {
        SolverConfig solver = cfg.solver;
        solver.seed = res.seed;
        const PathRecord rec = simulate_path(cfg.x0, solver, cfg.drift, cfg.noise, cfg.q);
        res.exited = rec.exit_time.has_value();
        res.exit_reason = to_string(rec.exit_reason);
        res.exit_time = rec.exit_time.value_or(0.0);
        for (const auto& n : rec.norms) res.max_norm_e0 = std::max(res.max_norm_e0, n[1]);
    } catch (const std::exception& e) {
        res.failed = true;
        res.fail_reason = e.what();
    }
    return res;
}

inline std::vector<TrialResult> run_trials(const McConfig& cfg) {
    if (cfg.trials < 1) throw ConfigError("mc: trials must be >= 1");
    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
    int workers = cfg.parallelism;
    if (workers <= 0)
        workers = static_cast<int>(std::min(64u, std::max(1u, std::thread::hardware_concurrency())));
    workers = std::min(workers, cfg.trials);

    if (workers <= 1) {
        for (int i = 0; i < cfg.trials; ++i) results[static_cast<std::size_t>(i)] = run_trial(cfg, i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int i = w; i < cfg.trials; i += workers)
                    results[static_cast<std::size_t>(i)] = run_trial(cfg, i);
            });
        for (auto& th : pool) th.join();
    }
    return results;
}

inline McSummary summarize(const McConfig& cfg, const std::vector<TrialResult>& results) {
    McSummary s;
    s.version = STRATREG_VERSION;
    s.trials = static_cast<int>(results.size());
    s.config_echo = cfg.config_echo;
    s.note = "empirical surrogate at finite N, T with the fitted generator constant";

    std::vector<double> exit_times;
    std::vector<double> max_norms;
    for (const TrialResult& r : results) {
        if (r.failed) {
            ++s.failed;
            continue;
        }
        max_norms.push_back(r.max_norm_e0);
        if (r.exited) {
            ++s.exits;
            exit_times.push_back(r.exit_time);
        }
    }
    const int ok = s.trials - s.failed;
    if (ok > 0) {
        s.exit_fraction = double(s.exits) / double(ok);
        s.exit_fraction_se =
            std::sqrt(std::max(0.0, s.exit_fraction * (1.0 - s.exit_fraction)) / double(ok));
    }
    if (!exit_times.empty())
        s.exit_time_quantiles = {detail::quantile(exit_times, 0.1), detail::quantile(exit_times, 0.5),
                                 detail::quantile(exit_times, 0.9)};
    s.max_norm_quantiles = {detail::quantile(max_norms, 0.1), detail::quantile(max_norms, 0.5),
                            detail::quantile(max_norms, 0.9)};

    const AdmissibilityReport rep = admissibility(cfg.noise, cfg.q, cfg.drift);
    s.admissible = rep.admissible();
    if (s.admissible) {
        try {
            const double c =
                fit_generator_constant(cfg.drift, cfg.noise, cfg.q, cfg.lyapunov, cfg.x0.space, cfg.scan);
            s.fitted_c = c;
            s.markov_bound_value =
                markov_bound(cfg.x0, c, cfg.solver.t_end, cfg.solver.blowup_n, cfg.lyapunov);
            s.bound_satisfied =
                s.exit_fraction <= *s.markov_bound_value + 3.0 * s.exit_fraction_se;
        } catch (const ConfigError&) {
            s.exploratory = true; // scan tripped the slope test
        }
    } else {
        s.exploratory = true;
    }
    return s;
}

inline McSummary run_montecarlo(const McConfig& cfg) { return summarize(cfg, run_trials(cfg)); }

// Serialization. Doubles survive the JSON round trip exactly.

inline Json to_json(const McSummary& s) {
    Json j;
    j["schema_version"] = s.schema_version;
    j["kind"] = "mc_summary";
    j["version"] = s.version;
    j["trials"] = s.trials;
    j["failed"] = s.failed;
    j["exits"] = s.exits;
    j["exit_fraction"] = s.exit_fraction;
    j["exit_fraction_se"] = s.exit_fraction_se;
    if (s.exit_time_quantiles)
        j["exit_time_quantiles"] = {(*s.exit_time_quantiles)[0], (*s.exit_time_quantiles)[1],
                                    (*s.exit_time_quantiles)[2]};
    else
        j["exit_time_quantiles"] = nullptr;
    j["max_norm_quantiles"] = {s.max_norm_quantiles[0], s.max_norm_quantiles[1],
                               s.max_norm_quantiles[2]};
    j["admissible"] = s.admissible;
    j["exploratory"] = s.exploratory;
    j["fitted_c"] = s.fitted_c ? Json(*s.fitted_c) : Json(nullptr);
    j["markov_bound"] = s.markov_bound_value ? Json(*s.markov_bound_value) : Json(nullptr);
    j["bound_satisfied"] = s.bound_satisfied;
    j["note"] = s.note;
    j["config"] = s.config_echo;
    return j;
}

inline McSummary summary_from_json(const Json& j) {
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw ConfigError("summary: missing or unsupported schema_version");
    if (j.value("kind", "") != std::string("mc_summary"))
        throw ConfigError("summary: not an mc_summary document");
    McSummary s;
    s.version = j["version"].get<std::string>();
    s.trials = j["trials"].get<int>();
    s.failed = j["failed"].get<int>();
    s.exits = j["exits"].get<int>();
    s.exit_fraction = j["exit_fraction"].get<double>();
    s.exit_fraction_se = j["exit_fraction_se"].get<double>();
    if (!j["exit_time_quantiles"].is_null()) {
        const auto& a = j["exit_time_quantiles"];
        s.exit_time_quantiles = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
    }
    const auto& m = j["max_norm_quantiles"];
    s.max_norm_quantiles = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>()};
    s.admissible = j["admissible"].get<bool>();
    s.exploratory = j["exploratory"].get<bool>();
    if (!j["fitted_c"].is_null()) s.fitted_c = j["fitted_c"].get<double>();
    if (!j["markov_bound"].is_null()) s.markov_bound_value = j["markov_bound"].get<double>();
    s.bound_satisfied = j["bound_satisfied"].get<bool>();
    s.note = j["note"].get<std::string>();
    s.config_echo = j["config"];
    return s;
}

inline void persist(const McSummary& s, const std::string& path) {
    io::write_text_file(path, to_json(s).dump(2) + "\n");
}

inline McSummary load_summary(const std::string& path) {
    return summary_from_json(Json::parse(io::read_text_file(path)));
}

/// Per-trial CSV: one data row per trial.
inline void write_trials_csv(const std::vector<TrialResult>& results, const Json& config_echo,
                             const std::string& path) {
    io::CsvWriter csv(path);
    csv.comment(std::string("version: ") + STRATREG_VERSION);
    csv.comment("config: " + config_echo.dump());
    csv.row({"trial", "seed", "failed", "exited", "exit_reason", "exit_time", "max_norm_0"});
    for (const TrialResult& r : results)
        csv.row({io::fmt(r.trial), io::fmt(r.seed), r.failed ? "1" : "0", r.exited ? "1" : "0",
                 r.failed ? r.fail_reason : r.exit_reason, io::fmt(r.exit_time),
                 io::fmt(r.max_norm_e0)});
}

/// One row of the rank-one weight sweep.
struct SweepRow {
    double alpha = 0.0;
    double delta = 0.0;
    bool admissible = false;
    double exit_fraction = 0.0;
    std::optional<double> bound;
};

/// Sweep the rank-one weight over a grid with everything else held fixed.
/// Non-admissible rows are exploratory: exit statistics are still measured
/// but no bound is reported.
inline std::vector<SweepRow> alpha_sweep(const McConfig& base, const std::vector<double>& grid) {
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double alpha : grid) {
        McConfig cfg = base;
        cfg.noise.alpha = alpha;
        const McSummary s = run_montecarlo(cfg);
        const AdmissibilityReport rep = admissibility(cfg.noise, cfg.q, cfg.drift);
        SweepRow row;
        row.alpha = alpha;
        row.delta = rep.delta;
        row.admissible = s.admissible;
        row.exit_fraction = s.exit_fraction;
        row.bound = s.markov_bound_value;
        rows.push_back(row);
    }
    return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const Json& config_echo,
                            const std::string& path) {
    io::CsvWriter csv(path);
    csv.comment(std::string("version: ") + STRATREG_VERSION);
    csv.comment("config: " + config_echo.dump());
    csv.row({"alpha", "delta", "admissible", "exit_fraction", "bound"});
    for (const SweepRow& r : rows)
        csv.row({io::fmt(r.alpha), io::fmt(r.delta), r.admissible ? "1" : "0",
                 io::fmt(r.exit_fraction), r.bound ? io::fmt(*r.bound) : "nan"});
}

} // namespace stratreg
