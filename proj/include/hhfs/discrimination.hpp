#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hhfs/errors.hpp"
#include "hhfs/fitting.hpp"
#include "hhfs/ids_model.hpp"
#include "hhfs/kl.hpp"
#include "hhfs/mt_model.hpp"
#include "hhfs/parallel.hpp"
#include "hhfs/rng.hpp"
#include "hhfs/simulator.hpp"

namespace hhfs {

// Proximity thresholds for the parameter regions where the two models can
// produce the same final-size distributions.
struct DegeneracyThresholds {
    double proximity = 0.05;      // "near 0" for rate/probability gaps
    double near_critical = 0.02;  // infected fraction above the rejection floor
};

struct DegeneracyReport {
    double near_critical = std::numeric_limits<double>::quiet_NaN();
    double ids_local_min = std::numeric_limits<double>::quiet_NaN();       // min(ll_m, ll_s/gamma_s)
    double ids_local_prob_gap = std::numeric_limits<double>::quiet_NaN();  // |pl_mm - pl_sm|
    double mt_one_type = std::numeric_limits<double>::quiet_NaN();         // min(beta, 1-beta)
    double mt_escape_min = std::numeric_limits<double>::quiet_NaN();       // min(pi*_m, pi*_s)
    bool near_critical_flag = false;
    bool ids_local_min_flag = false;
    bool ids_local_prob_gap_flag = false;
    bool mt_one_type_flag = false;
    bool mt_escape_min_flag = false;

    bool any() const {
        return near_critical_flag || ids_local_min_flag || ids_local_prob_gap_flag ||
               mt_one_type_flag || mt_escape_min_flag;
    }
};

inline DegeneracyReport mt_degeneracy(const MtGenerationParams& params,
                                      const BalanceResult& balance,
                                      const DegeneracyThresholds& thr = {},
                                      double rejection_floor = 0.0) {
    DegeneracyReport r;
    r.near_critical = std::max(0.0, balance.z_mild + balance.z_severe - rejection_floor);
    r.mt_one_type = std::min(params.frac_mild, 1.0 - params.frac_mild);
    r.mt_escape_min = std::min(balance.pi_mild, balance.pi_severe);
    r.near_critical_flag = r.near_critical < thr.near_critical;
    r.mt_one_type_flag = r.mt_one_type < thr.proximity;
    r.mt_escape_min_flag = r.mt_escape_min < thr.proximity;
    return r;
}

inline DegeneracyReport ids_degeneracy(const IdsParams& params, double infected_fraction,
                                       const DegeneracyThresholds& thr = {},
                                       double rejection_floor = 1e-3) {
    DegeneracyReport r;
    r.near_critical = std::max(0.0, infected_fraction - rejection_floor);
    r.ids_local_min = std::min(params.local_rate_mild,
                               params.local_rate_severe / params.gamma_severe);
    r.ids_local_prob_gap = std::abs(params.pl_mm - params.pl_sm);
    r.near_critical_flag = r.near_critical < thr.near_critical;
    r.ids_local_min_flag = r.ids_local_min < thr.proximity;
    r.ids_local_prob_gap_flag = r.ids_local_prob_gap < thr.proximity;
    return r;
}

// Overall per-individual infected fraction implied by a final-size distribution.
inline double infected_fraction_of(const FinalSizeDistribution& d,
                                   const HouseholdSizeDistribution& dist) {
    double z = 0;
    for (int n = 1; n <= d.max_size(); ++n) z += dist.prop(n) * n * d.aggregates(n).p_inf;
    return z / dist.mean_size();
}

// 2x2 table of best fits: both models fitted to both models' asymptotic data.
struct CrossFitResult {
    FinalSizeDistribution data_mt, data_ids;
    MultiRunResult fits[2][2];  // [data (0 mt, 1 ids)][fitted model (0 mt, 1 ids)]

    double best_f(int data, int model) const {
        const MultiRunResult& r = fits[data][model];
        return r.runs[static_cast<std::size_t>(r.best_index)].f;
    }
    const FitResult& best(int data, int model) const {
        return fits[data][model].runs[static_cast<std::size_t>(fits[data][model].best_index)];
    }
};

inline CrossFitResult cross_fit_table(const MtGenerationParams& mt_truth,
                                      const IdsParams& ids_truth,
                                      const HouseholdSizeDistribution& dist, int n_runs,
                                      const FitRunConfig& base_cfg) {
    CrossFitResult out;
    out.data_mt = mt_asymptotic_final_size(mt_truth, dist);
    IdsFinalSizeOptions ids_opt;
    ids_opt.f_severe = base_cfg.f_severe;
    ids_opt.delta = base_cfg.delta;
    out.data_ids = ids_final_size(ids_truth, dist, ids_opt);
    for (int data = 0; data < 2; ++data) {
        TargetData target(data == 0 ? out.data_mt : out.data_ids, dist);
        for (int model = 0; model < 2; ++model) {
            FitRunConfig cfg = base_cfg;
            cfg.seed = derive_seed(base_cfg.seed, static_cast<std::uint64_t>(data * 2 + model));
            out.fits[data][model] =
                multi_run(model == 0 ? ModelKind::mt : ModelKind::ids, target, n_runs, cfg);
        }
    }
    return out;
}

struct SweepConfig {
    int n_datasets = 100;
    int runs_per_fit = 5;
    std::uint64_t seed = 0;
    FitRunConfig fit;
    DegeneracyThresholds thresholds;
    double ids_reject_floor = 1e-3;  // minimum infected fraction to accept an IDS draw
    int max_draw_attempts = 200;
    unsigned jobs = 1;
};

struct SweepRecord {
    int dataset = 0;
    bool generated = false;
    int draw_attempts = 0;
    std::vector<double> generator_theta;  // mt: 4 global, 4 local, beta; ids: packed params
    double best_f = std::numeric_limits<double>::quiet_NaN();
    DegeneracyReport degeneracy;
    std::string note;
};

// Draws random supercritical parameters for one model, generates its
// asymptotic data, and fits the other model. Subcritical draws are resampled;
// numerically failing datasets are recorded as skipped.
inline std::vector<SweepRecord> random_parameter_sweep(ModelKind generator,
                                                       const HouseholdSizeDistribution& dist,
                                                       const SweepConfig& cfg) {
    if (cfg.n_datasets < 1) throw validation_error("sweep: need at least one dataset");
    std::vector<SweepRecord> records(static_cast<std::size_t>(cfg.n_datasets));
    parallel_for(static_cast<std::size_t>(cfg.n_datasets), cfg.jobs, [&](std::size_t i) {
        SweepRecord& rec = records[i];
        rec.dataset = static_cast<int>(i);
        rng_engine rng = make_engine(cfg.seed, i);
        std::exponential_distribution<double> rate(1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        FinalSizeDistribution data;
        for (int attempt = 1; attempt <= cfg.max_draw_attempts; ++attempt) {
            rec.draw_attempts = attempt;
            try {
                if (generator == ModelKind::mt) {
                    MtGenerationParams p;
                    p.global = Rates2x2{rate(rng), rate(rng), rate(rng), rate(rng)};
                    p.local = Rates2x2{rate(rng), rate(rng), rate(rng), rate(rng)};
                    p.frac_mild = unit(rng);
                    BalanceResult bal = solve_balance(p, dist);
                    if (bal.subcritical) continue;
                    MtParams mp;
                    mp.pi_mild = bal.pi_mild;
                    mp.pi_severe = bal.pi_severe;
                    mp.local = p.local;
                    mp.frac_mild = p.frac_mild;
                    data = mt_final_size(mp, dist);
                    rec.generator_theta = {p.global.mm, p.global.ms, p.global.sm, p.global.ss,
                                           p.local.mm,  p.local.ms,  p.local.sm,  p.local.ss,
                                           p.frac_mild};
                    rec.degeneracy = mt_degeneracy(p, bal, cfg.thresholds);
                } else {
                    IdsParams p;
                    p.global_rate_mild = rate(rng);
                    p.global_rate_severe = rate(rng);
                    p.local_rate_mild = rate(rng);
                    p.local_rate_severe = rate(rng);
                    p.pg_mm = unit(rng);
                    p.pg_sm = unit(rng);
                    p.pl_mm = unit(rng);
                    p.pl_sm = unit(rng);
                    p.gamma_severe = std::max(rate(rng), 1e-12);
                    IdsFinalSizeOptions opt;
                    opt.f_severe = cfg.fit.f_severe;
                    opt.delta = cfg.fit.delta;
                    data = ids_final_size(p, dist, opt);
                    double z = infected_fraction_of(data, dist);
                    if (z < cfg.ids_reject_floor) continue;
                    rec.generator_theta = pack_ids(p);
                    rec.degeneracy =
                        ids_degeneracy(p, z, cfg.thresholds, cfg.ids_reject_floor);
                }
                rec.generated = true;
                break;
            } catch (const numerical_error& e) {
                rec.note = e.what();
                break;
            }
        }
        if (!rec.generated) return;

        TargetData target(data, dist);
        FitRunConfig fit_cfg = cfg.fit;
        fit_cfg.seed = derive_seed(cfg.seed, 0x8000000000000000ULL + i);
        MultiRunResult fits = multi_run(
            generator == ModelKind::mt ? ModelKind::ids : ModelKind::mt, target,
            cfg.runs_per_fit, fit_cfg);
        rec.best_f = fits.runs[static_cast<std::size_t>(fits.best_index)].f;
    });
    return records;
}

struct FiniteDataConfig {
    int n_datasets = 25;
    long long households = 10000;
    int runs_per_fit = 5;
    std::uint64_t seed = 0;
    FitRunConfig fit;
    double major_cutoff = 0.15;
    int initial_infectives = 10;
    int max_sim_attempts = 200;
    unsigned jobs = 1;
};

struct FiniteDataRecord {
    int dataset = 0;
    std::uint64_t sim_seed = 0;
    int sim_attempts = 0;
    double f_mt = std::numeric_limits<double>::quiet_NaN();
    double f_ids = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> theta_mt, theta_ids;  // best fitted parameter vectors
    bool correct_wins = false;
};

struct FiniteDataResult {
    ModelKind generator = ModelKind::mt;
    std::vector<FiniteDataRecord> records;
    int correct_wins = 0;
};

// Simulated-data discrimination: empirical final-size distributions from
// major outbreaks, both models fitted to each.
inline FiniteDataResult finite_data_experiment(ModelKind generator, const MtSimParams& mt_truth,
                                               const IdsParams& ids_truth,
                                               const HouseholdSizeDistribution& dist,
                                               const FiniteDataConfig& cfg) {
    if (cfg.n_datasets < 1)
        throw validation_error("finite data experiment: need at least one dataset");
    FiniteDataResult out;
    out.generator = generator;
    out.records.resize(static_cast<std::size_t>(cfg.n_datasets));
    PopulationConfig pop(dist, cfg.households);
    parallel_for(static_cast<std::size_t>(cfg.n_datasets), cfg.jobs, [&](std::size_t i) {
        FiniteDataRecord& rec = out.records[i];
        rec.dataset = static_cast<int>(i);
        SimConfig sim(generator == ModelKind::mt ? SimModel::mt : SimModel::ids, pop);
        sim.mt = mt_truth;
        sim.ids = ids_truth;
        sim.initial_infectives = cfg.initial_infectives;
        sim.initial_severity = InitialSeverity::severe;
        sim.major_cutoff = cfg.major_cutoff;

        SimOutcome outcome;
        for (int attempt = 0;; ++attempt) {
            if (attempt >= cfg.max_sim_attempts)
                throw numerical_error("finite data experiment: no major outbreak in " +
                                      std::to_string(cfg.max_sim_attempts) + " simulations");
            sim.seed = derive_seed(cfg.seed, i * 1000 + static_cast<std::uint64_t>(attempt));
            outcome = simulate_once(sim);
            rec.sim_attempts = attempt + 1;
            if (outcome.major) break;
        }
        rec.sim_seed = outcome.seed;

        TargetData target(counts_to_distribution(outcome.household_counts), dist,
                          cfg.households);
        FitRunConfig fit_cfg = cfg.fit;
        fit_cfg.seed = derive_seed(cfg.seed, 0xf1000000ULL + i * 2);
        MultiRunResult mt_fit = multi_run(ModelKind::mt, target, cfg.runs_per_fit, fit_cfg);
        fit_cfg.seed = derive_seed(cfg.seed, 0xf1000000ULL + i * 2 + 1);
        MultiRunResult ids_fit = multi_run(ModelKind::ids, target, cfg.runs_per_fit, fit_cfg);
        rec.f_mt = mt_fit.runs[static_cast<std::size_t>(mt_fit.best_index)].f;
        rec.f_ids = ids_fit.runs[static_cast<std::size_t>(ids_fit.best_index)].f;
        rec.theta_mt = mt_fit.runs[static_cast<std::size_t>(mt_fit.best_index)].theta;
        rec.theta_ids = ids_fit.runs[static_cast<std::size_t>(ids_fit.best_index)].theta;
        rec.correct_wins =
            generator == ModelKind::mt ? rec.f_mt < rec.f_ids : rec.f_ids < rec.f_mt;
    });
    for (const auto& r : out.records)
        if (r.correct_wins) ++out.correct_wins;
    return out;
}

struct HistogramBin {
    double lo = 0, hi = 0;
    long long count = 0;
};

inline std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins,
                                           double lo, double hi) {
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    double width = (hi - lo) / bins;
    for (int b = 0; b < bins; ++b) {
        out[static_cast<std::size_t>(b)].lo = lo + b * width;
        out[static_cast<std::size_t>(b)].hi = lo + (b + 1) * width;
    }
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        int b = static_cast<int>((v - lo) / width);
        if (b < 0) b = 0;
        if (b >= bins) b = bins - 1;
        ++out[static_cast<std::size_t>(b)].count;
    }
    return out;
}

} // namespace hhfs
