#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hhfs/errors.hpp"
#include "hhfs/ids_model.hpp"
#include "hhfs/kl.hpp"
#include "hhfs/mt_model.hpp"
#include "hhfs/nelder_mead.hpp"
#include "hhfs/parallel.hpp"
#include "hhfs/rng.hpp"

namespace hhfs {

enum class ModelKind { mt, ids };

inline const char* model_name(ModelKind k) { return k == ModelKind::mt ? "mt" : "ids"; }

inline int free_parameter_count(ModelKind k) { return k == ModelKind::mt ? 7 : 9; }

// Packed parameter vectors for the optimizer.
// MT:  [pi_m, pi_s, l_mm, l_ms, l_sm, l_ss, beta_m]
// IDS: [lg_m, lg_s, ll_m, ll_s, pg_mm, pg_sm, pl_mm, pl_sm, gamma_s]
inline MtParams unpack_mt(const std::vector<double>& x) {
    MtParams p;
    p.pi_mild = x[0];
    p.pi_severe = x[1];
    p.local = Rates2x2{x[2], x[3], x[4], x[5]};
    p.frac_mild = x[6];
    return p;
}

inline std::vector<double> pack_mt(const MtParams& p) {
    return {p.pi_mild, p.pi_severe, p.local.mm, p.local.ms, p.local.sm, p.local.ss, p.frac_mild};
}

inline IdsParams unpack_ids(const std::vector<double>& x) {
    IdsParams p;
    p.global_rate_mild = x[0];
    p.global_rate_severe = x[1];
    p.local_rate_mild = x[2];
    p.local_rate_severe = x[3];
    p.pg_mm = x[4];
    p.pg_sm = x[5];
    p.pl_mm = x[6];
    p.pl_sm = x[7];
    p.gamma_severe = x[8];
    return p;
}

inline std::vector<double> pack_ids(const IdsParams& p) {
    return {p.global_rate_mild, p.global_rate_severe, p.local_rate_mild, p.local_rate_severe,
            p.pg_mm, p.pg_sm, p.pl_mm, p.pl_sm, p.gamma_severe};
}

struct FitRunConfig {
    std::uint64_t seed = 1;
    int max_evals = 2000;
    double ftol_rel = 1e-10;
    int ids_starts = 20;  // candidate start points per IDS run; the best one seeds the search
    double prob_lo = 1e-6, prob_hi = 1.0 - 1e-6;
    double rate_lo = 0.0, rate_hi = 50.0;
    double gamma_lo = 1e-3, gamma_hi = 50.0;
    double penalty = 1e3;  // objective value for infeasible (subcritical / unsupported) points
    double f_severe = 1e-5;
    double delta = 1e-7;
    unsigned jobs = 1;
    bool record_trace = false;  // keep the per-iteration best values for debugging
};

inline std::pair<std::vector<double>, std::vector<double>> fit_bounds(ModelKind kind,
                                                                      const FitRunConfig& cfg) {
    if (kind == ModelKind::mt) {
        std::vector<double> lo{cfg.prob_lo, cfg.prob_lo, cfg.rate_lo, cfg.rate_lo,
                               cfg.rate_lo, cfg.rate_lo, cfg.prob_lo};
        std::vector<double> hi{cfg.prob_hi, cfg.prob_hi, cfg.rate_hi, cfg.rate_hi,
                               cfg.rate_hi, cfg.rate_hi, cfg.prob_hi};
        return {lo, hi};
    }
    std::vector<double> lo{cfg.rate_lo, cfg.rate_lo, cfg.rate_lo, cfg.rate_lo,
                           cfg.prob_lo, cfg.prob_lo, cfg.prob_lo, cfg.prob_lo, cfg.gamma_lo};
    std::vector<double> hi{cfg.rate_hi, cfg.rate_hi, cfg.rate_hi, cfg.rate_hi,
                           cfg.prob_hi, cfg.prob_hi, cfg.prob_hi, cfg.prob_hi, cfg.gamma_hi};
    return {lo, hi};
}

// Random start per the fitting protocol: rates ~ Exp(1), probabilities ~ U(0,1).
inline std::vector<double> draw_start(ModelKind kind, const FitRunConfig& cfg, rng_engine& rng) {
    std::exponential_distribution<double> rate(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x;
    if (kind == ModelKind::mt) {
        x = {unit(rng), unit(rng), rate(rng), rate(rng), rate(rng), rate(rng), unit(rng)};
    } else {
        x = {rate(rng), rate(rng), rate(rng), rate(rng), unit(rng),
             unit(rng), unit(rng), unit(rng), rate(rng)};
    }
    auto [lo, hi] = fit_bounds(kind, cfg);
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = std::min(hi[d], std::max(lo[d], x[d]));
    return x;
}

// KL objective for one model against fixed target data; infeasible parameter
// vectors score the penalty value so the simplex retreats without stalling.
class FitObjective {
public:
    FitObjective(ModelKind kind, const TargetData& target, const FitRunConfig& cfg)
        : kind_(kind), target_(target), cfg_(cfg) {}

    double operator()(const std::vector<double>& theta) const {
        try {
            FinalSizeDistribution p = model_distribution(theta);
            double f = kl_divergence(target_, p);
            return std::isfinite(f) ? f : cfg_.penalty;
        } catch (const numerical_error&) {
            return cfg_.penalty;
        }
    }

    FinalSizeDistribution model_distribution(const std::vector<double>& theta) const {
        if (kind_ == ModelKind::mt) return mt_final_size(unpack_mt(theta), target_.dist);
        IdsFinalSizeOptions opt;
        opt.f_severe = cfg_.f_severe;
        opt.delta = cfg_.delta;
        return ids_final_size(unpack_ids(theta), target_.dist, opt);
    }

private:
    ModelKind kind_;
    const TargetData& target_;
    FitRunConfig cfg_;
};

// (z_M lg_M/gamma_M + z_S lg_S/gamma_S, ll_S/gamma_S,
//  z_M lg_M pg_MM/gamma_M + z_S lg_S pg_SM/gamma_S): the parameter
// combinations that remain identifiable from final-size data.
inline std::array<double, 3> identifiability_functions(const IdsParams& p,
                                                       std::pair<double, double> z) {
    p.validate();
    auto [zm, zs] = z;
    double a = zm * p.global_rate_mild + zs * p.global_rate_severe / p.gamma_severe;
    double b = p.local_rate_severe / p.gamma_severe;
    double c = zm * p.global_rate_mild * p.pg_mm +
               zs * p.global_rate_severe * p.pg_sm / p.gamma_severe;
    return {a, b, c};
}

struct FitResult {
    ModelKind model = ModelKind::mt;
    std::vector<double> theta;
    double f = std::numeric_limits<double>::infinity();
    std::vector<double> start;
    int run_index = 0;
    int evaluations = 0;
    int iterations = 0;
    bool converged = false;
    std::array<double, 3> ident{std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN()};
    std::vector<std::pair<int, double>> trace;  // (iteration, incumbent f), when recorded
};

// One run: draw start(s), then simplex cycles from the incumbent until the
// relative improvement dries up or the evaluation budget is spent.
inline FitResult fit_model(ModelKind kind, const TargetData& target, const FitRunConfig& cfg,
                           int run_index = 0) {
    if (target.dist.max_size() < 3)
        throw validation_error("fit: household sizes up to at least 3 are required for the "
                               "models to be identifiable");
    FitObjective objective(kind, target, cfg);
    auto [lo, hi] = fit_bounds(kind, cfg);
    rng_engine rng = make_engine(cfg.seed, static_cast<std::uint64_t>(run_index));

    FitResult res;
    res.model = kind;
    res.run_index = run_index;

    int evals_used = 0;
    std::vector<double> x0;
    if (kind == ModelKind::mt) {
        x0 = draw_start(kind, cfg, rng);
    } else {
        double best_f = std::numeric_limits<double>::infinity();
        for (int s = 0; s < cfg.ids_starts; ++s) {
            std::vector<double> cand = draw_start(kind, cfg, rng);
            double f = objective(cand);
            ++evals_used;
            if (f < best_f) {
                best_f = f;
                x0 = cand;
            }
        }
    }
    res.start = x0;

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> xbest = x0;
    double step_frac = 0.05;
    bool tol_reached = false;
    while (evals_used < cfg.max_evals) {
        NelderMeadOptions opt;
        opt.max_evals = cfg.max_evals - evals_used;
        opt.ftol_rel = cfg.ftol_rel;
        opt.init_step_frac = step_frac;
        std::function<void(int, double)> trace_cb;
        if (cfg.record_trace) {
            int base = res.iterations;
            trace_cb = [&res, base](int iter, double fbest) {
                res.trace.emplace_back(base + iter, fbest);
            };
        }
        NelderMeadResult nm = nelder_mead(
            [&objective](const std::vector<double>& x) { return objective(x); }, xbest, lo, hi,
            opt, trace_cb);
        evals_used += nm.evaluations;
        res.iterations += nm.iterations;
        double improvement = best - nm.f;
        if (nm.f < best) {
            best = nm.f;
            xbest = nm.x;
        }
        if (improvement <= cfg.ftol_rel * std::max(std::abs(best), 1e-30) && nm.converged) {
            tol_reached = true;
            break;
        }
        step_frac = std::max(step_frac * 0.3, 1e-7);
    }

    res.theta = xbest;
    res.f = best;
    res.evaluations = evals_used;
    res.converged = tol_reached;
    if (kind == ModelKind::ids)
        res.ident = identifiability_functions(unpack_ids(xbest), target.attack_fractions());
    return res;
}

struct MultiRunSummary {
    int count = 0;                 // runs entering the trimmed summary
    std::vector<double> theta_mean, theta_sd;
    double f_mean = 0, f_sd = 0;
    std::array<double, 3> ident_mean{0, 0, 0}, ident_sd{0, 0, 0};
};

struct MultiRunResult {
    std::vector<FitResult> runs;
    int best_index = 0;
    MultiRunSummary best_fraction;  // over the best 90% of runs
};

inline MultiRunSummary summarize_runs(const std::vector<const FitResult*>& runs) {
    MultiRunSummary s;
    s.count = static_cast<int>(runs.size());
    if (runs.empty()) return s;
    std::size_t dim = runs[0]->theta.size();
    s.theta_mean.assign(dim, 0.0);
    s.theta_sd.assign(dim, 0.0);
    for (const FitResult* r : runs) {
        for (std::size_t d = 0; d < dim; ++d) s.theta_mean[d] += r->theta[d];
        s.f_mean += r->f;
        for (int g = 0; g < 3; ++g) s.ident_mean[static_cast<std::size_t>(g)] += r->ident[static_cast<std::size_t>(g)];
    }
    double inv = 1.0 / s.count;
    for (auto& v : s.theta_mean) v *= inv;
    s.f_mean *= inv;
    for (auto& v : s.ident_mean) v *= inv;
    for (const FitResult* r : runs) {
        for (std::size_t d = 0; d < dim; ++d) {
            double dd = r->theta[d] - s.theta_mean[d];
            s.theta_sd[d] += dd * dd;
        }
        double df = r->f - s.f_mean;
        s.f_sd += df * df;
        for (std::size_t g = 0; g < 3; ++g) {
            double dg = r->ident[g] - s.ident_mean[g];
            s.ident_sd[g] += dg * dg;
        }
    }
    if (s.count > 1) {
        double nrm = 1.0 / (s.count - 1);
        for (auto& v : s.theta_sd) v = std::sqrt(v * nrm);
        s.f_sd = std::sqrt(s.f_sd * nrm);
        for (auto& v : s.ident_sd) v = std::sqrt(v * nrm);
    }
    return s;
}

// Independent runs under derived seeds; the trimmed summary covers the best
// 90% so the occasional stuck run does not pollute the parameter statistics.
inline MultiRunResult multi_run(ModelKind kind, const TargetData& target, int n_runs,
                                const FitRunConfig& cfg) {
    if (n_runs < 1) throw validation_error("multi_run: need at least one run");
    MultiRunResult out;
    out.runs.resize(static_cast<std::size_t>(n_runs));
    parallel_for(static_cast<std::size_t>(n_runs), cfg.jobs, [&](std::size_t i) {
        out.runs[i] = fit_model(kind, target, cfg, static_cast<int>(i));
    });
    for (int i = 1; i < n_runs; ++i)
        if (out.runs[static_cast<std::size_t>(i)].f < out.runs[static_cast<std::size_t>(out.best_index)].f)
            out.best_index = i;

    std::vector<const FitResult*> sorted;
    sorted.reserve(out.runs.size());
    for (const auto& r : out.runs) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const FitResult* a, const FitResult* b) { return a->f < b->f; });
    std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                    std::llround(0.9 * n_runs)));
    sorted.resize(keep);
    out.best_fraction = summarize_runs(sorted);
    return out;
}

struct PseudoDiagnostics {
    double log_pseudolikelihood = 0;
    double lambda_statistic = 0;  // -2 log Lambda_m = 2 m D_KL
    double chi_square = 0;
    int dof = 0;
};

// Pseudolikelihood goodness-of-fit diagnostics for a fitted model against
// finite data on m households. The Lambda statistic is computed from the two
// log-likelihood sums; it equals 2 m D_KL(q||p) up to rounding, which the
// caller can use as a consistency check against the KL objective.
inline PseudoDiagnostics pseudo_diagnostics(const TargetData& target,
                                            const FinalSizeDistribution& p, ModelKind kind) {
    if (!target.households)
        throw validation_error("pseudo diagnostics: target data must carry a household count");
    double m = static_cast<double>(*target.households);
    PseudoDiagnostics d;
    KahanSum loglik, saturated;
    double chi = 0;
    int cells = 0;
    for (int n = 1; n <= target.q.max_size(); ++n) {
        double mn = target.dist.prop(n) * m;
        cells += FinalSizeDistribution::cell_count(n) - 1;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) {
                double qv = target.q.at(n, rm, rs);
                double pv = p.at(n, rm, rs);
                if (qv > 0.0) {
                    saturated.add(target.dist.prop(n) * qv * std::log(qv));
                    if (pv <= 0.0) {
                        loglik.add(-std::numeric_limits<double>::infinity());
                        continue;
                    }
                    loglik.add(target.dist.prop(n) * qv * std::log(pv));
                }
                if (pv > 0.0) {
                    double diff = qv - pv;
                    chi += mn * diff * diff / pv;
                }
            }
    }
    d.log_pseudolikelihood = m * loglik.value();
    d.lambda_statistic = 2.0 * m * (saturated.value() - loglik.value());
    d.chi_square = chi;
    d.dof = cells - free_parameter_count(kind);
    return d;
}

} // namespace hhfs
