#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hhfs/errors.hpp"
#include "hhfs/final_size.hpp"
#include "hhfs/population.hpp"

namespace hhfs {

// 2x2 contact-rate matrix; first index is the infector's type, second the target's.
struct Rates2x2 {
    double mm = 0, ms = 0, sm = 0, ss = 0;

    void validate(const std::string& name) const {
        for (double v : {mm, ms, sm, ss})
            if (!std::isfinite(v) || v < 0)
                throw validation_error(name + ": rates must be finite and nonnegative");
    }
};

inline double binom_coeff(int n, int k) {
    // n stays small (household sizes); exact in double well past that range
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
    return c;
}

// Binomial pmf evaluated in log space so that p near 0/1 cannot underflow
// through the power terms.
inline double binom_pmf(int n, int k, double p) {
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(logc + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Identifiable MT parameters: global spread enters only through the escape
// probability pair, local spread through the 2x2 rate matrix. Removal rates
// are fixed at 1 for both types.
struct MtParams {
    double pi_mild = 1, pi_severe = 1;  // global escape probabilities, in (0,1]
    Rates2x2 local;
    double frac_mild = 0;  // probability an individual is of mild type

    void validate() const {
        if (!(pi_mild > 0 && pi_mild <= 1) || !(pi_severe > 0 && pi_severe <= 1))
            throw validation_error("mt params: escape probabilities must lie in (0,1]");
        local.validate("mt params: local rates");
        if (!(frac_mild >= 0 && frac_mild <= 1))
            throw validation_error("mt params: mild fraction must lie in [0,1]");
    }
};

// Full generation-side parameterization: explicit global rates (not
// identifiable individually; used for simulation and asymptotic data only).
struct MtGenerationParams {
    Rates2x2 global;
    Rates2x2 local;
    double frac_mild = 0;

    void validate() const {
        global.validate("mt generation params: global rates");
        local.validate("mt generation params: local rates");
        if (!(frac_mild >= 0 && frac_mild <= 1))
            throw validation_error("mt generation params: mild fraction must lie in [0,1]");
    }
};

// Final-size law of one household with n_mild mild and n_severe severe members,
// all initially susceptible.
struct HouseholdTable {
    int n_mild = 0, n_severe = 0;
    std::vector<double> p;  // (n_mild+1) x (n_severe+1), row-major by mild count

    double at(int i, int j) const { return p[static_cast<std::size_t>(i * (n_severe + 1) + j)]; }
    double& at(int i, int j) { return p[static_cast<std::size_t>(i * (n_severe + 1) + j)]; }
};

// Single-household final-size solver. The joint law of (mild removed, severe
// removed) in a size-n household with k mild members, each mild member
// escaping global infection with probability pi_mild (severe: pi_severe),
// solves a triangular linear system; forward substitution in lexicographic
// (i1, j1) order yields each probability from the earlier ones.
inline HouseholdTable household_final_size(int n, int k, const Rates2x2& local, double pi_mild,
                                           double pi_severe) {
    if (k < 0 || k > n || n < 1)
        throw validation_error("household_final_size: need 0 <= k <= n, n >= 1");
    if (!(pi_mild > 0) || !(pi_severe > 0))
        throw validation_error("household_final_size: escape probabilities must be positive");
    local.validate("household_final_size: local rates");

    const int ns = n - k;
    HouseholdTable t;
    t.n_mild = k;
    t.n_severe = ns;
    t.p.assign(static_cast<std::size_t>((k + 1) * (ns + 1)), 0.0);

    for (int i1 = 0; i1 <= k; ++i1) {
        for (int j1 = 0; j1 <= ns; ++j1) {
            const double hm = 1.0 / (1.0 + (k - i1) * local.mm + (ns - j1) * local.ms);
            const double hs = 1.0 / (1.0 + (k - i1) * local.sm + (ns - j1) * local.ss);
            double value = binom_coeff(k, i1) * binom_coeff(ns, j1) *
                           std::pow(pi_mild, k - i1) * std::pow(pi_severe, ns - j1) *
                           std::pow(hm, i1) * std::pow(hs, j1);
            for (int i = 0; i <= i1; ++i)
                for (int j = 0; j <= j1; ++j) {
                    if (i == i1 && j == j1) continue;
                    value -= binom_coeff(k - i, i1 - i) * binom_coeff(ns - j, j1 - j) *
                             std::pow(hm, i1 - i) * std::pow(hs, j1 - j) * t.at(i, j);
                }
            t.at(i1, j1) = value;
        }
    }

    for (double& v : t.p) {
        if (v < -1e-8 || v > 1.0 + 1e-8)
            throw numerical_error("household_final_size: ill-conditioned system for n=" +
                                  std::to_string(n) + ", k=" + std::to_string(k) +
                                  " (probability " + std::to_string(v) + ")");
        v = std::min(1.0, std::max(0.0, v));
    }
    return t;
}

inline std::pair<double, double> table_means(const HouseholdTable& t) {
    double mm = 0, ms = 0;
    for (int i = 0; i <= t.n_mild; ++i)
        for (int j = 0; j <= t.n_severe; ++j) {
            mm += i * t.at(i, j);
            ms += j * t.at(i, j);
        }
    return {mm, ms};
}

inline std::pair<double, double> household_final_size_means(int n, int k, const Rates2x2& local,
                                                            double pi_mild, double pi_severe) {
    return table_means(household_final_size(n, k, local, pi_mild, pi_severe));
}

struct BalanceResult {
    double z_mild = 0, z_severe = 0;    // attack fractions over all individuals
    double pi_mild = 1, pi_severe = 1;  // escape probabilities at the fixed point
    int iterations = 0;
    bool subcritical = false;
};

namespace detail {

inline std::pair<double, double> escape_probs(const Rates2x2& global, double zm, double zs) {
    return {std::exp(-(zm * global.mm + zs * global.sm)),
            std::exp(-(zm * global.ms + zs * global.ss))};
}

// Expected (mild, severe) removals in a random household, divided by mu_H.
inline std::pair<double, double> mean_removed_fractions(const MtGenerationParams& params,
                                                        const HouseholdSizeDistribution& dist,
                                                        double pi_m, double pi_s) {
    double zm = 0, zs = 0;
    for (int n = 1; n <= dist.max_size(); ++n) {
        if (dist.prop(n) == 0.0) continue;
        for (int kk = 0; kk <= n; ++kk) {
            double w = binom_pmf(n, kk, params.frac_mild);
            if (w == 0.0) continue;
            auto [mm, ms] = household_final_size_means(n, kk, params.local, pi_m, pi_s);
            zm += dist.prop(n) * w * mm;
            zs += dist.prop(n) * w * ms;
        }
    }
    double mu = dist.mean_size();
    return {zm / mu, zs / mu};
}

} // namespace detail

// Solves the MT balance equations by damped fixed-point iteration from the
// all-infected corner; the iteration selects the epidemic (largest) solution
// when one exists and collapses to (0,0) otherwise.
inline BalanceResult solve_balance(const MtGenerationParams& params,
                                   const HouseholdSizeDistribution& dist,
                                   double tol = 1e-12, int max_iterations = 100000) {
    params.validate();
    double zm = params.frac_mild, zs = 1.0 - params.frac_mild;
    double prev_dm = 0, prev_ds = 0;
    BalanceResult r;
    for (int it = 1; it <= max_iterations; ++it) {
        auto [pm, ps] = detail::escape_probs(params.global, zm, zs);
        auto [fm, fs] = detail::mean_removed_fractions(params, dist, pm, ps);
        double dm = fm - zm, ds = fs - zs;
        bool oscillating = (dm * prev_dm < 0) || (ds * prev_ds < 0);
        double step = oscillating ? 0.5 : 1.0;
        zm += step * dm;
        zs += step * ds;
        prev_dm = dm;
        prev_ds = ds;
        if (std::max(std::abs(dm), std::abs(ds)) < tol) {
            r.iterations = it;
            if (zm + zs < 1e-8) {
                r.z_mild = r.z_severe = 0.0;
                r.pi_mild = r.pi_severe = 1.0;
                r.subcritical = true;
            } else {
                r.z_mild = zm;
                r.z_severe = zs;
                auto [qm, qs] = detail::escape_probs(params.global, zm, zs);
                r.pi_mild = qm;
                r.pi_severe = qs;
            }
            return r;
        }
    }
    throw numerical_error("solve_balance: no convergence after " +
                          std::to_string(max_iterations) + " iterations (last iterate z = (" +
                          std::to_string(zm) + ", " + std::to_string(zs) + "))");
}

// Mixture over the binomial type split of the single-household tables.
inline FinalSizeDistribution mt_final_size(const MtParams& params,
                                           const HouseholdSizeDistribution& dist) {
    params.validate();
    FinalSizeDistribution out(dist.max_size());
    for (int n = 1; n <= dist.max_size(); ++n) {
        std::vector<HouseholdTable> tables;
        tables.reserve(static_cast<std::size_t>(n) + 1);
        for (int kk = 0; kk <= n; ++kk)
            tables.push_back(household_final_size(n, kk, params.local, params.pi_mild,
                                                  params.pi_severe));
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) {
                double p = 0.0;
                for (int kk = rm; kk <= n - rs; ++kk)
                    p += binom_pmf(n, kk, params.frac_mild) * tables[static_cast<std::size_t>(kk)].at(rm, rs);
                out.at(n, rm, rs) = p;
            }
    }
    return out;
}

// Asymptotic final-size distribution from full generation parameters: solve
// the balance equations, then mix the single-household tables at the fixed
// point's escape probabilities.
inline FinalSizeDistribution mt_asymptotic_final_size(const MtGenerationParams& params,
                                                      const HouseholdSizeDistribution& dist,
                                                      BalanceResult* balance_out = nullptr) {
    BalanceResult b = solve_balance(params, dist);
    if (balance_out) *balance_out = b;
    MtParams p;
    p.pi_mild = b.pi_mild;
    p.pi_severe = b.pi_severe;
    p.local = params.local;
    p.frac_mild = params.frac_mild;
    return mt_final_size(p, dist);
}

} // namespace hhfs
