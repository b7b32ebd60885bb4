#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hhfs/errors.hpp"
#include "hhfs/final_size.hpp"
#include "hhfs/population.hpp"

namespace hhfs {

// Kahan compensated summation; the KL summands cancel catastrophically when
// the two distributions are close.
struct KahanSum {
    double sum = 0, c = 0;
    void add(double v) {
        double y = v - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

// Target final-size data q with its household-size weights; `households` is
// set for finite (empirical) data.
struct TargetData {
    FinalSizeDistribution q;
    HouseholdSizeDistribution dist;
    std::optional<long long> households;

    TargetData(FinalSizeDistribution q_in, HouseholdSizeDistribution d,
               std::optional<long long> m = std::nullopt)
        : q(std::move(q_in)), dist(std::move(d)), households(m) {
        if (q.max_size() != dist.max_size())
            throw validation_error("target data: distribution and weights disagree on max size");
        double tol = households ? 1e-6 : 1e-9;
        for (int n = 1; n <= q.max_size(); ++n) {
            double s = q.size_sum(n);
            if (s != 0.0 && std::abs(s - 1.0) > tol)
                throw validation_error("target data: size-" + std::to_string(n) +
                                       " table sums to " + std::to_string(s));
        }
    }

    // Observed per-individual attack fractions (z_M, z_S).
    std::pair<double, double> attack_fractions() const {
        double zm = 0, zs = 0;
        for (int n = 1; n <= q.max_size(); ++n) {
            auto a = q.aggregates(n);
            zm += dist.prop(n) * n * a.p_mild;
            zs += dist.prop(n) * n * a.p_severe;
        }
        double mu = dist.mean_size();
        return {zm / mu, zs / mu};
    }
};

// rho-weighted KL divergence, exact form; +inf when p vanishes on q's support.
inline double kl_divergence_exact(const TargetData& target, const FinalSizeDistribution& p) {
    KahanSum total;
    for (int n = 1; n <= target.q.max_size(); ++n) {
        KahanSum per_size;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) {
                double qv = target.q.at(n, rm, rs);
                if (qv == 0.0) continue;
                double pv = p.at(n, rm, rs);
                if (pv <= 0.0) return std::numeric_limits<double>::infinity();
                per_size.add(qv * std::log(qv / pv));
            }
        total.add(target.dist.prop(n) * per_size.value());
    }
    return total.value();
}

// Second-order form (q-p)^2 / 2p; agrees with the exact form as p -> q and is
// immune to the cancellation that breaks it there.
inline double kl_divergence_taylor(const TargetData& target, const FinalSizeDistribution& p) {
    KahanSum total;
    for (int n = 1; n <= target.q.max_size(); ++n) {
        KahanSum per_size;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) {
                double qv = target.q.at(n, rm, rs);
                double pv = p.at(n, rm, rs);
                if (pv <= 0.0) {
                    if (qv == 0.0) continue;
                    return std::numeric_limits<double>::infinity();
                }
                double d = qv - pv;
                per_size.add(d * d / (2.0 * pv));
            }
        total.add(target.dist.prop(n) * per_size.value());
    }
    return total.value();
}

constexpr double kl_switchover_threshold = 1e-5;

// KL divergence with the small-distance safeguard: the exact form is
// recomputed in the second-order form whenever it falls below the switchover.
inline double kl_divergence(const TargetData& target, const FinalSizeDistribution& p) {
    double f = kl_divergence_exact(target, p);
    if (f < kl_switchover_threshold) return kl_divergence_taylor(target, p);
    return f;
}

// Per-size contributions rho_n * sum q log(q/p) (exact form).
inline std::vector<double> kl_per_size_breakdown(const TargetData& target,
                                                 const FinalSizeDistribution& p) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(target.q.max_size()));
    for (int n = 1; n <= target.q.max_size(); ++n) {
        KahanSum per_size;
        bool unsupported = false;
        for (int rm = 0; rm <= n && !unsupported; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) {
                double qv = target.q.at(n, rm, rs);
                if (qv == 0.0) continue;
                double pv = p.at(n, rm, rs);
                if (pv <= 0.0) {
                    unsupported = true;
                    break;
                }
                per_size.add(qv * std::log(qv / pv));
            }
        out.push_back(unsupported ? std::numeric_limits<double>::infinity()
                                  : target.dist.prop(n) * per_size.value());
    }
    return out;
}

} // namespace hhfs
