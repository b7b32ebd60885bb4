#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hhfs/errors.hpp"

namespace hhfs {

// Limiting proportions rho_1..rho_nmax of households of each size.
class HouseholdSizeDistribution {
public:
    explicit HouseholdSizeDistribution(std::vector<double> proportions)
        : props_(std::move(proportions)) {
        if (props_.empty())
            throw validation_error("household size distribution: proportion list is empty");
        double sum = 0.0;
        for (std::size_t i = 0; i < props_.size(); ++i) {
            double v = props_[i];
            if (!std::isfinite(v) || v < 0.0)
                throw validation_error("household size distribution: rho_" +
                                       std::to_string(i + 1) + " = " + std::to_string(v) +
                                       " is not a valid proportion");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw validation_error("household size distribution: proportions sum to " +
                                   std::to_string(sum) + ", expected 1");
    }

    int max_size() const { return static_cast<int>(props_.size()); }
    double prop(int n) const { return props_[static_cast<std::size_t>(n) - 1]; }
    const std::vector<double>& props() const { return props_; }

    // mu_H
    double mean_size() const {
        double mu = 0.0;
        for (std::size_t i = 0; i < props_.size(); ++i)
            mu += static_cast<double>(i + 1) * props_[i];
        return mu;
    }

private:
    std::vector<double> props_;
};

inline double mean_household_size(const HouseholdSizeDistribution& dist) {
    return dist.mean_size();
}

// Integer household counts summing exactly to m: round(rho_n * m), with the
// rounding remainder assigned to the largest size.
inline std::vector<long long> realize_counts(const HouseholdSizeDistribution& dist,
                                             long long households) {
    if (households < 1)
        throw validation_error("population: household count must be >= 1, got " +
                               std::to_string(households));
    std::vector<long long> counts(dist.props().size());
    long long total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] = std::llround(dist.props()[i] * static_cast<double>(households));
        total += counts[i];
    }
    counts.back() += households - total;
    if (counts.back() < 0)
        throw validation_error("population: cannot allocate " + std::to_string(households) +
                               " households to the given size distribution");
    return counts;
}

// Finite-population configuration: realized household counts for m households.
struct PopulationConfig {
    HouseholdSizeDistribution dist;
    long long households = 0;
    std::vector<long long> counts;  // per size 1..n_max
    long long individuals = 0;      // N = sum n * m_n

    PopulationConfig(HouseholdSizeDistribution d, long long m)
        : dist(std::move(d)), households(m), counts(realize_counts(dist, m)) {
        for (std::size_t i = 0; i < counts.size(); ++i)
            individuals += static_cast<long long>(i + 1) * counts[i];
    }
};

} // namespace hhfs
