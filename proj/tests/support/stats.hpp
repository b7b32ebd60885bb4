#pragma once

#include <cmath>
#include <vector>

#include "hhfs/final_size.hpp"
#include "hhfs/population.hpp"

namespace hhfs_test {

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
    double m = mean(v), s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

inline double skewness(const std::vector<double>& v) {
    double m = mean(v), m2 = 0, m3 = 0;
    for (double x : v) {
        double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(v.size());
    m3 /= static_cast<double>(v.size());
    return m3 / std::pow(m2, 1.5);
}

inline double excess_kurtosis(const std::vector<double>& v) {
    double m = mean(v), m2 = 0, m4 = 0;
    for (double x : v) {
        double d = x - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(v.size());
    m4 /= static_cast<double>(v.size());
    return m4 / (m2 * m2) - 3.0;
}

// rho-weighted total variation distance between per-size tables.
inline double tv_distance(const hhfs::FinalSizeDistribution& a,
                          const hhfs::FinalSizeDistribution& b,
                          const hhfs::HouseholdSizeDistribution& dist) {
    double tv = 0;
    for (int n = 1; n <= dist.max_size(); ++n) {
        double per = 0;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs)
                per += std::abs(a.at(n, rm, rs) - b.at(n, rm, rs));
        tv += dist.prop(n) * 0.5 * per;
    }
    return tv;
}

} // namespace hhfs_test
