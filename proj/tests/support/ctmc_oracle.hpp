#pragma once

// Independent oracle for the single-household solver: condition on the
// externally infected set (each mild member infected from outside with
// probability 1 - pi_m, severe with 1 - pi_s; final outcomes do not depend on
// when external infections arrive), then enumerate the embedded jump chain of
// the local two-type CTMC with unit removal rates.

#include "hhfs/mt_model.hpp"

namespace hhfs_test {

inline void ctmc_walk(int k, int nk, const hhfs::Rates2x2& local, int sm, int ss, int im,
                      int is, double prob, hhfs::HouseholdTable& out) {
    if (im + is == 0) {
        out.at(k - sm, nk - ss) += prob;
        return;
    }
    double r_inf_m = sm * (im * local.mm + is * local.sm);
    double r_inf_s = ss * (im * local.ms + is * local.ss);
    double r_rem_m = im;  // gamma_M = 1
    double r_rem_s = is;  // gamma_S = 1
    double total = r_inf_m + r_inf_s + r_rem_m + r_rem_s;
    if (r_inf_m > 0) ctmc_walk(k, nk, local, sm - 1, ss, im + 1, is, prob * r_inf_m / total, out);
    if (r_inf_s > 0) ctmc_walk(k, nk, local, sm, ss - 1, im, is + 1, prob * r_inf_s / total, out);
    if (r_rem_m > 0) ctmc_walk(k, nk, local, sm, ss, im - 1, is, prob * r_rem_m / total, out);
    if (r_rem_s > 0) ctmc_walk(k, nk, local, sm, ss, im, is - 1, prob * r_rem_s / total, out);
}

inline hhfs::HouseholdTable ctmc_household_final_size(int n, int k, const hhfs::Rates2x2& local,
                                                      double pi_m, double pi_s) {
    const int nk = n - k;
    hhfs::HouseholdTable out;
    out.n_mild = k;
    out.n_severe = nk;
    out.p.assign(static_cast<std::size_t>((k + 1) * (nk + 1)), 0.0);
    for (int am = 0; am <= k; ++am)
        for (int as = 0; as <= nk; ++as) {
            double w = hhfs::binom_coeff(k, am) * std::pow(1 - pi_m, am) *
                       std::pow(pi_m, k - am) * hhfs::binom_coeff(nk, as) *
                       std::pow(1 - pi_s, as) * std::pow(pi_s, nk - as);
            if (w == 0.0) continue;
            ctmc_walk(k, nk, local, k - am, nk - as, am, as, w, out);
        }
    return out;
}

} // namespace hhfs_test
