#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hhfs/errors.hpp"
#include "hhfs/final_size.hpp"
#include "hhfs/mt_model.hpp"
#include "hhfs/ode.hpp"
#include "hhfs/population.hpp"

namespace hhfs {

// Identifiable IDS parameters. Mild removal rate is fixed at 1; severe-outcome
// probabilities are the complements of the stored mild ones.
struct IdsParams {
    double global_rate_mild = 0, global_rate_severe = 0;  // lambda^G_M, lambda^G_S
    double local_rate_mild = 0, local_rate_severe = 0;    // lambda^L_M, lambda^L_S
    double pg_mm = 0, pg_sm = 0;  // P(mild case | global contact by mild / severe infector)
    double pl_mm = 0, pl_sm = 0;  // local analogues
    double gamma_severe = 1;      // severe removal rate

    void validate() const {
        for (double v : {global_rate_mild, global_rate_severe, local_rate_mild,
                         local_rate_severe})
            if (!std::isfinite(v) || v < 0)
                throw validation_error("ids params: contact rates must be finite and nonnegative");
        for (double v : {pg_mm, pg_sm, pl_mm, pl_sm})
            if (!(v >= 0 && v <= 1))
                throw validation_error("ids params: outcome probabilities must lie in [0,1]");
        if (!(gamma_severe > 0) || !std::isfinite(gamma_severe))
            throw validation_error("ids params: severe removal rate must be positive");
    }
};

// Household configuration (n: i, j, k, l): mild/severe infectives, mild/severe removed.
struct HouseholdState {
    int size = 0;
    int inf_mild = 0, inf_severe = 0;
    int rem_mild = 0, rem_severe = 0;

    int susceptible() const { return size - inf_mild - inf_severe - rem_mild - rem_severe; }

    bool operator==(const HouseholdState&) const = default;
};

// Dense bijection between household states (all sizes 1..max_size) and
// 0-based indices: ascending size, then lexicographic (i, j, k, l).
class StateIndex {
public:
    explicit StateIndex(int max_size) : max_size_(max_size) {
        if (max_size < 1 || max_size > 10)
            throw validation_error("state index: max household size must lie in [1,10]");
        size_offset_.assign(static_cast<std::size_t>(max_size) + 2, 0);
        for (int n = 1; n <= max_size_; ++n) {
            size_offset_[static_cast<std::size_t>(n)] = static_cast<int>(states_.size());
            for (int i = 0; i <= n; ++i)
                for (int j = 0; i + j <= n; ++j)
                    for (int k = 0; i + j + k <= n; ++k)
                        for (int l = 0; i + j + k + l <= n; ++l)
                            states_.push_back(HouseholdState{n, i, j, k, l});
        }
        size_offset_[static_cast<std::size_t>(max_size_) + 1] = static_cast<int>(states_.size());
    }

    int max_size() const { return max_size_; }
    int size() const { return static_cast<int>(states_.size()); }

    // One state per size is redundant under per-size normalization.
    int reduced_size() const { return size() - max_size_; }

    const HouseholdState& state(int idx) const { return states_[static_cast<std::size_t>(idx)]; }

    int first_of_size(int n) const { return size_offset_[static_cast<std::size_t>(n)]; }
    int end_of_size(int n) const { return size_offset_[static_cast<std::size_t>(n) + 1]; }

    // -1 when (i,j,k,l) is out of bounds for size n.
    int index(int n, int i, int j, int k, int l) const {
        if (n < 1 || n > max_size_ || i < 0 || j < 0 || k < 0 || l < 0 || i + j + k + l > n)
            return -1;
        int rank = 0;
        for (int u = 0; u < i; ++u) rank += tetra(n - u);
        int rem = n - i;
        for (int u = 0; u < j; ++u) rank += tri(rem - u);
        rem -= j;
        for (int u = 0; u < k; ++u) rank += rem - u + 1;
        rank += l;
        return size_offset_[static_cast<std::size_t>(n)] + rank;
    }

    int index(const HouseholdState& s) const {
        return index(s.size, s.inf_mild, s.inf_severe, s.rem_mild, s.rem_severe);
    }

private:
    static int tri(int s) { return (s + 1) * (s + 2) / 2; }              // #{(k,l): k+l <= s}
    static int tetra(int s) { return (s + 1) * (s + 2) * (s + 3) / 6; }  // #{(j,k,l): j+k+l <= s}

    int max_size_ = 0;
    std::vector<HouseholdState> states_;
    std::vector<int> size_offset_;
};

inline StateIndex enumerate_states(int max_size) { return StateIndex(max_size); }

// Precomputed scatter form of the deterministic limit: each state pushes mass
// to its infection/removal successors, which conserves per-size totals exactly.
class IdsSystem {
public:
    IdsSystem(const IdsParams& params, const HouseholdSizeDistribution& dist)
        : params_(params), states_(dist.max_size()) {
        params_.validate();
        const double mu = dist.mean_size();
        const int m = states_.size();
        node_.resize(static_cast<std::size_t>(m));
        for (int idx = 0; idx < m; ++idx) {
            const HouseholdState& st = states_.state(idx);
            Node& nd = node_[static_cast<std::size_t>(idx)];
            nd.i = st.inf_mild;
            nd.j = st.inf_severe;
            nd.s = st.susceptible();
            nd.to_mild_inf = states_.index(st.size, st.inf_mild + 1, st.inf_severe, st.rem_mild,
                                           st.rem_severe);
            nd.to_sev_inf = states_.index(st.size, st.inf_mild, st.inf_severe + 1, st.rem_mild,
                                          st.rem_severe);
            nd.to_mild_rem = states_.index(st.size, st.inf_mild - 1, st.inf_severe,
                                           st.rem_mild + 1, st.rem_severe);
            nd.to_sev_rem = states_.index(st.size, st.inf_mild, st.inf_severe - 1, st.rem_mild,
                                          st.rem_severe + 1);
            double rho = dist.prop(st.size);
            nd.w_mild = st.inf_mild * rho / mu;
            nd.w_severe = st.inf_severe * rho / mu;
        }
    }

    const StateIndex& states() const { return states_; }

    // (i_M, i_S): population fractions currently mild/severe infective.
    std::pair<double, double> infective_fractions(const std::vector<double>& x) const {
        double im = 0, is = 0;
        for (std::size_t idx = 0; idx < node_.size(); ++idx) {
            im += node_[idx].w_mild * x[idx];
            is += node_[idx].w_severe * x[idx];
        }
        return {im, is};
    }

    double infective_fraction(const std::vector<double>& x) const {
        auto [im, is] = infective_fractions(x);
        return im + is;
    }

    void rhs(const std::vector<double>& x, std::vector<double>& dx) const {
        auto [im, is] = infective_fractions(x);
        const double glob_mild = params_.global_rate_mild * params_.pg_mm * im +
                                 params_.global_rate_severe * params_.pg_sm * is;
        const double glob_sev = params_.global_rate_mild * (1 - params_.pg_mm) * im +
                                params_.global_rate_severe * (1 - params_.pg_sm) * is;
        const double loc_mm = params_.local_rate_mild * params_.pl_mm;
        const double loc_ms = params_.local_rate_mild * (1 - params_.pl_mm);
        const double loc_sm = params_.local_rate_severe * params_.pl_sm;
        const double loc_ss = params_.local_rate_severe * (1 - params_.pl_sm);

        std::fill(dx.begin(), dx.end(), 0.0);
        for (std::size_t idx = 0; idx < node_.size(); ++idx) {
            const Node& nd = node_[idx];
            const double v = x[idx];
            if (nd.s > 0) {
                double to_mild = (glob_mild + loc_mm * nd.i + loc_sm * nd.j) * nd.s * v;
                double to_sev = (glob_sev + loc_ms * nd.i + loc_ss * nd.j) * nd.s * v;
                dx[static_cast<std::size_t>(nd.to_mild_inf)] += to_mild;
                dx[static_cast<std::size_t>(nd.to_sev_inf)] += to_sev;
                dx[idx] -= to_mild + to_sev;
            }
            if (nd.i > 0) {
                double r = nd.i * v;  // gamma_M = 1
                dx[static_cast<std::size_t>(nd.to_mild_rem)] += r;
                dx[idx] -= r;
            }
            if (nd.j > 0) {
                double r = params_.gamma_severe * nd.j * v;
                dx[static_cast<std::size_t>(nd.to_sev_rem)] += r;
                dx[idx] -= r;
            }
        }
    }

    // Initial condition: a fraction f_severe of individuals severely infective,
    // chosen uniformly, everyone else susceptible.
    std::vector<double> initial_condition(double f_severe) const {
        std::vector<double> x(static_cast<std::size_t>(states_.size()), 0.0);
        for (int n = 1; n <= states_.max_size(); ++n)
            for (int j = 0; j <= n; ++j)
                x[static_cast<std::size_t>(states_.index(n, 0, j, 0, 0))] =
                    binom_pmf(n, j, f_severe);
        return x;
    }

private:
    struct Node {
        int to_mild_inf = -1, to_sev_inf = -1, to_mild_rem = -1, to_sev_rem = -1;
        double i = 0, j = 0, s = 0;
        double w_mild = 0, w_severe = 0;
    };

    IdsParams params_;
    StateIndex states_;
    std::vector<Node> node_;
};

// Time derivatives of the per-state fractions, in StateIndex order.
inline std::vector<double> ids_rhs(const std::vector<double>& xtilde, const IdsParams& params,
                                   const HouseholdSizeDistribution& dist) {
    IdsSystem sys(params, dist);
    if (xtilde.size() != static_cast<std::size_t>(sys.states().size()))
        throw validation_error("ids_rhs: state vector has wrong dimension");
    std::vector<double> dx(xtilde.size());
    sys.rhs(xtilde, dx);
    return dx;
}

struct IdsDiagnostics {
    double t_end = 0;
    double final_infective_fraction = 0;
    long long steps_accepted = 0;
    long long steps_rejected = 0;
    long long rhs_evals = 0;
};

struct IdsFinalSizeOptions {
    double f_severe = 1e-5;  // initial severely infective fraction
    double delta = 1e-7;     // extinction threshold on the infective fraction
    OdeOptions ode;
};

// Integrates the deterministic limit to effective extinction and reads off the
// per-size final-size tables from the fully-removed states.
inline FinalSizeDistribution ids_final_size(const IdsParams& params,
                                            const HouseholdSizeDistribution& dist,
                                            const IdsFinalSizeOptions& opt = {},
                                            IdsDiagnostics* diag = nullptr) {
    if (!(opt.f_severe > 0 && opt.f_severe < 1))
        throw validation_error("ids final size: initial severe fraction must lie in (0,1)");
    if (!(opt.delta > 0 && opt.delta < opt.f_severe))
        throw validation_error("ids final size: extinction threshold must satisfy 0 < delta < f_severe");

    IdsSystem sys(params, dist);
    std::vector<double> x = sys.initial_condition(opt.f_severe);
    auto rhs = [&sys](double, const std::vector<double>& y, std::vector<double>& dy) {
        sys.rhs(y, dy);
    };
    auto event = [&sys](const std::vector<double>& y) { return sys.infective_fraction(y); };
    OdeStats stats = integrate_to_event(rhs, x, 0.0, event, opt.delta, opt.ode);
    if (!stats.event_reached)
        throw numerical_error("ids final size: infective fraction still " +
                              std::to_string(sys.infective_fraction(x)) + " at t = " +
                              std::to_string(stats.t_end) + " (no extinction before horizon)");
    if (diag) {
        diag->t_end = stats.t_end;
        diag->final_infective_fraction = sys.infective_fraction(x);
        diag->steps_accepted = stats.steps_accepted;
        diag->steps_rejected = stats.steps_rejected;
        diag->rhs_evals = stats.rhs_evals;
    }

    FinalSizeDistribution out(dist.max_size());
    for (int n = 1; n <= dist.max_size(); ++n) {
        double sum = 0.0;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) {
                double v = x[static_cast<std::size_t>(sys.states().index(n, 0, 0, rm, rs))];
                if (v < -1e-10)
                    throw numerical_error("ids final size: state fraction " + std::to_string(v) +
                                          " below clamping tolerance (size " + std::to_string(n) +
                                          ")");
                v = std::max(v, 0.0);
                out.at(n, rm, rs) = v;
                sum += v;
            }
        if (!(sum > 0))
            throw numerical_error("ids final size: vanishing final mass for size " +
                                  std::to_string(n));
        out.scale_size(n, 1.0 / sum);
    }
    return out;
}

} // namespace hhfs
