#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hhfs/errors.hpp"
#include "hhfs/final_size.hpp"
#include "hhfs/ids_model.hpp"
#include "hhfs/mt_model.hpp"
#include "hhfs/parallel.hpp"
#include "hhfs/population.hpp"
#include "hhfs/rng.hpp"

namespace hhfs {

using FinalSizeCounts = detail::tri_table<long long>;

enum class SimModel { mt, ids };
enum class InitialSeverity { severe, mild, by_type };

// Full MT generation parameters: explicit global rates and removal rates.
struct MtSimParams {
    Rates2x2 global, local;
    double frac_mild = 0;
    double gamma_mild = 1, gamma_severe = 1;

    void validate() const {
        global.validate("mt sim params: global rates");
        local.validate("mt sim params: local rates");
        if (!(frac_mild >= 0 && frac_mild <= 1))
            throw validation_error("mt sim params: mild fraction must lie in [0,1]");
        if (!(gamma_mild > 0) || !(gamma_severe > 0))
            throw validation_error("mt sim params: removal rates must be positive");
    }
};

struct SimConfig {
    SimModel model;
    PopulationConfig population;
    MtSimParams mt{};
    IdsParams ids{};
    int initial_infectives = 10;
    int placement_size = 0;  // 0 resolves to the largest size present
    InitialSeverity initial_severity = InitialSeverity::severe;
    double major_cutoff = 0.15;
    std::uint64_t seed = 0;

    SimConfig(SimModel m, PopulationConfig pop) : model(m), population(std::move(pop)) {}

    int resolved_placement_size() const {
        if (placement_size > 0) return placement_size;
        for (int n = population.dist.max_size(); n >= 1; --n)
            if (population.counts[static_cast<std::size_t>(n) - 1] > 0) return n;
        return 0;
    }

    void validate() const {
        if (model == SimModel::mt)
            mt.validate();
        else {
            ids.validate();
            if (initial_severity == InitialSeverity::by_type)
                throw validation_error("sim config: by_type initial severity applies only to the "
                                       "mt model");
        }
        if (!(major_cutoff >= 0 && major_cutoff <= 1))
            throw validation_error("sim config: major-outbreak cutoff must lie in [0,1]");
        int p = resolved_placement_size();
        if (p < 1 || p > population.dist.max_size())
            throw validation_error("sim config: no households available for initial infectives");
        if (initial_infectives < 1 ||
            initial_infectives > population.counts[static_cast<std::size_t>(p) - 1])
            throw validation_error(
                "sim config: initial infectives must fit in distinct households of size " +
                std::to_string(p));
    }
};

struct SimOutcome {
    std::uint64_t seed = 0;
    long long mild_removed = 0, severe_removed = 0;  // among initial susceptibles
    double infected_fraction = 0;                    // of the whole population
    bool major = false;
    unsigned long long events = 0;
    FinalSizeCounts household_counts;  // households with no initial infectives
};

namespace detail {

// Prefix-sum tree over per-household local infection rates.
class FenwickTree {
public:
    explicit FenwickTree(std::size_t n) : n_(n), tree_(n + 1, 0.0), values_(n, 0.0) {}

    void set(std::size_t i, double v) {
        double delta = v - values_[i];
        values_[i] = v;
        for (std::size_t k = i + 1; k <= n_; k += k & (~k + 1)) tree_[k] += delta;
    }

    double value(std::size_t i) const { return values_[i]; }

    double total() const {
        double s = 0;
        for (std::size_t k = n_; k > 0; k -= k & (~k + 1)) s += tree_[k];
        return s;
    }

    // Largest index whose prefix sum does not exceed u.
    std::size_t sample(double u) const {
        std::size_t idx = 0, mask = 1;
        while (mask * 2 <= n_) mask *= 2;
        for (std::size_t k = mask; k > 0; k /= 2) {
            std::size_t next = idx + k;
            if (next <= n_ && tree_[next] <= u) {
                u -= tree_[next];
                idx = next;
            }
        }
        if (idx >= n_) idx = n_ - 1;
        // guard against landing on a zero-rate entry through roundoff
        while (idx > 0 && values_[idx] <= 0.0) --idx;
        return idx;
    }

private:
    std::size_t n_;
    std::vector<double> tree_;
    std::vector<double> values_;
};

enum : std::uint8_t { ST_SUS = 0, ST_INF_M = 1, ST_INF_S = 2, ST_REM_M = 3, ST_REM_S = 4 };

struct Household {
    int first = 0, size = 0;
    int sus_m = 0, sus_s = 0;  // MT: susceptibles by type; IDS: total in sus_m
    int inf_m = 0, inf_s = 0;
};

// O(1)-removal registry of infective individual ids.
struct Registry {
    std::vector<int> ids;
    std::vector<int>& pos;

    explicit Registry(std::vector<int>& positions) : pos(positions) {}

    void add(int id) {
        pos[static_cast<std::size_t>(id)] = static_cast<int>(ids.size());
        ids.push_back(id);
    }
    void remove(int id) {
        int p = pos[static_cast<std::size_t>(id)];
        int last = ids.back();
        ids[static_cast<std::size_t>(p)] = last;
        pos[static_cast<std::size_t>(last)] = p;
        ids.pop_back();
        pos[static_cast<std::size_t>(id)] = -1;
    }
    int size() const { return static_cast<int>(ids.size()); }
};

} // namespace detail

// One exact realization of the chosen model's continuous-time Markov chain.
// Only the embedded jump chain is sampled; final outcomes do not depend on
// the event times.
inline SimOutcome simulate_once(const SimConfig& config) {
    config.validate();
    constexpr unsigned long long event_budget = 1000000000ULL;

    const PopulationConfig& pop = config.population;
    const int n_max = pop.dist.max_size();
    const long long n_people = pop.individuals;
    rng_engine rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<detail::Household> households;
    households.reserve(static_cast<std::size_t>(pop.households));
    std::vector<int> household_of(static_cast<std::size_t>(n_people));
    {
        int person = 0;
        for (int n = 1; n <= n_max; ++n)
            for (long long c = 0; c < pop.counts[static_cast<std::size_t>(n) - 1]; ++c) {
                detail::Household h;
                h.first = person;
                h.size = n;
                for (int i = 0; i < n; ++i) household_of[static_cast<std::size_t>(person + i)] =
                    static_cast<int>(households.size());
                person += n;
                households.push_back(h);
            }
    }

    const bool is_mt = config.model == SimModel::mt;
    std::vector<std::uint8_t> status(static_cast<std::size_t>(n_people), detail::ST_SUS);
    std::vector<std::uint8_t> mt_type(is_mt ? static_cast<std::size_t>(n_people) : 0);

    // MT: pre-draw every individual's type (0 mild, 1 severe)
    std::vector<int> mild_ids, severe_ids;
    if (is_mt) {
        for (long long p = 0; p < n_people; ++p) {
            bool mild = unit(rng) < config.mt.frac_mild;
            mt_type[static_cast<std::size_t>(p)] = mild ? 0 : 1;
        }
    }

    // initial infectives in distinct households of the placement size
    const int place_n = config.resolved_placement_size();
    std::vector<int> candidates;
    for (std::size_t h = 0; h < households.size(); ++h)
        if (households[h].size == place_n) candidates.push_back(static_cast<int>(h));
    for (int i = 0; i < config.initial_infectives; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(candidates.size()) - 1);
        std::swap(candidates[static_cast<std::size_t>(i)],
                  candidates[static_cast<std::size_t>(pick(rng))]);
    }

    std::vector<int> initial_people;
    std::vector<bool> seeded_household(households.size(), false);
    long long initial_mild = 0, initial_severe = 0;
    for (int i = 0; i < config.initial_infectives; ++i) {
        int h = candidates[static_cast<std::size_t>(i)];
        seeded_household[static_cast<std::size_t>(h)] = true;
        std::uniform_int_distribution<int> member(0, households[static_cast<std::size_t>(h)].size - 1);
        int person = households[static_cast<std::size_t>(h)].first + member(rng);
        bool severe;
        switch (config.initial_severity) {
            case InitialSeverity::severe: severe = true; break;
            case InitialSeverity::mild: severe = false; break;
            default: severe = mt_type[static_cast<std::size_t>(person)] == 1; break;
        }
        if (is_mt) mt_type[static_cast<std::size_t>(person)] = severe ? 1 : 0;
        status[static_cast<std::size_t>(person)] = severe ? detail::ST_INF_S : detail::ST_INF_M;
        (severe ? initial_severe : initial_mild) += 1;
        initial_people.push_back(person);
    }

    // per-type totals (MT) after the overrides above
    long long total_mild_type = 0;
    if (is_mt)
        for (long long p = 0; p < n_people; ++p)
            if (mt_type[static_cast<std::size_t>(p)] == 0) ++total_mild_type;
    const long long total_severe_type = is_mt ? n_people - total_mild_type : 0;
    if (is_mt) {
        mild_ids.reserve(static_cast<std::size_t>(total_mild_type));
        severe_ids.reserve(static_cast<std::size_t>(total_severe_type));
        for (long long p = 0; p < n_people; ++p)
            (mt_type[static_cast<std::size_t>(p)] == 0 ? mild_ids : severe_ids)
                .push_back(static_cast<int>(p));
    }

    // household susceptible/infective tallies
    for (std::size_t h = 0; h < households.size(); ++h) {
        detail::Household& hh = households[h];
        for (int i = 0; i < hh.size; ++i) {
            int p = hh.first + i;
            std::uint8_t st = status[static_cast<std::size_t>(p)];
            if (st == detail::ST_SUS) {
                if (is_mt && mt_type[static_cast<std::size_t>(p)] == 1)
                    ++hh.sus_s;
                else
                    ++hh.sus_m;
            } else if (st == detail::ST_INF_M) {
                ++hh.inf_m;
            } else {
                ++hh.inf_s;
            }
        }
    }

    std::vector<int> inf_pos(static_cast<std::size_t>(n_people), -1);
    detail::Registry inf_mild(inf_pos);
    std::vector<int> inf_pos_s(static_cast<std::size_t>(n_people), -1);
    detail::Registry inf_severe(inf_pos_s);
    for (int p : initial_people)
        (status[static_cast<std::size_t>(p)] == detail::ST_INF_M ? inf_mild : inf_severe).add(p);

    const double inv_n = 1.0 / static_cast<double>(n_people);
    detail::FenwickTree local(households.size());
    auto local_rate = [&](const detail::Household& hh) {
        if (is_mt)
            return hh.inf_m * (hh.sus_m * config.mt.local.mm + hh.sus_s * config.mt.local.ms) +
                   hh.inf_s * (hh.sus_m * config.mt.local.sm + hh.sus_s * config.mt.local.ss);
        return (config.ids.local_rate_mild * hh.inf_m +
                config.ids.local_rate_severe * hh.inf_s) *
               hh.sus_m;
    };
    for (std::size_t h = 0; h < households.size(); ++h)
        local.set(h, local_rate(households[h]));

    auto infect = [&](int person, bool severe) {
        detail::Household& hh = households[static_cast<std::size_t>(household_of[static_cast<std::size_t>(person)])];
        if (is_mt && mt_type[static_cast<std::size_t>(person)] == 1)
            --hh.sus_s;
        else
            --hh.sus_m;
        if (severe) {
            status[static_cast<std::size_t>(person)] = detail::ST_INF_S;
            ++hh.inf_s;
            inf_severe.add(person);
        } else {
            status[static_cast<std::size_t>(person)] = detail::ST_INF_M;
            ++hh.inf_m;
            inf_mild.add(person);
        }
        local.set(static_cast<std::size_t>(household_of[static_cast<std::size_t>(person)]),
                  local_rate(hh));
    };
    auto remove = [&](int person) {
        detail::Household& hh = households[static_cast<std::size_t>(household_of[static_cast<std::size_t>(person)])];
        if (status[static_cast<std::size_t>(person)] == detail::ST_INF_M) {
            status[static_cast<std::size_t>(person)] = detail::ST_REM_M;
            --hh.inf_m;
            inf_mild.remove(person);
        } else {
            status[static_cast<std::size_t>(person)] = detail::ST_REM_S;
            --hh.inf_s;
            inf_severe.remove(person);
        }
        local.set(static_cast<std::size_t>(household_of[static_cast<std::size_t>(person)]),
                  local_rate(hh));
    };

    SimOutcome out;
    out.seed = config.seed;
    unsigned long long events = 0;

    while (inf_mild.size() + inf_severe.size() > 0) {
        if (++events > event_budget)
            throw numerical_error("simulate_once: event budget of 10^9 exceeded (seed " +
                                  std::to_string(config.seed) + ")");
        const double im = inf_mild.size(), is = inf_severe.size();
        double g_mm = 0, g_ms = 0, g_sm = 0, g_ss = 0, g_m = 0, g_s = 0;
        if (is_mt) {
            g_mm = im * static_cast<double>(total_mild_type) * config.mt.global.mm * inv_n;
            g_ms = im * static_cast<double>(total_severe_type) * config.mt.global.ms * inv_n;
            g_sm = is * static_cast<double>(total_mild_type) * config.mt.global.sm * inv_n;
            g_ss = is * static_cast<double>(total_severe_type) * config.mt.global.ss * inv_n;
        } else {
            g_m = im * config.ids.global_rate_mild;
            g_s = is * config.ids.global_rate_severe;
        }
        const double loc = local.total();
        const double rem_m = is_mt ? config.mt.gamma_mild * im : im;
        const double rem_s = is_mt ? config.mt.gamma_severe * is : config.ids.gamma_severe * is;
        const double total = g_mm + g_ms + g_sm + g_ss + g_m + g_s + loc + rem_m + rem_s;

        double u = unit(rng) * total;
        if (is_mt && (u -= g_mm) < 0) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(mild_ids.size()) - 1);
            int person = mild_ids[static_cast<std::size_t>(pick(rng))];
            if (status[static_cast<std::size_t>(person)] == detail::ST_SUS) infect(person, false);
        } else if (is_mt && (u -= g_ms) < 0) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(severe_ids.size()) - 1);
            int person = severe_ids[static_cast<std::size_t>(pick(rng))];
            if (status[static_cast<std::size_t>(person)] == detail::ST_SUS) infect(person, true);
        } else if (is_mt && (u -= g_sm) < 0) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(mild_ids.size()) - 1);
            int person = mild_ids[static_cast<std::size_t>(pick(rng))];
            if (status[static_cast<std::size_t>(person)] == detail::ST_SUS) infect(person, false);
        } else if (is_mt && (u -= g_ss) < 0) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(severe_ids.size()) - 1);
            int person = severe_ids[static_cast<std::size_t>(pick(rng))];
            if (status[static_cast<std::size_t>(person)] == detail::ST_SUS) infect(person, true);
        } else if (!is_mt && (u -= g_m) < 0) {
            std::uniform_int_distribution<long long> pick(0, n_people - 1);
            int person = static_cast<int>(pick(rng));
            if (status[static_cast<std::size_t>(person)] == detail::ST_SUS)
                infect(person, !(unit(rng) < config.ids.pg_mm));
        } else if (!is_mt && (u -= g_s) < 0) {
            std::uniform_int_distribution<long long> pick(0, n_people - 1);
            int person = static_cast<int>(pick(rng));
            if (status[static_cast<std::size_t>(person)] == detail::ST_SUS)
                infect(person, !(unit(rng) < config.ids.pg_sm));
        } else if ((u -= loc) < 0) {
            std::size_t h = local.sample(unit(rng) * loc);
            detail::Household& hh = households[h];
            if (is_mt) {
                double w_to_m = hh.sus_m * (hh.inf_m * config.mt.local.mm +
                                            hh.inf_s * config.mt.local.sm);
                double w_to_s = hh.sus_s * (hh.inf_m * config.mt.local.ms +
                                            hh.inf_s * config.mt.local.ss);
                if (w_to_m + w_to_s <= 0.0) continue;  // roundoff landed on a dead household
                bool target_severe = unit(rng) * (w_to_m + w_to_s) >= w_to_m;
                int want = target_severe ? 1 : 0;
                std::uniform_int_distribution<int> kth(1, target_severe ? hh.sus_s : hh.sus_m);
                int remaining = kth(rng);
                for (int i = 0; i < hh.size; ++i) {
                    int p = hh.first + i;
                    if (status[static_cast<std::size_t>(p)] == detail::ST_SUS &&
                        mt_type[static_cast<std::size_t>(p)] == want && --remaining == 0) {
                        infect(p, target_severe);
                        break;
                    }
                }
            } else {
                double w_mild_src = config.ids.local_rate_mild * hh.inf_m;
                double w_sev_src = config.ids.local_rate_severe * hh.inf_s;
                if ((w_mild_src + w_sev_src) * hh.sus_m <= 0.0) continue;
                bool src_severe = unit(rng) * (w_mild_src + w_sev_src) >= w_mild_src;
                double p_mild = src_severe ? config.ids.pl_sm : config.ids.pl_mm;
                bool severe = !(unit(rng) < p_mild);
                std::uniform_int_distribution<int> kth(1, hh.sus_m);
                int remaining = kth(rng);
                for (int i = 0; i < hh.size; ++i) {
                    int p = hh.first + i;
                    if (status[static_cast<std::size_t>(p)] == detail::ST_SUS && --remaining == 0) {
                        infect(p, severe);
                        break;
                    }
                }
            }
        } else if ((u -= rem_m) < 0 && inf_mild.size() > 0) {
            std::uniform_int_distribution<int> pick(0, inf_mild.size() - 1);
            remove(inf_mild.ids[static_cast<std::size_t>(pick(rng))]);
        } else if (inf_severe.size() > 0) {
            std::uniform_int_distribution<int> pick(0, inf_severe.size() - 1);
            remove(inf_severe.ids[static_cast<std::size_t>(pick(rng))]);
        } else if (inf_mild.size() > 0) {
            std::uniform_int_distribution<int> pick(0, inf_mild.size() - 1);
            remove(inf_mild.ids[static_cast<std::size_t>(pick(rng))]);
        }
    }

    out.events = events;
    long long rem_mild_total = 0, rem_severe_total = 0;
    for (long long p = 0; p < n_people; ++p) {
        if (status[static_cast<std::size_t>(p)] == detail::ST_REM_M) ++rem_mild_total;
        if (status[static_cast<std::size_t>(p)] == detail::ST_REM_S) ++rem_severe_total;
    }
    out.mild_removed = rem_mild_total - initial_mild;
    out.severe_removed = rem_severe_total - initial_severe;
    out.infected_fraction =
        static_cast<double>(rem_mild_total + rem_severe_total) / static_cast<double>(n_people);
    out.major = out.infected_fraction > config.major_cutoff;

    out.household_counts = FinalSizeCounts(n_max);
    for (std::size_t h = 0; h < households.size(); ++h) {
        if (seeded_household[h]) continue;
        const detail::Household& hh = households[h];
        int rm = 0, rs = 0;
        for (int i = 0; i < hh.size; ++i) {
            std::uint8_t st = status[static_cast<std::size_t>(hh.first + i)];
            if (st == detail::ST_REM_M) ++rm;
            if (st == detail::ST_REM_S) ++rs;
        }
        out.household_counts.at(hh.size, rm, rs) += 1;
    }
    return out;
}

struct BatchResult {
    std::vector<SimOutcome> outcomes;
    FinalSizeDistribution empirical;  // pooled over major outbreaks
    long long major_count = 0;
    bool empirical_valid = false;
};

inline FinalSizeDistribution counts_to_distribution(const FinalSizeCounts& counts) {
    FinalSizeDistribution d(counts.max_size());
    for (int n = 1; n <= counts.max_size(); ++n) {
        long long total = 0;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) total += counts.at(n, rm, rs);
        if (total == 0) continue;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs)
                d.at(n, rm, rs) =
                    static_cast<double>(counts.at(n, rm, rs)) / static_cast<double>(total);
    }
    return d;
}

// Independent replicates under derived seeds; the pooled empirical
// distribution uses major outbreaks (and unseeded households) only.
inline BatchResult run_batch(const SimConfig& config, int replicates, unsigned jobs = 1) {
    if (replicates < 1) throw validation_error("run_batch: need at least one replicate");
    BatchResult out;
    out.outcomes.resize(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), jobs, [&](std::size_t i) {
        SimConfig rep = config;
        rep.seed = derive_seed(config.seed, i);
        out.outcomes[i] = simulate_once(rep);
    });
    FinalSizeCounts pooled(config.population.dist.max_size());
    for (const SimOutcome& o : out.outcomes) {
        if (!o.major) continue;
        ++out.major_count;
        for (int n = 1; n <= pooled.max_size(); ++n)
            for (int rm = 0; rm <= n; ++rm)
                for (int rs = 0; rs + rm <= n; ++rs)
                    pooled.at(n, rm, rs) += o.household_counts.at(n, rm, rs);
    }
    out.empirical_valid = out.major_count > 0;
    out.empirical = counts_to_distribution(pooled);
    return out;
}

struct SimSummary {
    struct Row {
        double p_mild = 0, p_severe = 0, p_inf = 0, severe_share = 0;
        long long households = 0;
    };
    std::vector<Row> per_size;  // index n-1
    long long majors = 0;
    double mild_mean = 0, mild_sd = 0, severe_mean = 0, severe_sd = 0;
};

// Per-individual infection probabilities by household size, plus the normal
// moments of the outbreak totals, over major outbreaks.
inline SimSummary summarize(const std::vector<SimOutcome>& outcomes) {
    SimSummary s;
    int n_max = 0;
    for (const SimOutcome& o : outcomes)
        if (o.major) {
            ++s.majors;
            n_max = o.household_counts.max_size();
        }
    if (s.majors == 0)
        throw validation_error("summarize: no major outbreaks among the outcomes");
    s.per_size.resize(static_cast<std::size_t>(n_max));
    std::vector<double> sum_m(static_cast<std::size_t>(n_max), 0.0),
        sum_s(static_cast<std::size_t>(n_max), 0.0);
    double mild1 = 0, mild2 = 0, sev1 = 0, sev2 = 0;
    for (const SimOutcome& o : outcomes) {
        if (!o.major) continue;
        mild1 += static_cast<double>(o.mild_removed);
        mild2 += static_cast<double>(o.mild_removed) * static_cast<double>(o.mild_removed);
        sev1 += static_cast<double>(o.severe_removed);
        sev2 += static_cast<double>(o.severe_removed) * static_cast<double>(o.severe_removed);
        for (int n = 1; n <= n_max; ++n)
            for (int rm = 0; rm <= n; ++rm)
                for (int rs = 0; rs + rm <= n; ++rs) {
                    long long c = o.household_counts.at(n, rm, rs);
                    if (c == 0) continue;
                    s.per_size[static_cast<std::size_t>(n) - 1].households += c;
                    sum_m[static_cast<std::size_t>(n) - 1] += static_cast<double>(c) * rm;
                    sum_s[static_cast<std::size_t>(n) - 1] += static_cast<double>(c) * rs;
                }
    }
    for (int n = 1; n <= n_max; ++n) {
        SimSummary::Row& r = s.per_size[static_cast<std::size_t>(n) - 1];
        if (r.households == 0) continue;
        double denom = static_cast<double>(n) * static_cast<double>(r.households);
        r.p_mild = sum_m[static_cast<std::size_t>(n) - 1] / denom;
        r.p_severe = sum_s[static_cast<std::size_t>(n) - 1] / denom;
        r.p_inf = r.p_mild + r.p_severe;
        r.severe_share = r.p_inf > 0 ? r.p_severe / r.p_inf : 0.0;
    }
    double inv = 1.0 / static_cast<double>(s.majors);
    s.mild_mean = mild1 * inv;
    s.severe_mean = sev1 * inv;
    if (s.majors > 1) {
        double nrm = 1.0 / (static_cast<double>(s.majors) - 1.0);
        s.mild_sd = std::sqrt(std::max(0.0, (mild2 - mild1 * mild1 * inv) * nrm));
        s.severe_sd = std::sqrt(std::max(0.0, (sev2 - sev1 * sev1 * inv) * nrm));
    }
    return s;
}

} // namespace hhfs
