#include <catch2/catch_amalgamated.hpp>

#include "hhfs/simulator.hpp"
#include "hhfs/kl.hpp"
#include "support/stats.hpp"

using namespace hhfs;

static HouseholdSizeDistribution rho3() {
    return HouseholdSizeDistribution({1.0 / 3, 1.0 / 3, 1.0 / 3});
}

static MtSimParams reference_mt_sim() {
    MtSimParams p;
    p.global = Rates2x2{0.25, 0.8, 0.8, 1.5};
    p.local = Rates2x2{0.2, 0.4, 0.4, 0.8};
    p.frac_mild = 0.4;
    return p;
}

static IdsParams reference_ids() {
    IdsParams p;
    p.global_rate_mild = 1;
    p.global_rate_severe = 2;
    p.pg_mm = 0.8;
    p.pg_sm = 0.2;
    p.local_rate_mild = 0.5;
    p.local_rate_severe = 1;
    p.pl_mm = 0.5;
    p.pl_sm = 0.1;
    p.gamma_severe = 2;
    return p;
}

TEST_CASE("zero contact rates: only the initial infectives are ever infected") {
    SimConfig cfg(SimModel::mt, PopulationConfig(rho3(), 300));
    cfg.mt = reference_mt_sim();
    cfg.mt.global = Rates2x2{};
    cfg.mt.local = Rates2x2{};
    cfg.initial_infectives = 10;
    cfg.initial_severity = InitialSeverity::severe;
    cfg.seed = 1;
    SimOutcome o = simulate_once(cfg);
    CHECK(o.mild_removed == 0);
    CHECK(o.severe_removed == 0);
    CHECK(o.infected_fraction == Catch::Approx(10.0 / 600).margin(1e-12));
    CHECK_FALSE(o.major);
}

TEST_CASE("identical seed and config give identical outcomes") {
    SimConfig cfg(SimModel::ids, PopulationConfig(rho3(), 500));
    cfg.ids = reference_ids();
    cfg.seed = 123456;
    SimOutcome a = simulate_once(cfg);
    SimOutcome b = simulate_once(cfg);
    CHECK(a.mild_removed == b.mild_removed);
    CHECK(a.severe_removed == b.severe_removed);
    CHECK(a.events == b.events);
    CHECK(a.infected_fraction == b.infected_fraction);
    for (int n = 1; n <= 3; ++n)
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs)
                CHECK(a.household_counts.at(n, rm, rs) == b.household_counts.at(n, rm, rs));
}

TEST_CASE("household counts cover exactly the unseeded households") {
    SimConfig cfg(SimModel::mt, PopulationConfig(rho3(), 300));
    cfg.mt = reference_mt_sim();
    cfg.initial_infectives = 7;
    cfg.initial_severity = InitialSeverity::by_type;
    cfg.placement_size = 3;
    cfg.seed = 5;
    SimOutcome o = simulate_once(cfg);
    for (int n = 1; n <= 3; ++n) {
        long long total = 0;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) total += o.household_counts.at(n, rm, rs);
        long long expected = cfg.population.counts[static_cast<std::size_t>(n) - 1] -
                             (n == 3 ? 7 : 0);
        CHECK(total == expected);
    }
}

TEST_CASE("single-household ids law matches the hand-enumerated jump chain") {
    // one size-2 household, no global force, one initial mild case:
    // P(1,0) = 1/2, P(2,0) = 1/4, P(1,1) = 1/4 at unit rates and pl_mm = 1/2
    HouseholdSizeDistribution single({0.0, 1.0});
    SimConfig cfg(SimModel::ids, PopulationConfig(single, 1));
    cfg.ids = IdsParams{};
    cfg.ids.local_rate_mild = 1;
    cfg.ids.local_rate_severe = 1;
    cfg.ids.pl_mm = 0.5;
    cfg.ids.pl_sm = 0.5;
    cfg.ids.gamma_severe = 1;
    cfg.initial_infectives = 1;
    cfg.initial_severity = InitialSeverity::mild;
    const int reps = 100000;
    int count_10 = 0, count_20 = 0, count_11 = 0;
    for (int i = 0; i < reps; ++i) {
        cfg.seed = derive_seed(909, static_cast<std::uint64_t>(i));
        SimOutcome o = simulate_once(cfg);
        long long extra_m = o.mild_removed, extra_s = o.severe_removed;
        if (extra_m == 0 && extra_s == 0) ++count_10;
        if (extra_m == 1 && extra_s == 0) ++count_20;
        if (extra_m == 0 && extra_s == 1) ++count_11;
    }
    CHECK(count_10 + count_20 + count_11 == reps);
    double se = 3.0 * std::sqrt(0.5 * 0.5 / reps);
    CHECK(std::abs(count_10 / double(reps) - 0.50) < se);
    CHECK(std::abs(count_20 / double(reps) - 0.25) < se);
    CHECK(std::abs(count_11 / double(reps) - 0.25) < se);
}

TEST_CASE("conservation per household and in aggregate") {
    SimConfig cfg(SimModel::ids, PopulationConfig(rho3(), 400));
    cfg.ids = reference_ids();
    cfg.seed = 31;
    SimOutcome o = simulate_once(cfg);
    // counts tables partition every unseeded household by (rm, rs)
    long long infected_in_counted = 0;
    for (int n = 1; n <= 3; ++n)
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs)
                infected_in_counted += (rm + rs) * o.household_counts.at(n, rm, rs);
    // all infections among initial susceptibles happen in counted households
    // or in the 10 seeded households
    CHECK(infected_in_counted <= o.mild_removed + o.severe_removed);
    CHECK(o.mild_removed + o.severe_removed <=
          infected_in_counted + 10LL * 3);  // seeded households hold at most 30 extras
}

TEST_CASE("zero-rate batch is flagged as having no major outbreaks") {
    SimConfig cfg(SimModel::mt, PopulationConfig(rho3(), 100));
    cfg.mt.global = Rates2x2{};
    cfg.mt.local = Rates2x2{};
    cfg.mt.frac_mild = 0.4;
    cfg.seed = 2;
    BatchResult b = run_batch(cfg, 20);
    CHECK(b.major_count == 0);
    CHECK_FALSE(b.empirical_valid);
    CHECK_THROWS_AS(summarize(b.outcomes), validation_error);
}

TEST_CASE("summarize guards the severe share when nothing is infected") {
    SimConfig cfg(SimModel::mt, PopulationConfig(rho3(), 100));
    cfg.mt.global = Rates2x2{};
    cfg.mt.local = Rates2x2{};
    cfg.mt.frac_mild = 0.4;
    cfg.major_cutoff = 0.0;  // the 10 seeds alone cross a zero cutoff
    cfg.seed = 2;
    SimOutcome o = simulate_once(cfg);
    REQUIRE(o.major);
    SimSummary s = summarize({o});
    for (const auto& row : s.per_size) {
        CHECK(row.p_inf == 0.0);
        CHECK(row.severe_share == 0.0);
    }
}

TEST_CASE("rescaling mild rates and the mild removal rate leaves final sizes unchanged") {
    // the random directed graph underlying the mt final outcome is invariant
    const int reps = 300;
    const long long m = 400;
    SimConfig base(SimModel::mt, PopulationConfig(rho3(), m));
    base.mt = reference_mt_sim();
    base.initial_severity = InitialSeverity::by_type;
    base.seed = 1000;

    SimConfig scaled = base;
    const double c = 2.0;
    scaled.mt.global.mm *= c;
    scaled.mt.global.ms *= c;
    scaled.mt.local.mm *= c;
    scaled.mt.local.ms *= c;
    scaled.mt.gamma_mild = c;
    scaled.seed = 2000;

    BatchResult a = run_batch(base, reps);
    BatchResult b = run_batch(scaled, reps);
    std::vector<double> am, bm, as, bs;
    for (const auto& o : a.outcomes)
        if (o.major) {
            am.push_back(double(o.mild_removed));
            as.push_back(double(o.severe_removed));
        }
    for (const auto& o : b.outcomes)
        if (o.major) {
            bm.push_back(double(o.mild_removed));
            bs.push_back(double(o.severe_removed));
        }
    REQUIRE(am.size() > 100);
    REQUIRE(bm.size() > 100);
    using hhfs_test::mean;
    using hhfs_test::sample_sd;
    double se_m = std::sqrt(std::pow(sample_sd(am), 2) / am.size() +
                            std::pow(sample_sd(bm), 2) / bm.size());
    double se_s = std::sqrt(std::pow(sample_sd(as), 2) / as.size() +
                            std::pow(sample_sd(bs), 2) / bs.size());
    CHECK(std::abs(mean(am) - mean(bm)) < 4 * se_m);
    CHECK(std::abs(mean(as) - mean(bs)) < 4 * se_s);
}

TEST_CASE("empirical distributions approach the deterministic limit as m grows") {
    MtGenerationParams gen;
    gen.global = reference_mt_sim().global;
    gen.local = reference_mt_sim().local;
    gen.frac_mild = reference_mt_sim().frac_mild;
    FinalSizeDistribution limit = mt_asymptotic_final_size(gen, rho3());

    auto avg_tv = [&](long long m, int reps, std::uint64_t seed) {
        SimConfig cfg(SimModel::mt, PopulationConfig(rho3(), m));
        cfg.mt = reference_mt_sim();
        cfg.initial_severity = InitialSeverity::by_type;
        cfg.seed = seed;
        BatchResult b = run_batch(cfg, reps);
        double tv = 0;
        int used = 0;
        for (const auto& o : b.outcomes) {
            if (!o.major) continue;
            tv += hhfs_test::tv_distance(counts_to_distribution(o.household_counts), limit,
                                         rho3());
            ++used;
        }
        REQUIRE(used >= 20);
        return tv / used;
    };
    double tv_small = avg_tv(1000, 25, 77);
    double tv_large = avg_tv(10000, 25, 78);
    CHECK(tv_large < tv_small);
}

TEST_CASE("by_type initial severity is rejected for the ids model") {
    SimConfig cfg(SimModel::ids, PopulationConfig(rho3(), 100));
    cfg.ids = reference_ids();
    cfg.initial_severity = InitialSeverity::by_type;
    CHECK_THROWS_AS(simulate_once(cfg), validation_error);
}

TEST_CASE("initial infectives must fit in distinct households") {
    SimConfig cfg(SimModel::mt, PopulationConfig(rho3(), 12));
    cfg.mt = reference_mt_sim();
    cfg.initial_infectives = 5;  // only 4 size-3 households exist
    CHECK_THROWS_AS(simulate_once(cfg), validation_error);
}
