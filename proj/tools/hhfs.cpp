// Command-line front end: final-size computation, stochastic simulation,
// KL fitting, and discrimination experiments, all seeded and file-driven.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hhfs/csv.hpp"
#include "hhfs/hhfs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;
constexpr int exit_io = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    bool out_dir_from_flag = false;
    std::uint64_t seed = 1;
    unsigned jobs = 0;  // 0: resolve from env / hardware

    void resolve() {
        // env overrides apply to out-dir and jobs only
        if (!out_dir_from_flag) {
            if (const char* env = std::getenv("HHFS_OUT")) out_dir = env;
        }
        if (jobs == 0) jobs = hhfs::default_jobs();
    }
};

class ManifestWriter {
public:
    ManifestWriter(std::string subcommand, const CommonArgs& args, const hhfs::Config& cfg)
        : start_(std::chrono::steady_clock::now()) {
        doc_["subcommand"] = std::move(subcommand);
        doc_["version"] = HHFS_VERSION;
        doc_["seed"] = args.seed;
        doc_["jobs"] = args.jobs;
        json resolved = json::object();
        for (const auto& [k, v] : cfg.entries()) resolved[k] = v;
        doc_["config"] = resolved;
        doc_["outputs"] = json::array();
    }

    std::ofstream open_output(const fs::path& dir, const std::string& name) {
        fs::path p = dir / name;
        std::ofstream os(p);
        if (!os) throw hhfs::io_error("cannot open output file '" + p.string() + "'");
        doc_["outputs"].push_back(name);
        return os;
    }

    void extra(const std::string& key, json value) { doc_[key] = std::move(value); }

    // the manifest is the completion marker, so it goes last
    void finish(const fs::path& dir) {
        doc_["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        fs::path p = dir / "manifest.json";
        std::ofstream os(p);
        if (!os) throw hhfs::io_error("cannot open output file '" + p.string() + "'");
        os << doc_.dump(2) << '\n';
    }

private:
    std::chrono::steady_clock::time_point start_;
    json doc_;
};

fs::path prepare_out_dir(const CommonArgs& args) {
    fs::path dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw hhfs::io_error("cannot create output directory '" + dir.string() + "'");
    return dir;
}

hhfs::TargetData load_target(const std::string& path, const hhfs::HouseholdSizeDistribution& dist,
                             std::optional<long long> households) {
    std::ifstream is(path);
    if (!is) throw hhfs::io_error("cannot open target file '" + path + "'");
    hhfs::FinalSizeDistribution q = hhfs::read_final_size_csv(is, path);
    if (q.max_size() != dist.max_size())
        throw hhfs::validation_error("target '" + path + "' has max size " +
                                     std::to_string(q.max_size()) + " but population.rho has " +
                                     std::to_string(dist.max_size()));
    return hhfs::TargetData(std::move(q), dist, households);
}

const char* fit_param_header(hhfs::ModelKind kind) {
    return kind == hhfs::ModelKind::mt
               ? "pi_m,pi_s,lambda_l_mm,lambda_l_ms,lambda_l_sm,lambda_l_ss,beta_m"
               : "lambda_g_m,lambda_g_s,lambda_l_m,lambda_l_s,p_g_mm,p_g_sm,p_l_mm,p_l_sm,gamma_s";
}

void write_fit_csv(std::ostream& os, const hhfs::MultiRunResult& res, hhfs::ModelKind kind) {
    os << "run,converged,evaluations,f," << fit_param_header(kind) << ",g1,g2,g3\n";
    for (const auto& r : res.runs) {
        os << r.run_index << ',' << (r.converged ? 1 : 0) << ',' << r.evaluations << ','
           << hhfs::fmt_g15(r.f);
        for (double v : r.theta) os << ',' << hhfs::fmt_g15(v);
        for (double g : r.ident) os << ',' << hhfs::fmt_g15(g);
        os << '\n';
    }
}

int cmd_final_size(const CommonArgs& args_in, const std::string& model) {
    CommonArgs args = args_in;
    args.resolve();
    hhfs::Config cfg = hhfs::Config::parse_file(args.config_path);
    hhfs::HouseholdSizeDistribution dist = hhfs::load_distribution(cfg);
    fs::path dir = prepare_out_dir(args);
    ManifestWriter manifest("final-size", args, cfg);

    hhfs::FinalSizeDistribution result(dist.max_size());
    if (hhfs::parse_model(model, "final-size --model") == hhfs::SimModel::mt) {
        if (cfg.has("mt.pi")) {
            result = hhfs::mt_final_size(hhfs::load_mt_params(cfg), dist);
        } else {
            hhfs::BalanceResult bal;
            result = hhfs::mt_asymptotic_final_size(hhfs::load_mt_generation(cfg), dist, &bal);
            manifest.extra("balance", json{{"z_mild", bal.z_mild},
                                           {"z_severe", bal.z_severe},
                                           {"pi_mild", bal.pi_mild},
                                           {"pi_severe", bal.pi_severe},
                                           {"iterations", bal.iterations},
                                           {"subcritical", bal.subcritical}});
        }
    } else {
        hhfs::IdsFinalSizeOptions opt;
        opt.f_severe = cfg.get_double("ids.f_severe", 1e-5);
        opt.delta = cfg.get_double("ids.delta", 1e-7);
        hhfs::IdsDiagnostics diag;
        result = hhfs::ids_final_size(hhfs::load_ids_params(cfg), dist, opt, &diag);
        manifest.extra("integration", json{{"t_end", diag.t_end},
                                           {"final_infective_fraction",
                                            diag.final_infective_fraction},
                                           {"steps_accepted", diag.steps_accepted},
                                           {"steps_rejected", diag.steps_rejected},
                                           {"rhs_evals", diag.rhs_evals}});
    }
    {
        auto os = manifest.open_output(dir, "final_size.csv");
        hhfs::write_final_size_csv(result, os);
    }
    manifest.finish(dir);
    std::cout << "final-size: wrote " << (dir / "final_size.csv").string() << '\n';
    return exit_ok;
}

int cmd_simulate(const CommonArgs& args_in, const std::string& model, int replicates,
                 std::optional<double> cutoff) {
    CommonArgs args = args_in;
    args.resolve();
    hhfs::Config cfg = hhfs::Config::parse_file(args.config_path);
    hhfs::SimConfig sim = hhfs::load_sim_config(cfg, hhfs::parse_model(model, "simulate --model"));
    sim.seed = args.seed;
    if (cutoff) sim.major_cutoff = *cutoff;
    int reps = replicates > 0
                   ? replicates
                   : static_cast<int>(cfg.get_int("sim.replicates", 100));
    fs::path dir = prepare_out_dir(args);
    ManifestWriter manifest("simulate", args, cfg);

    hhfs::BatchResult batch = hhfs::run_batch(sim, reps, args.jobs);
    {
        auto os = manifest.open_output(dir, "batch.csv");
        os << "replicate,seed,mild_total,severe_total,major\n";
        for (std::size_t i = 0; i < batch.outcomes.size(); ++i) {
            const auto& o = batch.outcomes[i];
            os << i << ',' << o.seed << ',' << o.mild_removed << ',' << o.severe_removed << ','
               << (o.major ? 1 : 0) << '\n';
        }
    }
    {
        auto os = manifest.open_output(dir, "empirical.csv");
        hhfs::write_final_size_csv(batch.empirical, os);
    }
    {
        // binned major-outbreak totals, one block per variable
        auto os = manifest.open_output(dir, "histogram.csv");
        os << "variable,bin_lo,bin_hi,count\n";
        for (const char* var : {"mild_total", "severe_total"}) {
            std::vector<double> values;
            for (const auto& o : batch.outcomes)
                if (o.major)
                    values.push_back(static_cast<double>(
                        std::string(var) == "mild_total" ? o.mild_removed : o.severe_removed));
            if (values.empty()) continue;
            auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
            double lo = *lo_it, hi = *hi_it + 1.0;
            for (const auto& b : hhfs::histogram(values, 30, lo, hi))
                os << var << ',' << hhfs::fmt_g15(b.lo) << ',' << hhfs::fmt_g15(b.hi) << ','
                   << b.count << '\n';
        }
    }
    manifest.extra("major_outbreaks", batch.major_count);
    manifest.extra("replicates", reps);
    if (!batch.empirical_valid)
        manifest.extra("warning", "no major outbreaks; empirical distribution is empty");
    manifest.finish(dir);
    std::cout << "simulate: " << batch.major_count << "/" << reps << " major outbreaks\n";
    return exit_ok;
}

int cmd_fit(const CommonArgs& args_in, const std::string& model, const std::string& target_path,
            int runs) {
    CommonArgs args = args_in;
    args.resolve();
    hhfs::Config cfg = hhfs::Config::parse_file(args.config_path);
    hhfs::HouseholdSizeDistribution dist = hhfs::load_distribution(cfg);
    std::optional<long long> households;
    if (cfg.has("population.households")) households = cfg.get_int("population.households");
    hhfs::TargetData target = load_target(target_path, dist, households);
    hhfs::ModelKind kind = hhfs::parse_model(model, "fit --model") == hhfs::SimModel::mt
                               ? hhfs::ModelKind::mt
                               : hhfs::ModelKind::ids;
    hhfs::FitRunConfig fit_cfg = hhfs::load_fit_config(cfg);
    fit_cfg.seed = args.seed;
    fit_cfg.jobs = args.jobs;
    int n_runs = runs > 0 ? runs : static_cast<int>(cfg.get_int("fit.runs", 5));

    fs::path dir = prepare_out_dir(args);
    ManifestWriter manifest("fit", args, cfg);
    hhfs::MultiRunResult res = hhfs::multi_run(kind, target, n_runs, fit_cfg);
    {
        auto os = manifest.open_output(dir, "fits.csv");
        write_fit_csv(os, res, kind);
    }
    const hhfs::FitResult& best = res.runs[static_cast<std::size_t>(res.best_index)];
    if (fit_cfg.record_trace) {
        auto os = manifest.open_output(dir, "fit_trace.csv");
        os << "run,iteration,best_f\n";
        for (const auto& r : res.runs)
            for (const auto& [iter, fbest] : r.trace)
                os << r.run_index << ',' << iter << ',' << hhfs::fmt_g15(fbest) << '\n';
    }
    manifest.extra("best_run", best.run_index);
    manifest.extra("best_f", best.f);
    if (households) {
        hhfs::PseudoDiagnostics d = hhfs::pseudo_diagnostics(
            target, hhfs::FitObjective(kind, target, fit_cfg).model_distribution(best.theta),
            kind);
        manifest.extra("pseudo_diagnostics",
                       json{{"log_pseudolikelihood", d.log_pseudolikelihood},
                            {"lambda_statistic", d.lambda_statistic},
                            {"chi_square", d.chi_square},
                            {"dof", d.dof}});
    }
    manifest.finish(dir);
    std::cout << "fit: best f = " << hhfs::fmt_g15(best.f) << " (run " << best.run_index
              << " of " << n_runs << ")\n";
    return exit_ok;
}

void write_sweep_csv(std::ostream& os, const std::vector<hhfs::SweepRecord>& records,
                     hhfs::ModelKind generator) {
    os << "dataset,generated,draw_attempts,best_f,near_critical,near_critical_flag,";
    if (generator == hhfs::ModelKind::ids)
        os << "ids_local_min,ids_local_min_flag,ids_local_prob_gap,ids_local_prob_gap_flag,";
    else
        os << "mt_one_type,mt_one_type_flag,mt_escape_min,mt_escape_min_flag,";
    os << "theta\n";
    for (const auto& r : records) {
        os << r.dataset << ',' << (r.generated ? 1 : 0) << ',' << r.draw_attempts << ','
           << hhfs::fmt_g15(r.best_f) << ',' << hhfs::fmt_g15(r.degeneracy.near_critical) << ','
           << (r.degeneracy.near_critical_flag ? 1 : 0) << ',';
        if (generator == hhfs::ModelKind::ids)
            os << hhfs::fmt_g15(r.degeneracy.ids_local_min) << ','
               << (r.degeneracy.ids_local_min_flag ? 1 : 0) << ','
               << hhfs::fmt_g15(r.degeneracy.ids_local_prob_gap) << ','
               << (r.degeneracy.ids_local_prob_gap_flag ? 1 : 0) << ',';
        else
            os << hhfs::fmt_g15(r.degeneracy.mt_one_type) << ','
               << (r.degeneracy.mt_one_type_flag ? 1 : 0) << ','
               << hhfs::fmt_g15(r.degeneracy.mt_escape_min) << ','
               << (r.degeneracy.mt_escape_min_flag ? 1 : 0) << ',';
        os << '"';
        for (std::size_t i = 0; i < r.generator_theta.size(); ++i)
            os << (i ? " " : "") << hhfs::fmt_g15(r.generator_theta[i]);
        os << "\"\n";
    }
}

int cmd_experiment(const CommonArgs& args_in) {
    CommonArgs args = args_in;
    args.resolve();
    hhfs::Config cfg = hhfs::Config::parse_file(args.config_path);
    if (!cfg.has("experiment.kind"))
        throw hhfs::validation_error(cfg.name() + ": missing required field 'experiment.kind'");
    std::string kind = cfg.get_string("experiment.kind");
    hhfs::HouseholdSizeDistribution dist = hhfs::load_distribution(cfg);
    hhfs::FitRunConfig fit_cfg = hhfs::load_fit_config(cfg);
    fs::path dir = prepare_out_dir(args);
    ManifestWriter manifest("experiment", args, cfg);

    if (kind == "cross_fit") {
        int runs = static_cast<int>(cfg.get_int("experiment.runs", 100));
        fit_cfg.seed = args.seed;
        fit_cfg.jobs = 1;
        hhfs::MtGenerationParams mt_truth = hhfs::load_mt_generation(cfg);
        hhfs::IdsParams ids_truth = hhfs::load_ids_params(cfg);
        hhfs::CrossFitResult res =
            hhfs::cross_fit_table(mt_truth, ids_truth, dist, runs, fit_cfg);
        auto os = manifest.open_output(dir, "cross_fit.csv");
        os << "data_model,fit_model,best_f,runs\n";
        const char* names[2] = {"mt", "ids"};
        for (int d = 0; d < 2; ++d)
            for (int m = 0; m < 2; ++m)
                os << names[d] << ',' << names[m] << ',' << hhfs::fmt_g15(res.best_f(d, m))
                   << ',' << runs << '\n';
        manifest.finish(dir);
        std::cout << "experiment cross_fit: wrote " << (dir / "cross_fit.csv").string() << '\n';
        return exit_ok;
    }

    hhfs::ModelKind generator =
        hhfs::parse_model(cfg.get_string("experiment.generator", "mt"), "experiment.generator") ==
                hhfs::SimModel::mt
            ? hhfs::ModelKind::mt
            : hhfs::ModelKind::ids;

    if (kind == "sweep") {
        hhfs::SweepConfig sweep;
        sweep.n_datasets = static_cast<int>(cfg.get_int("experiment.datasets", 100));
        sweep.runs_per_fit = static_cast<int>(cfg.get_int("experiment.runs_per_fit", 5));
        sweep.seed = args.seed;
        sweep.fit = fit_cfg;
        sweep.jobs = args.jobs;
        auto records = hhfs::random_parameter_sweep(generator, dist, sweep);
        {
            auto os = manifest.open_output(dir, "sweep.csv");
            write_sweep_csv(os, records, generator);
        }
        {
            std::vector<double> logs;
            for (const auto& r : records)
                if (r.generated && r.best_f > 0) logs.push_back(std::log10(r.best_f));
            auto os = manifest.open_output(dir, "sweep_hist.csv");
            os << "log10_f_lo,log10_f_hi,count\n";
            if (!logs.empty()) {
                auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
                for (const auto& b : hhfs::histogram(logs, 30, *lo_it, *hi_it + 1e-9))
                    os << hhfs::fmt_g15(b.lo) << ',' << hhfs::fmt_g15(b.hi) << ',' << b.count
                       << '\n';
            }
        }
        manifest.finish(dir);
        std::cout << "experiment sweep: " << records.size() << " datasets\n";
        return exit_ok;
    }

    if (kind == "finite") {
        hhfs::FiniteDataConfig fin;
        fin.n_datasets = static_cast<int>(cfg.get_int("experiment.datasets", 25));
        fin.households = cfg.get_int("experiment.m", 10000);
        fin.runs_per_fit = static_cast<int>(cfg.get_int("experiment.runs_per_fit", 5));
        fin.seed = args.seed;
        fin.fit = fit_cfg;
        fin.jobs = args.jobs;
        hhfs::MtSimParams mt_truth = hhfs::load_mt_sim_params(cfg);
        hhfs::IdsParams ids_truth = hhfs::load_ids_params(cfg);
        auto res = hhfs::finite_data_experiment(generator, mt_truth, ids_truth, dist, fin);
        auto sorted = res.records;
        std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
            double fa = generator == hhfs::ModelKind::mt ? a.f_mt : a.f_ids;
            double fb = generator == hhfs::ModelKind::mt ? b.f_mt : b.f_ids;
            return fa < fb;
        });
        auto os = manifest.open_output(dir, "finite.csv");
        os << "dataset,sim_seed,sim_attempts,f_mt,f_ids,correct_wins\n";
        for (const auto& r : sorted)
            os << r.dataset << ',' << r.sim_seed << ',' << r.sim_attempts << ','
               << hhfs::fmt_g15(r.f_mt) << ',' << hhfs::fmt_g15(r.f_ids) << ','
               << (r.correct_wins ? 1 : 0) << '\n';
        manifest.extra("correct_wins", res.correct_wins);
        manifest.extra("datasets", fin.n_datasets);
        manifest.finish(dir);
        std::cout << "experiment finite: correct model wins " << res.correct_wins << "/"
                  << fin.n_datasets << '\n';
        return exit_ok;
    }

    throw hhfs::validation_error(cfg.name() + ": experiment.kind must be cross_fit|sweep|finite, got '" +
                                 kind + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"household final-size toolkit: two-type SIR household models, "
                 "simulation, and KL model discrimination"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string model = "mt";
    int replicates = 0;
    int runs = 0;
    std::string target_path;
    std::optional<double> cutoff;

    auto add_common = [&](CLI::App* sub, bool needs_model) {
        sub->add_option("--config", args.config_path, "config file (sectioned key = value)")
            ->required();
        sub->add_option("--out", args.out_dir, "output directory")
            ->each([&](const std::string&) { args.out_dir_from_flag = true; });
        sub->add_option("--seed", args.seed, "master seed; all randomness derives from it");
        sub->add_option("--jobs", args.jobs, "max concurrent jobs (default: HHFS_JOBS or cores)");
        if (needs_model)
            sub->add_option("--model", model, "mt or ids")->required();
    };

    CLI::App* sc_final = app.add_subcommand("final-size", "asymptotic final-size distribution");
    add_common(sc_final, true);

    CLI::App* sc_sim = app.add_subcommand("simulate", "stochastic finite-population batch");
    add_common(sc_sim, true);
    sc_sim->add_option("--replicates", replicates, "number of replicates");
    double cutoff_value = -1;
    sc_sim->add_option("--cutoff", cutoff_value, "major-outbreak cutoff fraction");

    CLI::App* sc_fit = app.add_subcommand("fit", "fit a model to target final-size data");
    add_common(sc_fit, true);
    sc_fit->add_option("--target", target_path, "target final-size CSV")->required();
    sc_fit->add_option("--runs", runs, "independent optimizer runs");

    CLI::App* sc_exp = app.add_subcommand("experiment", "discrimination experiments");
    add_common(sc_exp, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (sc_sim->parsed() && cutoff_value >= 0) cutoff = cutoff_value;
        if (sc_final->parsed()) return cmd_final_size(args, model);
        if (sc_sim->parsed()) return cmd_simulate(args, model, replicates, cutoff);
        if (sc_fit->parsed()) return cmd_fit(args, model, target_path, runs);
        if (sc_exp->parsed()) return cmd_experiment(args);
    } catch (const hhfs::validation_error& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return exit_validation;
    } catch (const hhfs::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const hhfs::io_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    }
    return exit_ok;
}
