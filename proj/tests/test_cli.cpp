// End-to-end checks through the installed binary; the build exports its path
// in HHFS_CLI and the sample configs directory in HHFS_CONFIG_DIR.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hhfs/final_size.hpp"
#include "hhfs/population.hpp"

namespace fs = std::filesystem;
using namespace hhfs;

namespace {

std::string cli_path() {
    const char* p = std::getenv("HHFS_CLI");
    REQUIRE(p != nullptr);
    return p;
}

std::string config_dir() {
    const char* p = std::getenv("HHFS_CONFIG_DIR");
    REQUIRE(p != nullptr);
    return p;
}

int run_cli(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "hhfs_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("final-size subcommand reproduces the mt asymptotics") {
    fs::path dir = fresh_dir("final_mt");
    int rc = run_cli("final-size --model mt --config " + config_dir() + "/mt.ini --out " +
                     dir.string());
    REQUIRE(rc == 0);
    std::ifstream is(dir / "final_size.csv");
    FinalSizeDistribution d = read_final_size_csv(is, "final_size.csv");
    REQUIRE(d.max_size() == 5);
    auto a = d.aggregates(1);
    CHECK(a.p_mild == Catch::Approx(0.1273).margin(2e-4));
    CHECK(a.p_severe == Catch::Approx(0.3256).margin(2e-4));
    CHECK(slurp(dir / "manifest.json").find("final_size.csv") != std::string::npos);
}

TEST_CASE("final-size subcommand writes ids integration diagnostics") {
    fs::path dir = fresh_dir("final_ids");
    int rc = run_cli("final-size --model ids --config " + config_dir() + "/ids.ini --out " +
                     dir.string());
    REQUIRE(rc == 0);
    std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("integration") != std::string::npos);
    CHECK(manifest.find("t_end") != std::string::npos);
    std::ifstream is(dir / "final_size.csv");
    FinalSizeDistribution d = read_final_size_csv(is, "final_size.csv");
    CHECK(d.aggregates(5).p_inf == Catch::Approx(0.7888).margin(1e-3));
}

TEST_CASE("simulate is deterministic given the seed") {
    fs::path a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
    std::string base = "simulate --model mt --config " + config_dir() +
                       "/mt.ini --seed 42 --replicates 10 --jobs 2";
    REQUIRE(run_cli(base + " --out " + a.string()) == 0);
    REQUIRE(run_cli(base + " --out " + b.string()) == 0);
    CHECK(slurp(a / "batch.csv") == slurp(b / "batch.csv"));
    CHECK(slurp(a / "empirical.csv") == slurp(b / "empirical.csv"));
    CHECK(slurp(a / "histogram.csv") == slurp(b / "histogram.csv"));
}

TEST_CASE("simulate flags a cutoff nothing can cross") {
    fs::path dir = fresh_dir("sim_cutoff");
    int rc = run_cli("simulate --model mt --config " + config_dir() +
                     "/mt.ini --seed 1 --replicates 5 --cutoff 1.0 --out " + dir.string());
    REQUIRE(rc == 0);
    std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("\"major_outbreaks\": 0") != std::string::npos);
    CHECK(manifest.find("no major outbreaks") != std::string::npos);
}

TEST_CASE("fit pipeline runs end to end on generated data") {
    fs::path data_dir = fresh_dir("fit_data");
    REQUIRE(run_cli("final-size --model mt --config " + config_dir() + "/mt.ini --out " +
                    data_dir.string()) == 0);
    fs::path fit_dir = fresh_dir("fit_out");
    int rc = run_cli("fit --model mt --config " + config_dir() + "/mt.ini --target " +
                     (data_dir / "final_size.csv").string() + " --runs 2 --seed 5 --out " +
                     fit_dir.string());
    REQUIRE(rc == 0);
    std::string fits = slurp(fit_dir / "fits.csv");
    CHECK(fits.find("run,converged,evaluations,f,pi_m") == 0);
    // two data rows plus header
    CHECK(std::count(fits.begin(), fits.end(), '\n') == 3);
}

TEST_CASE("missing target file exits with the i/o code") {
    fs::path dir = fresh_dir("fit_missing");
    int rc = run_cli("fit --model mt --config " + config_dir() +
                     "/mt.ini --target /nonexistent/q.csv --out " + dir.string());
    CHECK(rc == 4);
}

TEST_CASE("malformed proportions exit with the validation code") {
    fs::path dir = fresh_dir("bad_rho");
    std::ofstream cfg(dir / "bad.ini");
    cfg << "[population]\nrho = 0.4 0.5\n[mt]\nbeta_m = 0.4\nlambda_l = 0.2 0.4 0.4 0.8\n"
           "pi = 0.7 0.5\n";
    cfg.close();
    int rc = run_cli("final-size --model mt --config " + (dir / "bad.ini").string() +
                     " --out " + dir.string());
    CHECK(rc == 2);
}

TEST_CASE("experiment requires a kind") {
    fs::path dir = fresh_dir("exp_empty");
    std::ofstream cfg(dir / "empty.ini");
    cfg << "[population]\nrho = 1.0\n";
    cfg.close();
    int rc = run_cli("experiment --config " + (dir / "empty.ini").string() + " --out " +
                     dir.string());
    CHECK(rc == 2);
}

TEST_CASE("unknown model name exits with the validation code") {
    fs::path dir = fresh_dir("bad_model");
    int rc = run_cli("final-size --model bogus --config " + config_dir() + "/mt.ini --out " +
                     dir.string());
    CHECK(rc == 2);
}
