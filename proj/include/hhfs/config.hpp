#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hhfs/errors.hpp"
#include "hhfs/fitting.hpp"
#include "hhfs/ids_model.hpp"
#include "hhfs/mt_model.hpp"
#include "hhfs/population.hpp"
#include "hhfs/simulator.hpp"

namespace hhfs {

// Sectioned key = value text config:
//
//   [population]
//   rho = 0.29 0.35 0.15 0.14 0.07
//   households = 10000
//
// '#' and ';' start comments; values are scalars or whitespace-separated lists.
class Config {
public:
    static Config parse(std::istream& is, const std::string& name) {
        Config cfg;
        cfg.name_ = name;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::string s = strip_comment(line);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw validation_error(name + ":" + std::to_string(lineno) +
                                           ": malformed section header '" + s + "'");
                section = trim(s.substr(1, s.size() - 2));
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw validation_error(name + ":" + std::to_string(lineno) +
                                       ": expected 'key = value', got '" + s + "'");
            std::string key = trim(s.substr(0, eq));
            std::string value = trim(s.substr(eq + 1));
            if (key.empty())
                throw validation_error(name + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw io_error("cannot open config file '" + path + "'");
        return parse(is, path);
    }

    static Config parse_string(const std::string& text, const std::string& name = "<config>") {
        std::istringstream is(text);
        return parse(is, name);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end())
            throw validation_error(name_ + ": missing required field '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const {
        return to_double(get_string(key), key);
    }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long long get_int(const std::string& key) const { return to_int(get_string(key), key); }
    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::vector<double> get_doubles(const std::string& key) const {
        std::istringstream ss(get_string(key));
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) {
            if (!tok.empty() && tok.back() == ',') tok.pop_back();
            if (tok.empty()) continue;
            out.push_back(to_double(tok, key));
        }
        if (out.empty())
            throw validation_error(name_ + ": field '" + key + "' has no values");
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }
    const std::string& name() const { return name_; }

private:
    static std::string strip_comment(const std::string& s) {
        auto hash = s.find('#');
        auto semi = s.find(';');
        auto cut = std::min(hash == std::string::npos ? s.size() : hash,
                            semi == std::string::npos ? s.size() : semi);
        return s.substr(0, cut);
    }
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }
    double to_double(const std::string& s, const std::string& key) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw validation_error(name_ + ": field '" + key + "' value '" + s +
                                   "' is not a number");
        }
    }
    long long to_int(const std::string& s, const std::string& key) const {
        try {
            std::size_t pos = 0;
            long long v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw validation_error(name_ + ": field '" + key + "' value '" + s +
                                   "' is not an integer");
        }
    }

    std::string name_;
    std::map<std::string, std::string> values_;
};

inline HouseholdSizeDistribution load_distribution(const Config& cfg) {
    auto rho = cfg.get_doubles("population.rho");
    if (rho.size() > 10)
        throw validation_error(cfg.name() +
                               ": population.rho lists more than 10 sizes (configured cap)");
    try {
        return HouseholdSizeDistribution(rho);
    } catch (const validation_error& e) {
        throw validation_error(cfg.name() + ": population.rho: " + e.what());
    }
}

inline Rates2x2 load_rates2x2(const Config& cfg, const std::string& key) {
    auto v = cfg.get_doubles(key);
    if (v.size() != 4)
        throw validation_error(cfg.name() + ": field '" + key +
                               "' must list 4 rates (mm ms sm ss)");
    return Rates2x2{v[0], v[1], v[2], v[3]};
}

// [mt] with explicit escape probabilities (fitting/direct mode).
inline MtParams load_mt_params(const Config& cfg) {
    MtParams p;
    auto pi = cfg.get_doubles("mt.pi");
    if (pi.size() != 2)
        throw validation_error(cfg.name() + ": field 'mt.pi' must list 2 probabilities");
    p.pi_mild = pi[0];
    p.pi_severe = pi[1];
    p.local = load_rates2x2(cfg, "mt.lambda_l");
    p.frac_mild = cfg.get_double("mt.beta_m");
    p.validate();
    return p;
}

// [mt] with global rates (generation mode).
inline MtGenerationParams load_mt_generation(const Config& cfg) {
    MtGenerationParams p;
    p.global = load_rates2x2(cfg, "mt.lambda_g");
    p.local = load_rates2x2(cfg, "mt.lambda_l");
    p.frac_mild = cfg.get_double("mt.beta_m");
    p.validate();
    return p;
}

inline IdsParams load_ids_params(const Config& cfg) {
    IdsParams p;
    auto lg = cfg.get_doubles("ids.lambda_g");
    auto ll = cfg.get_doubles("ids.lambda_l");
    auto pg = cfg.get_doubles("ids.p_g");
    auto pl = cfg.get_doubles("ids.p_l");
    if (lg.size() != 2 || ll.size() != 2 || pg.size() != 2 || pl.size() != 2)
        throw validation_error(cfg.name() +
                               ": ids.lambda_g/lambda_l/p_g/p_l must each list 2 values");
    p.global_rate_mild = lg[0];
    p.global_rate_severe = lg[1];
    p.local_rate_mild = ll[0];
    p.local_rate_severe = ll[1];
    p.pg_mm = pg[0];
    p.pg_sm = pg[1];
    p.pl_mm = pl[0];
    p.pl_sm = pl[1];
    p.gamma_severe = cfg.get_double("ids.gamma_s");
    p.validate();
    return p;
}

inline MtSimParams load_mt_sim_params(const Config& cfg) {
    MtSimParams p;
    p.global = load_rates2x2(cfg, "mt.lambda_g");
    p.local = load_rates2x2(cfg, "mt.lambda_l");
    p.frac_mild = cfg.get_double("mt.beta_m");
    p.gamma_mild = cfg.get_double("mt.gamma_m", 1.0);
    p.gamma_severe = cfg.get_double("mt.gamma_s", 1.0);
    p.validate();
    return p;
}

inline SimModel parse_model(const std::string& value, const std::string& where) {
    if (value == "mt") return SimModel::mt;
    if (value == "ids") return SimModel::ids;
    throw validation_error(where + ": model must be 'mt' or 'ids', got '" + value + "'");
}

inline SimConfig load_sim_config(const Config& cfg, SimModel model) {
    long long m = cfg.get_int("population.households");
    PopulationConfig pop(load_distribution(cfg), m);
    SimConfig sim(model, std::move(pop));
    if (model == SimModel::mt)
        sim.mt = load_mt_sim_params(cfg);
    else
        sim.ids = load_ids_params(cfg);
    sim.initial_infectives = static_cast<int>(cfg.get_int("sim.initial_infectives", 10));
    sim.placement_size = static_cast<int>(cfg.get_int("sim.placement_size", 0));
    std::string sev = cfg.get_string("sim.severity", "severe");
    if (sev == "severe")
        sim.initial_severity = InitialSeverity::severe;
    else if (sev == "mild")
        sim.initial_severity = InitialSeverity::mild;
    else if (sev == "by_type")
        sim.initial_severity = InitialSeverity::by_type;
    else
        throw validation_error(cfg.name() +
                               ": sim.severity must be severe|mild|by_type, got '" + sev + "'");
    sim.major_cutoff = cfg.get_double("sim.cutoff", 0.15);
    sim.validate();
    return sim;
}

inline FitRunConfig load_fit_config(const Config& cfg) {
    FitRunConfig f;
    f.max_evals = static_cast<int>(cfg.get_int("fit.max_evals", f.max_evals));
    f.ftol_rel = cfg.get_double("fit.ftol_rel", f.ftol_rel);
    f.ids_starts = static_cast<int>(cfg.get_int("fit.ids_starts", f.ids_starts));
    f.rate_hi = cfg.get_double("fit.rate_hi", f.rate_hi);
    f.penalty = cfg.get_double("fit.penalty", f.penalty);
    f.f_severe = cfg.get_double("ids.f_severe", f.f_severe);
    f.delta = cfg.get_double("ids.delta", f.delta);
    f.record_trace = cfg.get_int("fit.trace", 0) != 0;
    return f;
}

} // namespace hhfs
