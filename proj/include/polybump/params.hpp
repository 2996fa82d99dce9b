#pragma once
// System parameters, potential specifications, run configuration, and the
// config-file format (INI-like sections; unknown keys are hard errors).

#include "common.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace polybump::params {

struct SystemParams {
    double mu1 = 1.0;
    double mu2 = 1.0;
    double beta = -1.0;
    double alpha = 0.0;
    int m = 1;
    int k = 2;
    int dim = 2;
    double epsilon = 0.05;
    // m=1 runs must have alpha=0; m>=2 with alpha=0 needs an explicit override.
    bool allow_alpha_zero_multi = false;
};

enum class PotentialKind { Constant, GaussianBump, PolynomialRadial, TabulatedRadial };

struct PotentialSpec {
    PotentialKind kind = PotentialKind::Constant;
    std::vector<double> parameters{1.0};
    double floor = 1.0;  // certified infimum, must stay > 0

    double operator()(double r) const {
        switch (kind) {
            case PotentialKind::Constant:
                return parameters.at(0);
            case PotentialKind::GaussianBump: {
                // base + amp * exp(-(r/width)^2)
                double base = parameters.at(0), amp = parameters.at(1), w = parameters.at(2);
                double q = r / w;
                return base + amp * std::exp(-q * q);
            }
            case PotentialKind::PolynomialRadial: {
                // sum_i params[i] * r^(2i)
                double r2 = r * r, p = 1.0, s = 0.0;
                for (double c : parameters) { s += c * p; p *= r2; }
                return s;
            }
            case PotentialKind::TabulatedRadial: {
                // flat (r0,v0,r1,v1,...) pairs, linear interpolation, constant beyond
                size_t np = parameters.size() / 2;
                if (r <= parameters[0]) return parameters[1];
                for (size_t i = 0; i + 1 < np; ++i) {
                    double r0 = parameters[2 * i], r1 = parameters[2 * i + 2];
                    if (r <= r1) {
                        double s = (r - r0) / (r1 - r0);
                        return (1 - s) * parameters[2 * i + 1] + s * parameters[2 * i + 3];
                    }
                }
                return parameters[2 * np - 1];
            }
        }
        return 0.0;
    }

    bool is_constant() const { return kind == PotentialKind::Constant; }
};

struct GridParams {
    double r_out = 0.0;          // 0 = auto (rho/eps + 30/sqrt(omega0))
    int n_r = 192;
    int n_theta = 32;
    double core_h_factor = 6.0;  // fine spacing = width/(core_h_factor)
};

struct RunConfig {
    std::vector<double> epsilon_sweep{0.1, 0.08, 0.064, 0.0512, 0.04096};
    GridParams grid;
    std::map<std::string, double> tolerances{
        {"newton_tol", 1e-10}, {"quad_tol", 1e-8}, {"fit_tol", 0.01}};
    std::string output_dir = "out";

    double tol(const std::string& name) const {
        auto it = tolerances.find(name);
        if (it == tolerances.end()) throw ConfigError("unknown tolerance: " + name);
        return it->second;
    }
};

struct ValidationReport {
    bool pass = true;
    std::vector<std::string> failures;
    std::vector<std::string> deferred;
    void fail(const std::string& msg) { pass = false; failures.push_back(msg); }
};

inline ValidationReport validate(const SystemParams& p, const PotentialSpec& V,
                                 const PotentialSpec& W, bool full_run = true) {
    ValidationReport rep;
    if (p.mu1 <= 0) rep.fail("mu1 must be positive");
    if (p.mu2 <= 0) rep.fail("mu2 must be positive");
    if (p.k < 2 || p.k % 2 != 0) rep.fail("k must be even and >= 2");
    if (p.m < 1) rep.fail("m must be >= 1");
    if (p.dim < 1 || p.dim > 3) rep.fail("dim must be in {1,2,3}");
    if (p.epsilon <= 0) rep.fail("epsilon must be positive");
    if (p.m == 1 && p.alpha != 0.0) rep.fail("m=1 requires alpha=0");
    if (p.m >= 2 && p.alpha == 0.0 && !p.allow_alpha_zero_multi)
        rep.fail("m>=2 requires alpha!=0 branch or explicit alpha=0 override");
    if (full_run && p.beta >= 0) rep.fail("beta must be < 0 for construction runs");
    if (V.floor <= 0) rep.fail("V floor must be positive");
    if (W.floor <= 0) rep.fail("W floor must be positive");
    rep.deferred.push_back("nondegeneracy of Y: deferred to elliptic.check_nondegeneracy");
    return rep;
}

// ---------------------------------------------------------------------------
// Config file parsing / serialization.

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            size_t pos = 0;
            double v = std::stod(item, &pos);
            if (pos != item.size()) throw ConfigError("bad number in list: '" + item + "'");
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw ConfigError("bad number in list: '" + item + "'");
        }
    }
    return out;
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt_double(v[i]);
    }
    return s;
}

}  // namespace detail

struct Config {
    SystemParams sys;
    PotentialSpec V, W;
    RunConfig run;
};

inline PotentialKind potential_kind_from_string(const std::string& s) {
    if (s == "constant") return PotentialKind::Constant;
    if (s == "gaussian-bump") return PotentialKind::GaussianBump;
    if (s == "polynomial-radial") return PotentialKind::PolynomialRadial;
    if (s == "tabulated-radial") return PotentialKind::TabulatedRadial;
    throw ConfigError("unknown potential kind: '" + s + "'");
}

inline std::string to_string(PotentialKind k) {
    switch (k) {
        case PotentialKind::Constant: return "constant";
        case PotentialKind::GaussianBump: return "gaussian-bump";
        case PotentialKind::PolynomialRadial: return "polynomial-radial";
        case PotentialKind::TabulatedRadial: return "tabulated-radial";
    }
    return "?";
}

inline Config parse_config(std::istream& in) {
    Config cfg;
    std::string line, section;
    int lineno = 0;
    bool v_floor_set = false, w_floor_set = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            if (section != "system" && section != "potential.V" && section != "potential.W" &&
                section != "run")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value at line " + std::to_string(lineno));
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        auto num = [&] {
            try {
                size_t pos = 0;
                double v = std::stod(val, &pos);
                if (pos != val.size())
                    throw ConfigError("bad number for " + key + ": '" + val + "'");
                return v;
            } catch (const std::logic_error&) {
                throw ConfigError("bad number for " + key + ": '" + val + "'");
            }
        };
        if (section == "system") {
            if (key == "mu1") cfg.sys.mu1 = num();
            else if (key == "mu2") cfg.sys.mu2 = num();
            else if (key == "beta") cfg.sys.beta = num();
            else if (key == "alpha") cfg.sys.alpha = num();
            else if (key == "m") cfg.sys.m = (int)num();
            else if (key == "k") cfg.sys.k = (int)num();
            else if (key == "dim") cfg.sys.dim = (int)num();
            else if (key == "epsilon") cfg.sys.epsilon = num();
            else if (key == "allow_alpha_zero_multi") cfg.sys.allow_alpha_zero_multi = num() != 0;
            else throw ConfigError("unknown key '" + key + "' in [system]");
        } else if (section == "potential.V" || section == "potential.W") {
            PotentialSpec& P = section == "potential.V" ? cfg.V : cfg.W;
            bool& fset = section == "potential.V" ? v_floor_set : w_floor_set;
            if (key == "kind") P.kind = potential_kind_from_string(val);
            else if (key == "params") P.parameters = detail::parse_list(val);
            else if (key == "floor") { P.floor = num(); fset = true; }
            else throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        } else if (section == "run") {
            if (key == "epsilon_sweep") cfg.run.epsilon_sweep = detail::parse_list(val);
            else if (key == "r_out") cfg.run.grid.r_out = num();
            else if (key == "n_r") cfg.run.grid.n_r = (int)num();
            else if (key == "n_theta") cfg.run.grid.n_theta = (int)num();
            else if (key == "output_dir") cfg.run.output_dir = val;
            else if (cfg.run.tolerances.count(key)) cfg.run.tolerances[key] = num();
            else throw ConfigError("unknown key '" + key + "' in [run]");
        } else {
            throw ConfigError("key outside any section at line " + std::to_string(lineno));
        }
    }
    // default certified floor for the analytic families
    auto default_floor = [&](PotentialSpec& P, bool set) {
        if (set) return;
        if (P.kind == PotentialKind::Constant) P.floor = P.parameters.at(0);
        else if (P.kind == PotentialKind::GaussianBump)
            P.floor = std::min(P.parameters.at(0), P.parameters.at(0) + P.parameters.at(1));
        else if (P.kind == PotentialKind::PolynomialRadial) P.floor = P.parameters.at(0);
        // tabulated: min of table
        else {
            double mn = P.parameters.at(1);
            for (size_t i = 1; i < P.parameters.size(); i += 2) mn = std::min(mn, P.parameters[i]);
            P.floor = mn;
        }
    };
    default_floor(cfg.V, v_floor_set);
    default_floor(cfg.W, w_floor_set);
    auto dec = cfg.run.epsilon_sweep;
    for (size_t i = 1; i < dec.size(); ++i)
        if (!(dec[i] < dec[i - 1])) throw ConfigError("epsilon_sweep must be strictly decreasing");
    for (auto& [name, t] : cfg.run.tolerances)
        if (t <= 0) throw ConfigError("tolerance " + name + " must be positive");
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

inline std::string serialize_config(const Config& cfg) {
    using detail::fmt_double;
    using detail::fmt_list;
    std::ostringstream os;
    os << "[system]\n";
    os << "mu1 = " << fmt_double(cfg.sys.mu1) << "\n";
    os << "mu2 = " << fmt_double(cfg.sys.mu2) << "\n";
    os << "beta = " << fmt_double(cfg.sys.beta) << "\n";
    os << "alpha = " << fmt_double(cfg.sys.alpha) << "\n";
    os << "m = " << cfg.sys.m << "\n";
    os << "k = " << cfg.sys.k << "\n";
    os << "dim = " << cfg.sys.dim << "\n";
    os << "epsilon = " << fmt_double(cfg.sys.epsilon) << "\n";
    if (cfg.sys.allow_alpha_zero_multi) os << "allow_alpha_zero_multi = 1\n";
    for (auto [name, P] : {std::pair<const char*, const PotentialSpec*>{"potential.V", &cfg.V},
                           {"potential.W", &cfg.W}}) {
        os << "\n[" << name << "]\n";
        os << "kind = " << to_string(P->kind) << "\n";
        os << "params = " << fmt_list(P->parameters) << "\n";
        os << "floor = " << fmt_double(P->floor) << "\n";
    }
    os << "\n[run]\n";
    os << "epsilon_sweep = " << fmt_list(cfg.run.epsilon_sweep) << "\n";
    os << "r_out = " << fmt_double(cfg.run.grid.r_out) << "\n";
    os << "n_r = " << cfg.run.grid.n_r << "\n";
    os << "n_theta = " << cfg.run.grid.n_theta << "\n";
    for (auto& [name, t] : cfg.run.tolerances) os << name << " = " << fmt_double(t) << "\n";
    os << "output_dir = " << cfg.run.output_dir << "\n";
    return os.str();
}

}  // namespace polybump::params
