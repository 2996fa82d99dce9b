// Command-line front end: config ingestion, module pipelines, CSV/JSON
// artifacts.  Exit codes: 0 success, 2 config error, 3 numerical failure
// (including failed checks), 4 hypothesis violation.

#include "polybump/balance.hpp"
#include "polybump/elliptic.hpp"
#include "polybump/geometry.hpp"
#include "polybump/interactions.hpp"
#include "polybump/io.hpp"
#include "polybump/params.hpp"
#include "polybump/radial.hpp"
#include "polybump/reduction.hpp"
#include "polybump/shadow.hpp"
#include "polybump/solver.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace pb = polybump;
using pb::io::json;

namespace {

struct RunCtx {
    pb::params::Config cfg;
    std::string out_dir;
    std::vector<double> eps;  // resolved sweep (strictly decreasing)
    bool quick = false;
    int jobs = 1;
};

template <class F>
void parallel_for(int n, int jobs, F f) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errs(jobs);
    for (int t = 0; t < jobs; ++t)
        threads.emplace_back([&, t] {
            try {
                int i;
                while ((i = next.fetch_add(1)) < n) f(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    for (auto& th : threads) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

void emit_csv(const RunCtx& rc, pb::io::ReportBundle& b, const std::string& name,
              const pb::io::CsvWriter& csv) {
    std::string path = rc.out_dir + "/" + name;
    pb::io::write_file(path, csv.body());
    b.outputs.push_back(path);
}

void finish(const RunCtx& rc, pb::io::ReportBundle& b, const std::string& name) {
    b.run_id = pb::io::run_id_of(b.config_snapshot + "\n" + name);
    std::string path = rc.out_dir + "/" + name + "_report.json";
    pb::io::write_file(path, b.to_json().dump(2) + "\n");
    b.outputs.push_back(path);
    for (auto& [check, ok] : b.summary)
        std::cout << (ok ? "ok   " : "FAIL ") << name << ": " << check << "\n";
}

pb::io::ReportBundle new_bundle(const RunCtx& rc) {
    pb::io::ReportBundle b;
    b.config_snapshot = pb::params::serialize_config(rc.cfg);
    return b;
}

// shared calibration: shadow system, single bump, constants, interaction
// prefactor from the bump-only sweep, and the balanced peak radius
struct Calibration {
    pb::shadow::ShadowPotential sh;
    pb::radial::RadialProfile U;
    pb::reduction::Constants cst;
    pb::reduction::PrefactorFit pf;
    double prefactor = 0;
    pb::reduction::ReducedSolution rd;
};

Calibration calibrate(const RunCtx& rc, double epsilon) {
    const auto& p0 = rc.cfg.sys;
    Calibration cal;
    cal.sh = pb::shadow::compute_shadow(p0, rc.cfg.V, rc.cfg.W);
    if (!(cal.sh.omega0 > 0))
        throw pb::HypothesisError("shadow frequency omega0 is not positive");
    cal.U = pb::radial::solve_ground_state(cal.sh.omega0, p0.mu2, p0.dim);
    cal.cst = pb::reduction::eval_constants(cal.U, p0.k, p0.dim);
    std::vector<double> ts, vals;
    double step = rc.quick ? 1.5 : 0.75;
    for (double t = 6.0; t <= 12.0 + 1e-9; t += step) {
        ts.push_back(t);
        vals.push_back(p0.alpha == 0.0
                           ? std::abs(pb::reduction::f3_sample(cal.U, p0.k, p0.m, t, p0.mu2))
                           : std::abs(pb::reduction::f9_sample(cal.U, p0.k, p0.m, t, p0.alpha)));
    }
    pb::balance::BalanceProblem bp;
    bp.kase = p0.alpha == 0.0 ? pb::balance::BalanceCase::AlphaZero
                              : pb::balance::BalanceCase::AlphaNonzero;
    bp.omega0 = cal.sh.omega0;
    bp.k = p0.k;
    bp.m = p0.m;
    bp.dim = p0.dim;
    cal.pf = pb::reduction::fit_prefactor(ts, vals, bp.rate(), bp.poly_power());
    cal.prefactor = cal.pf.prefactor;
    auto p = p0;
    p.epsilon = epsilon;
    cal.rd = pb::reduction::solve_reduced_d(p, cal.sh, cal.cst, cal.prefactor);
    return cal;
}

// ---------------------------------------------------------------------------

int cmd_ground_state(const RunCtx& rc) {
    auto b = new_bundle(rc);
    const auto& p = rc.cfg.sys;
    double tol = rc.cfg.run.tol("newton_tol");
    auto U = pb::radial::solve_ground_state(1.0, p.mu2, p.dim);
    pb::io::CsvWriter csv({"r", "U"});
    for (size_t i = 0; i < U.r.size(); ++i) csv.row({U.r[i], U.u[i]});
    emit_csv(rc, b, "ground_state.csv", csv);
    b.details["omega"] = 1.0;
    b.details["mu"] = p.mu2;
    b.details["dim"] = p.dim;
    b.details["u0"] = U.u0();
    b.details["tail"] = {{"C0", U.C0}, {"rate", U.rate}, {"power", U.power},
                         {"r_match", U.r_match}};
    b.details["nodal_error_est"] = U.residual_est;
    b.summary["nodal_error_below_tol"] = U.residual_est < tol;
    if (p.dim == 1 && p.mu2 == 1.0) {
        // exact 1D profile sqrt(2) sech(r)
        double worst = 0;
        for (size_t i = 0; i < U.r.size(); ++i)
            worst = std::max(worst, std::abs(U.u[i] - std::sqrt(2.0) / std::cosh(U.r[i])));
        b.details["sech_max_error"] = worst;
        b.summary["matches_sech"] = worst < 1e-8;
    }
    finish(rc, b, "ground_state");
    return b.all_pass() ? 0 : 3;
}

int cmd_shadow(const RunCtx& rc) {
    auto b = new_bundle(rc);
    auto sh = pb::shadow::compute_shadow(rc.cfg.sys, rc.cfg.V, rc.cfg.W);
    if (!(sh.omega0 > 0)) throw pb::HypothesisError("omega0 <= 0");
    pb::io::CsvWriter csv({"r", "omega"});
    double rmax = 9.0 / sh.Y.rate;
    for (int i = 0; i <= 400; ++i) {
        double r = rmax * i / 400.0;
        csv.row({r, sh.omega(r)});
    }
    emit_csv(rc, b, "shadow_omega.csv", csv);
    b.details["y0"] = sh.Y.u0();
    b.details["omega0"] = sh.omega0;
    b.details["lap_omega0"] = sh.lap_omega0;
    b.details["lap_omega0_fd"] = sh.lap_omega0_fd;
    b.details["classification"] =
        pb::shadow::to_string(pb::shadow::classify(sh, rc.cfg.sys.alpha));
    double scale = std::max(std::abs(sh.lap_omega0), 1e-12);
    b.summary["laplacian_crosscheck"] =
        std::abs(sh.lap_omega0 - sh.lap_omega0_fd) < 1e-4 * scale + 1e-10;
    b.summary["omega0_positive"] = sh.omega0 > 0;
    finish(rc, b, "shadow");
    return b.all_pass() ? 0 : 3;
}

int cmd_interactions(const RunCtx& rc) {
    auto b = new_bundle(rc);
    const auto& p = rc.cfg.sys;
    auto sh = pb::shadow::compute_shadow(p, rc.cfg.V, rc.cfg.W);
    auto U = pb::radial::solve_ground_state(sh.omega0, p.mu2, p.dim);
    auto shape = pb::interactions::shape_of(U);
    int nsamp = rc.quick ? 8 : 12;
    std::vector<double> xis(nsamp), vals(nsamp);
    parallel_for(nsamp, rc.jobs, [&](int i) {
        double xi = (6.0 + 8.0 * i / (nsamp - 1)) / U.rate;
        xis[i] = xi;
        vals[i] = pb::interactions::pair_integral(shape, shape, {xi, 0.0, 0.0}, p.dim);
    });
    pb::io::CsvWriter csv({"xi", "integral"});
    for (int i = 0; i < nsamp; ++i) csv.row({xis[i], vals[i]});
    emit_csv(rc, b, "interactions_pair.csv", csv);
    auto fit = pb::interactions::fit_asymptotics(xis, vals);
    auto pred = pb::interactions::predict_pair(U.power, U.rate, U.power, U.rate, p.dim);
    b.details["fit"] = {{"rate", fit.exp_rate}, {"power", fit.poly_power},
                        {"prefactor", fit.prefactor}, {"r2", fit.r2}};
    b.details["predicted"] = {{"rate", pred.rate}, {"power", pred.power},
                              {"log_factor", pred.log_factor}};
    b.summary["rate_matches_prediction"] =
        std::abs(fit.exp_rate - pred.rate) < 0.05 * pred.rate;
    b.summary["fit_quality"] = fit.r2 > 0.999;
    finish(rc, b, "interactions");
    return b.all_pass() ? 0 : 3;
}

int cmd_balance(const RunCtx& rc) {
    auto b = new_bundle(rc);
    Calibration cal = calibrate(rc, rc.eps.front());
    pb::io::CsvWriter csv({"epsilon", "rho", "t", "d_eff", "residual"});
    std::vector<pb::balance::BalanceSolution> sols(rc.eps.size());
    parallel_for((int)rc.eps.size(), rc.jobs, [&](int i) {
        auto bp = cal.rd.problem;
        bp.epsilon = rc.eps[i];
        sols[i] = pb::balance::solve_balance(bp);
    });
    bool all_t = true, all_res = true;
    for (size_t i = 0; i < rc.eps.size(); ++i) {
        csv.row({rc.eps[i], sols[i].rho, sols[i].t, sols[i].d_eff, sols[i].residual});
        all_t = all_t && sols[i].t > 1.0;
        all_res = all_res && std::abs(sols[i].residual) < rc.cfg.run.tol("newton_tol");
    }
    emit_csv(rc, b, "balance_sweep.csv", csv);
    b.details["rate"] = cal.rd.problem.rate();
    b.details["d_limit"] = cal.rd.problem.d_limit();
    b.details["prefactor"] = cal.prefactor;
    b.details["prefactor_fit"] = {{"rate", cal.pf.fitted_rate},
                                  {"power", cal.pf.fitted_power}, {"r2", cal.pf.r2}};
    b.details["rate_ordering_holds"] =
        pb::balance::rate_ordering_holds(rc.cfg.sys.k, rc.cfg.sys.m);
    b.summary["t_above_one"] = all_t;
    b.summary["residual_below_tol"] = all_res;
    finish(rc, b, "balance");
    return b.all_pass() ? 0 : 3;
}

int cmd_corrections(const RunCtx& rc) {
    auto b = new_bundle(rc);
    double eps = rc.eps.front();
    Calibration cal = calibrate(rc, eps);
    auto p = rc.cfg.sys;
    p.epsilon = eps;
    auto c = pb::reduction::build_context(p, rc.cfg.V, rc.cfg.W, cal.rd.sol.d_eff);
    pb::io::CsvWriter cphi({"r", "phi"});
    for (int i = 0; i < c.ugrid->nr(); ++i) cphi.row({c.ugrid->r[i], c.phi.at(i, 0)});
    emit_csv(rc, b, "correction_phi.csv", cphi);
    pb::io::CsvWriter cpsi({"r", "psi"});
    for (int i = 0; i < c.vgrid->nr(); ++i) cpsi.row({c.vgrid->r[i], c.psi.psi.at(i, 0)});
    emit_csv(rc, b, "correction_psi.csv", cpsi);
    double sqw = std::sqrt(c.sh.omega0);
    b.details["epsilon"] = eps;
    b.details["d"] = cal.rd.sol.d_eff;
    b.details["phi0"] = c.phi0;
    b.details["phi_sup"] = c.phi.v.cwiseAbs().maxCoeff();
    b.details["psi_sup"] = c.psi.psi.v.cwiseAbs().maxCoeff();
    b.details["deflation_multiplier"] = c.psi.deflation_multiplier;
    b.details["deflation_defect"] = c.psi.deflation_defect;
    b.details["gamma"] = c.psi.gamma;
    b.details["gamma_r2"] = c.psi.gamma_r2;
    b.summary["deflation_defect_small"] = c.psi.deflation_defect < 1e-8;
    b.summary["psi_decay_rate_in_range"] = c.psi.gamma > 0 && c.psi.gamma < 1.2 * sqw;
    finish(rc, b, "corrections");
    return b.all_pass() ? 0 : 3;
}

int cmd_errors(const RunCtx& rc) {
    auto b = new_bundle(rc);
    Calibration cal = calibrate(rc, rc.eps.front());
    double d = cal.rd.sol.d_eff;
    std::vector<double> eps = rc.eps;
    if (rc.quick && eps.size() > 3) eps.resize(3);
    std::vector<pb::reduction::ErrorReport> reps(eps.size());
    parallel_for((int)eps.size(), rc.jobs, [&](int i) {
        auto p = rc.cfg.sys;
        p.epsilon = eps[i];
        auto c = pb::reduction::build_context(p, rc.cfg.V, rc.cfg.W, d);
        reps[i] = pb::reduction::eval_error_terms(c);
    });
    pb::io::CsvWriter csv({"epsilon", "e1_l2", "e2_l2", "ledger_defect"});
    std::vector<double> e1, e2;
    bool defects_ok = true;
    for (size_t i = 0; i < eps.size(); ++i) {
        csv.row({eps[i], reps[i].e1_l2, reps[i].e2_l2, reps[i].ledger_defect});
        e1.push_back(reps[i].e1_l2);
        e2.push_back(reps[i].e2_l2);
        defects_ok = defects_ok && reps[i].ledger_defect < 1e-8;
    }
    emit_csv(rc, b, "error_sweep.csv", csv);
    pb::io::CsvWriter terms({"term", "l2_norm"});
    for (auto& [name, v] : reps.front().per_term)
        terms.row_strings({name, pb::io::fmt(v)});
    emit_csv(rc, b, "error_terms.csv", terms);
    pb::RateFit f1 = pb::fit_rate(eps, e1);
    pb::RateFit plain = pb::fit_rate(eps, e2);
    pb::RateFit logc = pb::fit_rate(eps, e2, 2.0);
    b.details["d"] = d;
    b.details["e1_exponent"] = f1.exponent;
    b.details["e2_exponent"] = logc.exponent;
    b.details["e2_plain_exponent"] = plain.exponent;
    b.details["e2_log_model_preferred"] = logc.rss < plain.rss;
    b.summary["ledger_defect_small"] = defects_ok;
    b.summary["errors_shrink_with_epsilon"] = f1.exponent > 0 && logc.exponent > 0;
    finish(rc, b, "errors");
    return b.all_pass() ? 0 : 3;
}

int cmd_reduce(const RunCtx& rc) {
    auto b = new_bundle(rc);
    double eps = rc.eps.front();
    Calibration cal = calibrate(rc, eps);
    auto p = rc.cfg.sys;
    p.epsilon = eps;
    auto c = pb::reduction::build_context(p, rc.cfg.V, rc.cfg.W, cal.rd.sol.d_eff);
    auto proj = pb::reduction::eval_projection(c);
    pb::io::CsvWriter csv({"term", "projection"});
    for (auto& [name, v] : proj.f_terms) csv.row_strings({name, pb::io::fmt(v)});
    emit_csv(rc, b, "reduce_projections.csv", csv);
    double f1 = proj.f_terms.at("F1");
    double f1_pred = -cal.sh.lap_omega0 * cal.cst.A * eps * cal.rd.sol.rho;
    b.details["epsilon"] = eps;
    b.details["rho"] = cal.rd.sol.rho;
    b.details["t"] = cal.rd.sol.t;
    b.details["d_eff"] = cal.rd.sol.d_eff;
    b.details["A"] = cal.cst.A;
    b.details["b_tilde"] = cal.cst.b_tilde;
    b.details["denom"] = proj.denom;
    b.details["e_projection"] = proj.e_projection;
    b.details["F1_leading_prediction"] = f1_pred;
    b.summary["denominator_positive"] = proj.denom > 0;
    b.summary["F1_matches_leading_order"] =
        f1_pred != 0 && std::abs(f1 / f1_pred - 1.0) < 0.5;
    if (p.alpha == 0.0) b.summary["F3_negative"] = proj.f_terms.at("F3") < 0;
    finish(rc, b, "reduce");
    return b.all_pass() ? 0 : 3;
}

int cmd_solve(const RunCtx& rc) {
    auto b = new_bundle(rc);
    Calibration cal = calibrate(rc, rc.eps.front());
    std::vector<double> eps = rc.eps;
    if (rc.quick && eps.size() > 2) eps.resize(2);
    pb::solver::NewtonOptions nopt;
    nopt.tol = rc.cfg.run.tol("newton_tol");
    auto tr = pb::solver::continue_in_epsilon(rc.cfg.sys, rc.cfg.V, rc.cfg.W,
                                              cal.rd.sol.d_eff, eps, {}, nopt, true);
    pb::io::CsvWriter csv({"epsilon", "residual", "iters", "peak_radius", "d_eff",
                           "phi_l2", "psi_l2", "psi_h2", "orthogonality_defect"});
    bool all_res = true;
    for (auto& st : tr.steps) {
        csv.row({st.epsilon, st.residual, (double)st.newton_iters, st.peak_radius, st.d_eff,
                 st.phi_l2, st.psi_l2, st.psi_h2, st.orthogonality_defect});
        all_res = all_res && st.residual < nopt.tol;
    }
    emit_csv(rc, b, "solve_trace.csv", csv);
    b.details["d"] = cal.rd.sol.d_eff;
    b.details["remainder_exponent"] = tr.remainder_exponent;
    b.details["remainder_plain_exponent"] = tr.remainder_plain_exponent;
    b.details["log_model_preferred"] = tr.log_model_preferred;
    b.details["cold_start_gap"] = tr.cold_start_gap;
    double peak = tr.steps.back().peak_radius;
    auto bp = cal.rd.problem;
    bp.epsilon = tr.steps.back().epsilon;
    double t_pred = pb::balance::solve_balance(bp).t;
    b.details["final_peak_radius"] = peak;
    b.details["balance_predicted_t"] = t_pred;
    b.summary["residual_below_tol"] = all_res;
    b.summary["peak_near_balance_prediction"] = std::abs(peak / t_pred - 1.0) < 0.25;
    b.summary["solutions_positive"] = true;  // newton_solve throws otherwise
    finish(rc, b, "solve");
    return b.all_pass() ? 0 : 3;
}

int cmd_verify_all(const RunCtx& rc) {
    int worst = 0;
    for (auto [name, fn] : std::initializer_list<std::pair<const char*, int (*)(const RunCtx&)>>{
             {"ground-state", cmd_ground_state},
             {"shadow", cmd_shadow},
             {"interactions", cmd_interactions},
             {"balance", cmd_balance},
             {"corrections", cmd_corrections},
             {"errors", cmd_errors},
             {"reduce", cmd_reduce},
             {"solve", cmd_solve}}) {
        std::cout << "== " << name << "\n";
        worst = std::max(worst, fn(rc));
    }
    std::cout << (worst == 0 ? "verify-all: PASS\n" : "verify-all: FAIL\n");
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-bump construction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir, eps_list;
    bool quick = false;
    int jobs = 1;
    app.add_option("--config", config_path, "config file (INI sections)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--eps", eps_list, "comma-separated epsilon sweep override");
    app.add_flag("--quick", quick, "reduced resolution / shorter sweeps");
    app.add_option("--jobs", jobs, "worker threads for independent sweep points");
    std::map<std::string, int (*)(const RunCtx&)> cmds = {
        {"ground-state", cmd_ground_state}, {"shadow", cmd_shadow},
        {"interactions", cmd_interactions}, {"balance", cmd_balance},
        {"corrections", cmd_corrections},   {"errors", cmd_errors},
        {"reduce", cmd_reduce},             {"solve", cmd_solve},
        {"verify-all", cmd_verify_all}};
    for (auto& [name, fn] : cmds) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunCtx rc;
        if (!config_path.empty()) rc.cfg = pb::params::load_config(config_path);
        auto rep = pb::params::validate(rc.cfg.sys, rc.cfg.V, rc.cfg.W);
        if (!rep.pass) {
            for (auto& f : rep.failures) std::cerr << "config: " << f << "\n";
            return 2;
        }
        rc.out_dir = rc.cfg.run.output_dir;
        if (!out_dir.empty()) rc.out_dir = out_dir;
        if (const char* env = std::getenv("POLYBUMP_OUT"); env && *env) rc.out_dir = env;
        rc.eps = rc.cfg.run.epsilon_sweep;
        if (!eps_list.empty()) {
            rc.eps = pb::params::detail::parse_list(eps_list);
            if (rc.eps.empty()) throw pb::ConfigError("--eps: empty list");
            for (size_t i = 1; i < rc.eps.size(); ++i)
                if (!(rc.eps[i] < rc.eps[i - 1]))
                    throw pb::ConfigError("--eps: must be strictly decreasing");
        }
        rc.quick = quick;
        rc.jobs = std::max(1, jobs);
        std::string sub = app.get_subcommands().front()->get_name();
        return cmds.at(sub)(rc);
    } catch (const pb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pb::HypothesisError& e) {
        std::cerr << "hypothesis violation: " << e.what() << "\n";
        return 4;
    } catch (const pb::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
