// Acceptance suite: one pass/fail line per criterion.
//
// Each criterion is evaluated independently; a thrown exception fails the
// criterion but not the process. The exit code is the number of failed
// criteria, so the suite integrates with ctest while still printing the full
// scoreboard on every run.

#include "polybump/interactions.hpp"
#include "polybump/io.hpp"
#include "polybump/solver.hpp"

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

using namespace polybump;

namespace {

int g_failures = 0;

void report(int num, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", num, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void criterion(int num, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [pass, detail] = body();
        report(num, name, pass, detail);
    } catch (const std::exception& e) {
        report(num, name, false, std::string("exception: ") + e.what());
    }
}

params::PotentialSpec const_pot(double v) {
    params::PotentialSpec P;
    P.kind = params::PotentialKind::Constant;
    P.parameters = {v};
    P.floor = v;
    return P;
}

// standard scenario: V = W = 1, beta = -1, two opposite peaks
params::SystemParams scenario(int k = 2, int m = 1, double alpha = 0.0) {
    params::SystemParams p;
    p.mu1 = p.mu2 = 1.0;
    p.beta = -1.0;
    p.alpha = alpha;
    p.k = k;
    p.m = m;
    p.dim = 2;
    return p;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// calibrated ring radius: fit the ring-interaction prefactor on t-samples and
// solve the reduced balance equation for d at the given epsilon
reduction::ReducedSolution calibrate_d(const params::SystemParams& p,
                                       const shadow::ShadowPotential& sh,
                                       const radial::RadialProfile& U) {
    auto cst = reduction::eval_constants(U, p.k, p.dim);
    std::vector<double> ts, vals;
    for (double t = 6.0; t <= 12.01; t += 0.75) {
        ts.push_back(t);
        vals.push_back(p.alpha == 0.0 ? reduction::f3_sample(U, p.k, p.m, t, p.mu2)
                                      : reduction::f9_sample(U, p.k, p.m, t, p.alpha));
    }
    balance::BalanceProblem bp;
    bp.kase = p.alpha == 0.0 ? balance::BalanceCase::AlphaZero : balance::BalanceCase::AlphaNonzero;
    bp.omega0 = sh.omega0;
    bp.k = p.k;
    bp.m = p.m;
    bp.dim = p.dim;
    bp.epsilon = p.epsilon;
    auto pf = reduction::fit_prefactor(ts, vals, bp.rate(), bp.poly_power());
    return reduction::solve_reduced_d(p, sh, cst, pf.prefactor);
}

// ---------------------------------------------------------------------------

void criterion_1() {
    criterion(1, "ground-state analytic oracle and rescaling law", [] {
        auto P = radial::solve_ground_state(1.0, 1.0, 1);
        double worst = 0;
        for (size_t i = 0; i < P.r.size(); ++i)
            worst = std::max(worst, std::abs(P.u[i] - std::sqrt(2.0) / std::cosh(P.r[i])));

        // (lambda, mu) = (4, 1): closed form 2 sqrt(2) sech(2r) in 1D
        auto R41 = radial::rescale(P, 4.0, 1.0);
        double w41 = 0;
        for (double r = 0; r < 8.0; r += 0.011)
            w41 = std::max(w41, std::abs(R41.value(r) - 2.0 * std::sqrt(2.0) / std::cosh(2.0 * r)));

        // (lambda, mu) = (2, 3): rescaled 2D profile against a fresh shoot
        auto ref2 = radial::solve_ground_state(1.0, 1.0, 2);
        auto R23 = radial::rescale(ref2, 2.0, 3.0);
        auto Q23 = radial::solve_ground_state(2.0, 3.0, 2);
        double w23 = 0;
        for (double r = 0; r < 10.0; r += 0.013)
            w23 = std::max(w23, std::abs(R23.value(r) - Q23.value(r)));

        bool pass = worst < 1e-8 && w41 < 1e-8 && w23 < 1e-8;
        return std::make_pair(pass, fmt("sech sup err %.2e, rescale (4,1) %.2e, (2,3) %.2e",
                                        worst, w41, w23));
    });
}

void criterion_2() {
    criterion(2, "ground-state tail decay law across (N, omega0)", [] {
        double worst_rate = 0, worst_power = 0;
        for (int dim : {1, 2, 3})
            for (double om : {1.0, 2.0, 4.0}) {
                auto P = radial::solve_ground_state(om, 1.0, dim);
                double s = std::sqrt(om);
                auto f = radial::fit_decay(P, 8.0 / s, 16.0 / s);
                worst_rate = std::max(worst_rate, rel_err(f.rate, s));
                worst_power = std::max(worst_power, std::abs(f.power - 0.5 * (dim - 1)));
            }
        bool pass = worst_rate < 0.02 && worst_power < 0.05;
        return std::make_pair(pass, fmt("worst rate err %.3f%% (tol 2%%), worst power err %.3f (tol 0.05)",
                                        100 * worst_rate, worst_power));
    });
}

void criterion_3() {
    criterion(3, "pair-interaction asymptotics (equal-rate sub-cases)", [] {
        auto U = radial::solve_ground_state(1.0, 1.0, 2);
        auto u = interactions::shape_of(U);
        std::ostringstream det;
        bool pass = true;

        // ground-state pair: a = a' = -1/2, b = b' = 1 -> power a+a'+(N+1)/2
        std::vector<double> xis, vals;
        for (double R = 10.0; R <= 24.0; R += 1.0) {
            xis.push_back(R);
            vals.push_back(interactions::pair_integral(u, u, {R, 0, 0}, 2, 0.05));
        }
        auto f = interactions::fit_asymptotics(xis, vals);
        auto pr = interactions::predict_pair(-0.5, 1.0, -0.5, 1.0, 2);
        pass = pass && rel_err(f.exp_rate, 1.0) < 0.02 && std::abs(f.poly_power - pr.power) < 0.15;
        det << fmt("U*U rate %.4f power %.3f (pred %.2f)", f.exp_rate, f.poly_power, pr.power);

        // synthetic equal-rate profiles: a = 0 against a' in {0, -(N+1)/2, -(N+2)}
        for (double ap : {0.0, -1.5, -4.0}) {
            auto a = interactions::synthetic(0.0, 1.0);
            auto b = interactions::synthetic(ap, 1.0);
            std::vector<double> x2, v2;
            for (double R = 10.0; R <= 24.0; R += 1.0) {
                x2.push_back(R);
                v2.push_back(interactions::pair_integral(a, b, {R, 0, 0}, 2, 0.05));
            }
            auto g = interactions::fit_asymptotics(x2, v2);
            auto q = interactions::predict_pair(0.0, 1.0, ap, 1.0, 2);
            bool ok = rel_err(g.exp_rate, q.rate) < 0.02;
            if (q.log_factor)
                ok = ok && g.log_model_preferred;
            else
                ok = ok && std::abs(g.poly_power - q.power) < 0.15;
            pass = pass && ok;
            det << fmt("; a'=%.1f rate %.4f %s", ap, g.exp_rate,
                       q.log_factor ? (g.log_model_preferred ? "log pref" : "log NOT pref")
                                    : fmt("power %.3f (pred %.2f)", g.poly_power, q.power).c_str());
        }
        return std::make_pair(pass, det.str());
    });
}

void criterion_4() {
    criterion(4, "directional tail integral: node, sign, rate, and power", [] {
        auto U1 = radial::solve_ground_state(1.0, 1.0, 1);
        auto U2 = radial::solve_ground_state(1.0, 1.0, 2);

        interactions::ThetaQuery q;
        q.Uref = &U2;
        q.s = 1;
        q.t = 3;
        q.dim = 2;
        q.h_factor = 0.05;
        bool zero_ok = interactions::theta_integral(q, {0, 0, 0}) == 0.0;
        bool sign_ok = interactions::theta_integral(q, {12.0, 0, 0}) *
                           interactions::theta_integral(q, {-12.0, 0, 0}) <
                       0;

        std::vector<double> xis, vals;
        for (double R = 10.0; R <= 24.0; R += 1.0) {
            xis.push_back(R);
            vals.push_back(interactions::theta_integral(q, {R, 0, 0}));
        }
        auto f = interactions::fit_asymptotics(xis, vals);
        bool rate_ok = rel_err(f.exp_rate, q.s * 1.0) < 0.02;  // s sqrt(lambda) = 1

        interactions::ThetaQuery qe;  // s = t in 1D: extra |xi| factor, power +1
        qe.Uref = &U1;
        qe.s = qe.t = 1;
        qe.dim = 1;
        qe.h_factor = 0.04;
        std::vector<double> xe, ve;
        for (double R = 10.0; R <= 24.0; R += 1.0) {
            xe.push_back(R);
            ve.push_back(interactions::theta_integral(qe, {R, 0, 0}));
        }
        auto fe = interactions::fit_asymptotics(xe, ve);
        bool power_ok = std::abs(fe.poly_power - 1.0) < 0.15;

        bool pass = zero_ok && sign_ok && rate_ok && power_ok;
        return std::make_pair(pass, fmt("origin node %s, sign flip %s, s<t rate %.4f, s=t power %.3f",
                                        zero_ok ? "exact" : "BROKEN", sign_ok ? "ok" : "BROKEN",
                                        f.exp_rate, fe.poly_power));
    });
}

void criterion_5() {
    criterion(5, "reduced-balance limits and prefactor invariance", [] {
        auto p = scenario();
        auto V = const_pot(1.0), W = const_pot(1.0);
        auto sh = shadow::compute_shadow(p, V, W);
        auto U = radial::solve_ground_state(sh.omega0, p.mu2, p.dim);
        auto cst = reduction::eval_constants(U, p.k, p.dim);
        std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
        std::ostringstream det;
        bool pass = true;
        for (int kase = 0; kase < 2; ++kase) {
            int m = kase == 0 ? 1 : 2;
            double alpha = kase == 0 ? 0.0 : 0.5;
            // reduced equation with the scenario's own calibrated constants
            std::vector<double> ts, vals;
            for (double t = 6.0; t <= 12.01; t += 0.75) {
                ts.push_back(t);
                vals.push_back(kase == 0 ? reduction::f3_sample(U, 2, m, t, p.mu2)
                                         : reduction::f9_sample(U, 2, m, t, alpha));
            }
            balance::BalanceProblem bp;
            bp.kase =
                kase == 0 ? balance::BalanceCase::AlphaZero : balance::BalanceCase::AlphaNonzero;
            bp.omega0 = sh.omega0;
            bp.k = 2;
            bp.m = m;
            bp.dim = 2;
            auto pf = reduction::fit_prefactor(ts, vals, bp.rate(), bp.poly_power());
            bp.lhs_const = cst.A * std::abs(sh.lap_omega0);
            bp.rhs_const = (kase == 0 ? 1.0 : alpha) * pf.prefactor;
            double lim = bp.d_limit();
            auto sw = balance::sweep_d(bp, eps);
            // monotone approach: the d_eff sequence itself is monotone along
            // the sweep (the signed error crosses zero once on its way in, so
            // |d_eff - limit| is not the right monotonicity measure)
            bool mono = true;
            for (size_t i = 1; i < sw.solutions.size(); ++i)
                mono = mono && sw.solutions[i].d_eff < sw.solutions[i - 1].d_eff;
            double dl = sw.solutions.back().d_eff;
            bool close = rel_err(dl, lim) < 0.10;

            // rescaling the interaction prefactor by 100 shifts d by O(1/|ln eps|)
            balance::BalanceProblem bq = bp;
            bq.epsilon = 1e-6;
            bp.epsilon = 1e-6;
            bq.rhs_const = bp.rhs_const * 100.0;
            double shift = std::abs(balance::solve_balance(bq).d_eff -
                                    balance::solve_balance(bp).d_eff);
            double budget = 1.5 * std::log(100.0) / (bp.rate() * std::abs(std::log(1e-6)));
            bool inv = shift <= budget;
            pass = pass && mono && close && inv;
            det << fmt("%s d_eff(1e-6) %.4f vs limit %.4f%s, monotone %s, prefactor shift %.4f <= %.4f%s",
                       kase == 0 ? "alpha=0:" : "; alpha!=0:", dl, lim, close ? "" : " (OFF)",
                       mono ? "yes" : "NO", shift, budget, inv ? "" : " (OFF)");
        }
        return std::make_pair(pass, det.str());
    });
}

// shared sweep for criteria 6 and 7: corrections and error norms at d = 0.5
struct CorrectionSweep {
    std::vector<double> eps, phi_sup, psi_sup, gamma, e1;
    double omega0 = 0;
};

CorrectionSweep run_correction_sweep() {
    CorrectionSweep s;
    s.eps = {0.1, 0.0562, 0.0316, 0.0178, 0.01};
    auto V = const_pot(1.0), W = const_pot(1.0);
    for (double e : s.eps) {
        auto p = scenario();
        p.epsilon = e;
        auto c = reduction::build_context(p, V, W, 0.5);
        s.omega0 = c.sh.omega0;
        s.phi_sup.push_back(c.phi.sup_norm());
        s.psi_sup.push_back(c.psi.psi.sup_norm());
        s.gamma.push_back(c.psi.gamma);
        s.e1.push_back(reduction::eval_error_terms(c).e1_l2);
    }
    return s;
}

void criterion_6(const CorrectionSweep& s) {
    criterion(6, "correction sup-norm scaling and tail rate", [&] {
        RateFit fp = fit_rate(s.eps, s.phi_sup);
        RateFit fq = fit_rate(s.eps, s.psi_sup);
        RateFit fpl = fit_rate(s.eps, s.phi_sup, 1.0);
        RateFit fql = fit_rate(s.eps, s.psi_sup, 1.0);
        double sqw = std::sqrt(s.omega0);
        bool gamma_ok = true;
        for (double g : s.gamma) gamma_ok = gamma_ok && g > 0.0 && g < sqw;
        bool exp_ok = rel_err(fp.exponent, 1.0) < 0.10 && rel_err(fq.exponent, 1.0) < 0.10;
        bool pass = exp_ok && gamma_ok;
        return std::make_pair(
            pass, fmt("phi exp %.3f, psi exp %.3f (target 1 +/- 10%%; log-corrected fits %.3f/%.3f "
                      "support eps^2|ln eps| instead), gamma %.3f in (0, %.3f) %s",
                      fp.exponent, fq.exponent, fpl.exponent, fql.exponent, s.gamma.back(), sqw,
                      gamma_ok ? "ok" : "BROKEN"));
    });
}

void criterion_7(const CorrectionSweep& s) {
    criterion(7, "ansatz error norms: first-component rate, second-component log law", [&] {
        RateFit f1 = fit_rate(s.eps, s.e1);
        bool e1_ok = rel_err(f1.exponent, 2.0) < 0.10;

        // the |ln eps|^2 factor separates from a pure power only once |ln eps|
        // is large; measure the second component over the deeper decade
        std::vector<double> de{0.01, 0.0056, 0.0032, 0.0018, 0.001};
        std::vector<double> e2;
        auto V = const_pot(1.0), W = const_pot(1.0);
        for (double e : de) {
            auto p = scenario();
            p.epsilon = e;
            auto c = reduction::build_context(p, V, W, 0.5);
            e2.push_back(reduction::eval_error_terms(c).e2_l2);
        }
        RateFit plain = fit_rate(de, e2);
        RateFit logc = fit_rate(de, e2, 2.0);
        double aplain = aic_score(plain.rss, (int)de.size(), 2);
        double alog = aic_score(logc.rss, (int)de.size(), 2);
        bool e2_ok = alog < aplain;
        bool pass = e1_ok && e2_ok;
        return std::make_pair(
            pass, fmt("e1 exp %.3f (target 2 +/- 10%%), e2 log-corrected exp %.3f AIC %.2f vs plain "
                      "exp %.3f AIC %.2f -> %s preferred",
                      f1.exponent, logc.exponent, alog, plain.exponent, aplain,
                      e2_ok ? "log" : "plain"));
    });
}

void criterion_8() {
    criterion(8, "projection leading terms: curvature term, ring rate, term ordering", [] {
        auto V = const_pot(1.0), W = const_pot(1.0);
        std::ostringstream det;

        // F1 / (eps rho) -> -Lap omega(0) * A
        double worst = 0;
        for (double e : {0.02, 0.01, 0.005}) {
            auto p = scenario();
            p.epsilon = e;
            reduction::GridOptions opt;
            opt.with_corrections = false;  // the curvature term needs only the ring
            auto c = reduction::build_context(p, V, W, 0.5, opt);
            auto cst = reduction::eval_constants(c.U, p.k, p.dim);
            auto rep = reduction::eval_projection(c);
            double pred = -c.sh.lap_omega0 * cst.A * e * c.cfg.rho;
            worst = std::max(worst, rel_err(rep.f_terms.at("F1"), pred));
        }
        bool f1_ok = worst < 0.10;
        det << fmt("F1/pred worst err %.2f%%", 100 * worst);

        // ring-interaction rate and sign
        auto p = scenario();
        auto sh = shadow::compute_shadow(p, V, W);
        auto U = radial::solve_ground_state(sh.omega0, p.mu2, p.dim);
        std::vector<double> ts, f3;
        bool neg = true;
        for (double t = 6.0; t <= 12.01; t += 0.75) {
            double v = reduction::f3_sample(U, p.k, p.m, t, p.mu2);
            neg = neg && v < 0;
            ts.push_back(t);
            f3.push_back(std::abs(v));
        }
        auto fit = fit_exp_power(ts, f3, true);
        double target = 2.0 * std::sqrt(sh.omega0) * std::sin(PI / p.k);
        bool rate_ok = neg && rel_err(fit.rate, target) < 0.03;
        det << fmt("; F3 rate %.4f vs %.4f, sign %s", fit.rate, target, neg ? "neg" : "NOT neg");

        // alpha != 0 on a configuration where the ring term decays faster than
        // the in-cluster term: |F3|/|F9| falls along the sweep
        int k = 2, m = 4;
        bool ordering = balance::rate_ordering_holds(k, m);
        bool mono = true;
        double prev = 0;
        for (double t = 6.0; t <= 12.01; t += 0.75) {
            double r3 = std::abs(reduction::f3_sample(U, k, m, t, p.mu2));
            double r9 = std::abs(reduction::f9_sample(U, k, m, t, 0.5));
            double ratio = r3 / r9;
            if (prev > 0) mono = mono && ratio < prev;
            prev = ratio;
        }
        det << fmt("; ordering holds (k=2,m=4) %s, |F3|/|F9| monotone %s", ordering ? "yes" : "no",
                   mono ? "yes" : "NO");
        bool pass = f1_ok && rate_ok && ordering && mono;
        return std::make_pair(pass, det.str());
    });
}

// criterion 9 state shared with the structural suite
struct SolveSweep {
    std::vector<double> eps;
    std::vector<solver::SolveResult> sols;
    double peak_ratio_last = 0;
    double rem_exp_log = 0;
    bool residual_ok = true;
};

SolveSweep run_solve_sweep() {
    SolveSweep out;
    out.eps = {0.1, 0.08, 0.06, 0.04, 0.02};
    auto V = const_pot(1.0), W = const_pot(1.0);
    std::vector<double> rem;
    for (double e : out.eps) {
        auto p = scenario();
        p.epsilon = e;
        auto sh = shadow::compute_shadow(p, V, W);
        auto U = radial::solve_ground_state(sh.omega0, p.mu2, p.dim);
        auto rd = calibrate_d(p, sh, U);
        // the remainder scaling is only visible once the angular error at the
        // ring sits below it; 64 cells per sector suffice down to eps = 0.02
        reduction::GridOptions gopt;
        gopt.n_theta_v = 64;
        auto c = reduction::build_context(p, V, W, rd.sol.d_eff, gopt);
        auto [u0, v0] = solver::ansatz_pair(c);
        auto sol = solver::newton_solve(p, V, W, u0, v0, e, {});
        out.residual_ok = out.residual_ok && sol.residual < 1e-10;
        out.peak_ratio_last = sol.peak_radius / rd.sol.t;

        // remainder against the corrected ansatz recentred on the solved ring:
        // the reduced equation fixes the ring radius first, so the remainder is
        // measured orthogonally to the ring-translation direction
        double d_meas = sol.peak_radius / std::abs(std::log(e));
        auto c2 = reduction::build_context(p, V, W, d_meas, gopt);
        solver::SolveResult s2 = sol;
        s2.u = geometry::nodal_field(c2.ugrid, [&](double x, double y) { return sol.u.eval(x, y); });
        s2.v = geometry::nodal_field(c2.vgrid, [&](double x, double y) { return sol.v.eval(x, y); });
        rem.push_back(solver::extract_remainder(c2, s2).psi_l2);
        out.sols.push_back(std::move(sol));
    }
    out.rem_exp_log = fit_rate(out.eps, rem, 2.0).exponent;
    return out;
}

void criterion_9(const SolveSweep& s) {
    criterion(9, "full two-peak construction by Newton continuation", [&] {
        bool peak_ok = std::abs(s.peak_ratio_last - 1.0) < 0.15;
        bool rem_ok = rel_err(s.rem_exp_log, 2.0) < 0.15;
        bool pass = s.residual_ok && peak_ok && rem_ok;
        return std::make_pair(
            pass, fmt("residual < 1e-10 %s, peak/balance at eps=0.02 %.4f (tol 15%%), remainder "
                      "log-corrected exp %.3f (target 2 +/- 15%%)",
                      s.residual_ok ? "all" : "VIOLATED", s.peak_ratio_last, s.rem_exp_log));
    });
}

void criterion_10(const SolveSweep& s) {
    criterion(10, "structural invariants and CLI determinism", [&] {
        std::ostringstream det;
        auto U = radial::solve_ground_state(1.0, 1.0, 2);

        // symmetry preservation of the solved field (reflection + k-fold rotation)
        const solver::SolveResult& sol = s.sols.front();
        double sym = 0;
        for (double r : {0.5, 1.0, 1.4, 2.0})
            for (double a : {0.3, 0.9, 1.4}) {
                double x = r * std::cos(a), y = r * std::sin(a);
                double v = sol.v.eval(x, y);
                sym = std::max(sym, std::abs(sol.v.eval(x, -y) - v));
                sym = std::max(sym, std::abs(sol.v.eval(-x, -y) - v));
            }
        bool sym_ok = sym < 1e-9;
        det << fmt("symmetry defect %.1e", sym);

        // rotation group closure: generator applied m*k times is the identity
        geometry::Rotation g = geometry::rhat(2, 2, 2);
        geometry::Pt q{1.3, 0.4, 0.0};
        geometry::Pt qq = q;
        for (int i = 0; i < 4; ++i) qq = g.apply(qq);
        bool rot_ok = std::hypot(qq[0] - q[0], qq[1] - q[1]) < 1e-13;
        geometry::Pt c1 = g.compose(g).apply(q), c2 = g.apply(g.apply(q));
        rot_ok = rot_ok && std::hypot(c1[0] - c2[0], c1[1] - c2[1]) < 1e-13;
        det << fmt(", rotation closure %s", rot_ok ? "ok" : "BROKEN");

        // kernel field agrees with the centred difference of the ring at O(h^2)
        double rho = 1.0, epsk = 0.2, t = rho / epsk;
        auto cfg = geometry::build_peaks(rho, epsk, 2, 1);
        auto vg = geometry::make_sector_grid(2, 1, t + 12.0, 0.05, 0.0, t + 6.0, 32, 1.0);
        auto kb = elliptic::build_kernel(U, cfg, vg);
        auto fd_err = [&](double h) {
            auto cp = geometry::build_peaks(rho + h, epsk, 2, 1);
            auto cm = geometry::build_peaks(rho - h, epsk, 2, 1);
            Eigen::VectorXd fd = (geometry::assemble_sum_of_bumps(U, cp, vg).v -
                                  geometry::assemble_sum_of_bumps(U, cm, vg).v) *
                                 (epsk / (2.0 * h));
            return (fd - kb.z.v).cwiseAbs().maxCoeff();
        };
        double e1 = fd_err(1e-3), e2 = fd_err(2e-3);
        bool fd_ok = e1 < 5e-5 && std::abs(e2 / e1 - 4.0) < 0.5;
        det << fmt(", ring-derivative FD ratio %.2f (O(h^2))", e2 / e1);

        // deflation defect and coercivity stability across the sweep
        auto V = const_pot(1.0), W = const_pot(1.0);
        bool defl_ok = true;
        double cmin = 1e300, cmax = 0;
        for (double e : {0.2, 0.15, 0.1}) {
            auto p = scenario();
            p.epsilon = e;
            reduction::GridOptions opt;
            opt.h_fine_v = 0.08;
            auto c = reduction::build_context(p, V, W, 0.5, opt);
            defl_ok = defl_ok && c.psi.deflation_defect < 1e-8;
            auto uf = geometry::nodal_field(c.ugrid, [&](double x, double y) {
                return c.sh.Y.value(std::hypot(x, y));
            });
            auto L = elliptic::assemble_coupled(p, V, W, uf, c.bumps, e);
            double c0 = elliptic::estimate_coercivity(L, c.kb);
            cmin = std::min(cmin, c0);
            cmax = std::max(cmax, c0);
        }
        bool coer_ok = cmin > 0 && (cmax - cmin) / cmax < 0.5;
        det << fmt(", deflation defect %s, coercivity span %.1f%%", defl_ok ? "<1e-8" : "BROKEN",
                   100 * (cmax - cmin) / cmax);

        // CLI determinism: identical CSV bodies across two runs
        namespace fs = std::filesystem;
        fs::path dir = fs::temp_directory_path() / "polybump_acceptance";
        fs::remove_all(dir);
        fs::create_directories(dir);
        {
            std::ofstream ini(dir / "det.ini");
            ini << "[system]\nbeta = -1\ndim = 2\nk = 2\nm = 1\nepsilon = 0.1\n\n"
                << "[run]\nepsilon_sweep = 0.1,0.08\n";
        }
        auto run_cli = [&](const std::string& out) {
            std::string cmd = std::string(POLYBUMP_CLI_PATH) + " balance --config " +
                              (dir / "det.ini").string() + " --out " + (dir / out).string() +
                              " > /dev/null 2>&1";
            return WEXITSTATUS(std::system(cmd.c_str())) == 0;
        };
        bool cli_ok = run_cli("a") && run_cli("b");
        if (cli_ok) {
            auto slurp = [](const fs::path& p) {
                std::ifstream in(p, std::ios::binary);
                std::stringstream ss;
                ss << in.rdbuf();
                return ss.str();
            };
            std::string a = slurp(dir / "a" / "balance_sweep.csv");
            cli_ok = !a.empty() && a == slurp(dir / "b" / "balance_sweep.csv");
        }
        det << fmt(", CLI determinism %s", cli_ok ? "ok" : "BROKEN");

        bool pass = sym_ok && rot_ok && fd_ok && defl_ok && coer_ok && cli_ok;
        return std::make_pair(pass, det.str());
    });
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    CorrectionSweep cs = run_correction_sweep();
    criterion_6(cs);
    criterion_7(cs);
    criterion_8();
    SolveSweep ss = run_solve_sweep();
    criterion_9(ss);
    criterion_10(ss);
    std::printf("%d/10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
