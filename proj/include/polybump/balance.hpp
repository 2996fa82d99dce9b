#pragma once
// Balance equation for the peak radius: equate the potential-gradient force
// O(eps*rho) with the exponentially small bump-bump interaction, in the
// variable t = rho/eps and in log form.

#include "common.hpp"

namespace polybump::balance {

enum class BalanceCase { AlphaZero, AlphaNonzero };

struct BalanceProblem {
    BalanceCase kase = BalanceCase::AlphaZero;
    double omega0 = 1;
    int k = 2, m = 1;
    int dim = 2;
    double lhs_const = 1, rhs_const = 1;
    double epsilon = 1e-4;

    double rate() const {
        double sw = std::sqrt(omega0);
        return kase == BalanceCase::AlphaZero ? 2.0 * sw * std::sin(PI / k)
                                              : 4.0 * sw * std::sin(PI / (m * k));
    }
    double poly_power() const {
        if (kase == BalanceCase::AlphaZero) return 0.5 * (dim - 1);
        return dim == 3 ? 2.0 : 0.5;
    }
    bool has_loglog() const { return kase == BalanceCase::AlphaNonzero && dim == 3; }
    double d_limit() const {
        double sw = std::sqrt(omega0);
        return kase == BalanceCase::AlphaZero ? 1.0 / (sw * std::sin(PI / k))
                                              : 1.0 / (2.0 * sw * std::sin(PI / (m * k)));
    }
};

struct BalanceSolution {
    double rho = 0, t = 0, d_eff = 0;
    int iterations = 0;
    double residual = 0;
};

// log-form residual: ln(lhs*eps*rho) - ln(rhs) + rate*t + pow*ln t - [ln ln t]
inline double balance_residual(const BalanceProblem& p, double t) {
    double le = std::log(p.epsilon);
    double f = std::log(p.lhs_const) + 2.0 * le + std::log(t) - std::log(p.rhs_const) +
               p.rate() * t + p.poly_power() * std::log(t);
    if (p.has_loglog()) f -= std::log(std::log(std::max(t, 1.0000001)));
    return f;
}

inline BalanceSolution solve_balance(const BalanceProblem& p, double tol = 1e-12) {
    if (p.lhs_const <= 0 || p.rhs_const <= 0)
        throw ConfigError("solve_balance: prefactors must be positive");
    double alne = std::abs(std::log(p.epsilon));
    if (alne <= 2) throw ConfigError("solve_balance: need |ln eps| > 2");
    double lo = 1.0, hi = 10.0 * alne;
    if (balance_residual(p, lo) * balance_residual(p, hi) > 0)
        throw NumericalError("solve_balance: no root in bracket t in (1, 10|ln eps|); f(1)=" +
                             std::to_string(balance_residual(p, lo)) + " f(hi)=" +
                             std::to_string(balance_residual(p, hi)));
    BalanceSolution s;
    double t = std::min(std::max(2.0 * alne / p.rate(), lo * 1.01), hi * 0.99);
    for (int it = 0; it < 100; ++it) {
        double f = balance_residual(p, t);
        s.iterations = it + 1;
        if (std::abs(f) < tol) break;
        // keep the bracket current
        (f * balance_residual(p, lo) > 0 ? lo : hi) = t;
        double df = p.rate() + (1.0 + p.poly_power()) / t;
        if (p.has_loglog()) df -= 1.0 / (t * std::log(std::max(t, 1.0000001)));
        double tn = t - f / df;
        t = (tn > lo && tn < hi) ? tn : 0.5 * (lo + hi);
    }
    s.t = t;
    s.rho = p.epsilon * t;
    s.d_eff = t / alne;
    s.residual = std::abs(balance_residual(p, t));
    if (!(s.residual < 1e-9))
        throw NumericalError("solve_balance: Newton failed to converge");
    return s;
}

struct SweepResult {
    std::vector<double> epsilons;
    std::vector<BalanceSolution> solutions;
    double fit_c_over_lne = 0;      // model d_eff = d_lim - C/|ln eps|
    double fit_c_loglog = 0;        // model d_eff = d_lim - C ln|ln eps|/|ln eps|
    bool loglog_model_better = false;
};

inline SweepResult sweep_d(BalanceProblem templ, const std::vector<double>& epsilons) {
    for (size_t i = 1; i < epsilons.size(); ++i)
        if (!(epsilons[i] < epsilons[i - 1]))
            throw ConfigError("sweep_d: epsilons must be strictly decreasing");
    SweepResult out;
    out.epsilons = epsilons;
    double dlim = templ.d_limit();
    Eigen::MatrixXd X1(epsilons.size(), 1), X2(epsilons.size(), 1);
    Eigen::VectorXd y(epsilons.size());
    for (size_t i = 0; i < epsilons.size(); ++i) {
        templ.epsilon = epsilons[i];
        out.solutions.push_back(solve_balance(templ));
        double alne = std::abs(std::log(epsilons[i]));
        y(i) = dlim - out.solutions.back().d_eff;
        X1(i, 0) = 1.0 / alne;
        X2(i, 0) = std::log(alne) / alne;
    }
    LinearFit f1 = least_squares(X1, y), f2 = least_squares(X2, y);
    out.fit_c_over_lne = f1.coef(0);
    out.fit_c_loglog = f2.coef(0);
    out.loglog_model_better = f2.rss < f1.rss;
    return out;
}

// Rate ordering sin(pi/k) > 2 sin(pi/(mk)): decides which interaction term
// dominates for m >= 2. Not an identity — it fails for every k at m = 2.
// Not universally true (fails at m=2, k=2); report per configuration.
inline bool rate_ordering_holds(int k, int m) {
    return std::sin(PI / k) > 2.0 * std::sin(PI / (m * k));
}

}  // namespace polybump::balance
