#pragma once
// Shared small utilities: error types, least-squares fits, model comparison.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace polybump {

// Failure classes map onto the CLI exit-code contract:
//   ConfigError -> 2, NumericalError -> 3, HypothesisError -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HypothesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double PI = 3.14159265358979323846;

struct LinearFit {
    Eigen::VectorXd coef;
    double max_abs_resid = 0.0;
    double rss = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares y ~ X*coef via QR.
inline LinearFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    LinearFit f;
    f.coef = X.colPivHouseholderQr().solve(y);
    Eigen::VectorXd r = y - X * f.coef;
    f.max_abs_resid = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    f.rss = r.squaredNorm();
    double tss = (y.array() - y.mean()).square().sum();
    f.r2 = tss > 0 ? 1.0 - f.rss / tss : 1.0;
    return f;
}

// Fit log|v| = c - rate*x + power*log(x).  Columns: [1, -x, log x].
struct ExpPowerFit {
    double log_c = 0, rate = 0, power = 0;
    double max_log_resid = 0, r2 = 0;
};

inline ExpPowerFit fit_exp_power(const std::vector<double>& x, const std::vector<double>& v,
                                 bool free_power = true) {
    const int n = (int)x.size();
    if (n < (free_power ? 3 : 2)) throw NumericalError("fit_exp_power: too few samples");
    Eigen::MatrixXd X(n, free_power ? 3 : 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        if (!(std::abs(v[i]) > 0)) throw NumericalError("fit_exp_power: zero/invalid sample");
        y(i) = std::log(std::abs(v[i]));
        X(i, 0) = 1.0;
        X(i, 1) = -x[i];
        if (free_power) X(i, 2) = std::log(x[i]);
    }
    LinearFit lf = least_squares(X, y);
    ExpPowerFit f;
    f.log_c = lf.coef(0);
    f.rate = lf.coef(1);
    f.power = free_power ? lf.coef(2) : 0.0;
    f.max_log_resid = lf.max_abs_resid;
    f.r2 = lf.r2;
    return f;
}

// Power-law fit log v = c + p*log(eps); optionally with a fixed extra term q*log|ln eps|.
struct RateFit {
    double exponent = 0, log_c = 0, rss = 0, aic = 0;
};

inline double aic_score(double rss, int n, int kparams) {
    return n * std::log(rss / n + 1e-300) + 2.0 * kparams;
}

inline RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& norms,
                        double log_log_weight = 0.0) {
    const int n = (int)eps.size();
    if (n < 2) throw NumericalError("fit_rate: too few samples");
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        double le = std::log(eps[i]);
        y(i) = std::log(norms[i]) - log_log_weight * std::log(std::abs(le));
        X(i, 0) = 1.0;
        X(i, 1) = le;
    }
    LinearFit lf = least_squares(X, y);
    RateFit f;
    f.log_c = lf.coef(0);
    f.exponent = lf.coef(1);
    f.rss = lf.rss;
    f.aic = aic_score(lf.rss, n, 2);
    return f;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace polybump
