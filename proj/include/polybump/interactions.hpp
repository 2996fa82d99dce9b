#pragma once
// Interaction integrals between translated radial profiles and log-linear
// fits of their exponential asymptotics.
//
// Quadrature strategy: N=1 direct Simpson; N=2 tensor Simpson on a box
// symmetric in x1 (so the xi1 -> -xi1 antisymmetry of Theta holds exactly at
// the node level); N=3 reduced to a 2D (axial, radial) integral by exploiting
// rotational symmetry about the offset axis.

#include "common.hpp"
#include "geometry.hpp"
#include "radial.hpp"

#include <functional>

namespace polybump::interactions {

using geometry::Pt;

struct RadialShape {
    std::function<double(double)> f;
    double decay_rate = 1;  // used for box sizing / step selection
};

inline RadialShape shape_of(const radial::RadialProfile& P) {
    return {[&P](double r) { return P.value(r); }, P.rate};
}

// smooth synthetic profile (r^2 + rc^2)^(a/2) e^{-b r}: tail |x|^a e^{-b|x|}
inline RadialShape synthetic(double a, double b, double r_cut = 0.5) {
    return {[a, b, r_cut](double r) {
                return std::pow(r * r + r_cut * r_cut, 0.5 * a) * std::exp(-b * r);
            },
            b};
}

namespace detail {

// Simpson weights on n+1 nodes (n even)
inline double simpson_weight(int i, int n) {
    if (i == 0 || i == n) return 1.0 / 3.0;
    return (i % 2 ? 4.0 : 2.0) / 3.0;
}

// generic 2D tensor Simpson of g(x, y) on [ax,bx]x[ay,by]
template <class G>
double simpson2d(G&& g, double ax, double bx, double ay, double by, double h) {
    int nx = std::max(4, (int)std::ceil((bx - ax) / h));
    nx += nx % 2;
    int ny = std::max(4, (int)std::ceil((by - ay) / h));
    ny += ny % 2;
    double hx = (bx - ax) / nx, hy = (by - ay) / ny, total = 0;
    for (int i = 0; i <= nx; ++i) {
        double x = ax + i * hx, row = 0;
        for (int j = 0; j <= ny; ++j)
            row += simpson_weight(j, ny) * g(x, ay + j * hy);
        total += simpson_weight(i, nx) * row;
    }
    return total * hx * hy;
}

}  // namespace detail

// integral of u(|x + xi|) v(|x|) over R^N
inline double pair_integral(const RadialShape& u, const RadialShape& v, const Pt& xi, int dim,
                            double h_factor = 0.02) {
    double L = std::hypot(xi[0], std::hypot(xi[1], xi[2]));
    double bmin = std::min(u.decay_rate, v.decay_rate);
    double M = 30.0 / bmin;
    double h = h_factor / std::max(u.decay_rate, v.decay_rate);
    if (dim == 1) {
        double a = -std::abs(xi[0]) - M, b = M + std::abs(xi[0]);
        int n = (int)std::ceil((b - a) / h);
        n += n % 2;
        double hh = (b - a) / n, s = 0;
        for (int i = 0; i <= n; ++i) {
            double x = a + i * hh;
            s += detail::simpson_weight(i, n) * u.f(std::abs(x + xi[0])) * v.f(std::abs(x));
        }
        return s * hh;
    }
    if (dim == 2) {
        // box symmetric in x1 and x2, covering both centers 0 and -xi
        double bx = std::abs(xi[0]) + M, by = std::abs(xi[1]) + M;
        return detail::simpson2d(
            [&](double x, double y) {
                return u.f(std::hypot(x + xi[0], y + xi[1])) * v.f(std::hypot(x, y));
            },
            -bx, bx, -by, by, h);
    }
    // dim == 3: rotational symmetry about the xi axis; reduce to (zeta, s)
    double val = detail::simpson2d(
        [&](double z, double s) {
            if (s <= 0) return 0.0;
            return 2.0 * PI * s * u.f(std::hypot(z + L, s)) * v.f(std::hypot(z, s));
        },
        -L - M, M, 0.0, M, h);
    return val;
}

// Theta_{s,t}(xi) = int U^s(x + xi) d/dx1 [U^t](x) dx with U = U_{lambda,mu}
// built from the (1,1) reference profile.
struct ThetaQuery {
    const radial::RadialProfile* Uref = nullptr;  // (omega=1, mu=1) reference
    double s = 1, t = 1, lambda = 1, mu = 1;
    int dim = 2;
    double h_factor = 0.02;  // quadrature step scale
};

// The x1 mesh is symmetric about 0 and accumulation pairs x1 with -x1, so
// Theta(xi with xi1 negated) = -Theta(xi) holds bit-exactly and Theta
// vanishes identically when xi1 = 0.
inline double theta_integral(const ThetaQuery& q, const Pt& xi) {
    const radial::RadialProfile& R = *q.Uref;
    double amp = std::sqrt(q.lambda / q.mu), sl = std::sqrt(q.lambda);
    auto U = [&](double r) { return amp * R.value(sl * r); };
    auto dU = [&](double r) { return amp * sl * R.deriv(sl * r); };
    double L = std::hypot(xi[0], std::hypot(xi[1], xi[2]));
    if (L == 0) return 0.0;
    double rate = sl;
    double M = 28.0 / rate + 5.0;
    double h = q.h_factor / (rate * std::max(1.0, 0.5 * (q.s + q.t)));
    double s_ = q.s, t_ = q.t;

    if (q.dim == 1) {
        double b = std::abs(xi[0]) + M;
        int n = (int)std::ceil(2 * b / h);
        n += n % 2;
        double hh = 2 * b / n, acc = 0;
        auto g = [&](double x) {
            double Ux = U(std::abs(x));
            double dpart = t_ * std::pow(Ux, t_ - 1) * dU(x);  // deriv of U(|x|)^t
            return std::pow(U(std::abs(x + xi[0])), s_) * dpart;
        };
        for (int i = 0; i < n / 2; ++i) {
            double x = -b + i * hh;
            acc += detail::simpson_weight(i, n) * (g(x) + g(-x));
        }
        // center node x=0 contributes an exact zero (dpart odd)
        return acc * hh;
    }
    if (q.dim == 2) {
        double bx = std::abs(xi[0]) + M, by = std::abs(xi[1]) + M;
        int nx = std::max(4, (int)std::ceil(2 * bx / h));
        nx += nx % 2;
        int ny = std::max(4, (int)std::ceil(2 * by / h));
        ny += ny % 2;
        double hx = 2 * bx / nx, hy = 2 * by / ny, total = 0;
        for (int j = 0; j <= ny; ++j) {
            double y = -by + j * hy, row = 0;
            auto g = [&](double x) {
                double r = std::hypot(x, y);
                if (r < 1e-12) return 0.0;
                double Ur = U(r);
                double dpart = t_ * std::pow(Ur, t_ - 1) * dU(r) * (x / r);
                return std::pow(U(std::hypot(x + xi[0], y + xi[1])), s_) * dpart;
            };
            for (int i = 0; i < nx / 2; ++i) {
                double x = -bx + i * hx;
                row += detail::simpson_weight(i, nx) * (g(x) + g(-x));
            }
            total += detail::simpson_weight(j, ny) * row;
        }
        return total * hx * hy;
    }
    // dim == 3: with e = xi/L, the azimuthal average of x1/|x| leaves only the
    // axial component:  Theta = (e . e1) * axisymmetric integral
    double proj = xi[0] / L;
    double val = detail::simpson2d(
        [&](double z, double sC) {
            if (sC <= 0) return 0.0;
            double r = std::hypot(z, sC);
            if (r < 1e-12) return 0.0;
            double Ur = U(r);
            double dpart = t_ * std::pow(Ur, t_ - 1) * dU(r) * (z / r);
            return 2.0 * PI * sC * std::pow(U(std::hypot(z + L, sC)), s_) * dpart;
        },
        -L - M, L + M, 0.0, M, h);
    return proj * val;
}

// ---------------------------------------------------------------------------

struct AsymptoticFit {
    double exp_rate = 0, poly_power = 0, prefactor = 0;
    double xi_lo = 0, xi_hi = 0;
    double r2 = 0;
    bool log_model_preferred = false;  // |xi|^p log|xi| beats plain |xi|^p by AIC
};

// least-squares fit of log|value| = c - rate*|xi| + power*log|xi|, with the
// power additionally extrapolated in 1/|xi| over sliding windows (slowly
// decaying corrections).
inline AsymptoticFit fit_asymptotics(const std::vector<double>& xis,
                                     const std::vector<double>& vals) {
    const int n = (int)xis.size();
    if (n < 6) throw NumericalError("fit_asymptotics: need >= 6 samples");
    for (int i = 1; i < n; ++i)
        if (std::abs(vals[i]) >= std::abs(vals[i - 1]))
            throw NumericalError("fit_asymptotics: non-monotone samples (quadrature noise?)");
    ExpPowerFit full = fit_exp_power(xis, vals, true);
    AsymptoticFit out;
    out.exp_rate = full.rate;
    out.poly_power = full.power;
    out.prefactor = std::exp(full.log_c);
    out.xi_lo = xis.front();
    out.xi_hi = xis.back();
    out.r2 = full.r2;
    // windowed power estimates, extrapolated to 1/|xi| -> 0
    const int ws = 6;
    if (n >= ws + 2) {
        std::vector<double> inv_mid, powers;
        for (int s = 0; s + ws <= n; ++s) {
            std::vector<double> x(xis.begin() + s, xis.begin() + s + ws);
            std::vector<double> v(vals.begin() + s, vals.begin() + s + ws);
            ExpPowerFit w = fit_exp_power(x, v, true);
            double mid = 0.5 * (x.front() + x.back());
            inv_mid.push_back(1.0 / mid);
            powers.push_back(w.power);
        }
        Eigen::MatrixXd X(inv_mid.size(), 2);
        Eigen::VectorXd y(inv_mid.size());
        for (size_t i = 0; i < inv_mid.size(); ++i) {
            X(i, 0) = 1;
            X(i, 1) = inv_mid[i];
            y(i) = powers[i];
        }
        out.poly_power = least_squares(X, y).coef(0);
    }
    // model comparison: does an extra log(log|xi|) column improve the fit?
    {
        Eigen::MatrixXd Xa(n, 3), Xb(n, 4);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            y(i) = std::log(std::abs(vals[i]));
            Xa(i, 0) = Xb(i, 0) = 1;
            Xa(i, 1) = Xb(i, 1) = -xis[i];
            Xa(i, 2) = Xb(i, 2) = std::log(xis[i]);
            Xb(i, 3) = std::log(std::log(xis[i]));
        }
        double rss_a = least_squares(Xa, y).rss;
        double rss_b = least_squares(Xb, y).rss;
        out.log_model_preferred = aic_score(rss_b, n, 4) < aic_score(rss_a, n, 3);
    }
    return out;
}

// Predicted (rate, power) asymptotics for the pair integral, b <= b'.
// a, a': polynomial powers of the two tails; b, b': exponential rates.
struct PairPrediction {
    double rate = 0, power = 0;
    bool log_factor = false;
};

inline PairPrediction predict_pair(double a, double b, double ap, double bp, int dim) {
    if (b < bp) return {b, a, false};
    if (bp < b) return {bp, ap, false};
    // b = b': sub-cases by a' (the smaller power... convention: a >= a')
    if (ap < a) std::swap(a, ap);  // now a <= ap: "a" carries the larger power
    double lo = a, hi = ap;        // hi = max power (a), lo = min (a')
    double crit = -(dim + 1) / 2.0;
    if (lo > crit) return {b, hi + lo + (dim + 1) / 2.0, false};
    if (lo == crit) return {b, hi, true};
    return {b, hi, false};
}

}  // namespace polybump::interactions
