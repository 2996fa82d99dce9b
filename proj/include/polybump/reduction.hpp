#pragma once
// Finite-dimensional reduction bookkeeping: the assembled ansatz with its two
// correction fields, the residual (error-term) ledger of both components, the
// projection of the second-component residual onto the translation kernel,
// the geometric constants of the leading balance, and the calibrated peak
// radius equation.
//
// Sign conventions.  With u = Upsilon + phi, v = Theta + psi the second
// component reads L2(phi,psi) = E2 + N2, so the kernel multiplier is
// c_eps = int (L2 - E2 - N2) Z / int Z^2.  E2 is assembled term by term; the
// two near-cancelling bump differences (sum U)^3 - sum U^3 and
// (sum U)^2 - sum U^2 are expanded into sums of positive products so the
// quadrature keeps full relative accuracy at large peak separation.

#include "balance.hpp"
#include "common.hpp"
#include "elliptic.hpp"
#include "geometry.hpp"
#include "params.hpp"
#include "radial.hpp"
#include "shadow.hpp"

#include <map>

namespace polybump::reduction {

using geometry::PeakConfiguration;
using geometry::SectorField;
using geometry::SectorGrid;

// ---------------------------------------------------------------------------
// geometric constants of the potential-gradient force

struct Constants {
    double b_tilde = 0;  // k * (-int x1^2/|x| U U' dx) > 0
    double c_n = 0;      // Hessian isotropy factor 1/N
    double A = 0;        // c_n * b_tilde
};

// radial reduction: int x1^2/|x| f(|x|) dx = (S_{N-1}/N) int r^N f(r) dr
inline Constants eval_constants(const radial::RadialProfile& U, int k, int dim) {
    double surf = dim == 1 ? 2.0 : (dim == 2 ? 2.0 * PI : 4.0 * PI);
    double r_hi = 30.0 / U.rate;
    double mom = radial::integrate_radial(
        [&](double r) { return std::pow(r, dim) * U.value(r) * U.deriv(r); }, r_hi,
        2e-3 / U.rate);
    Constants c;
    c.b_tilde = -k * (surf / dim) * mom;
    c.c_n = shadow::c_n(dim);
    c.A = c.c_n * c.b_tilde;
    return c;
}

// ---------------------------------------------------------------------------
// assembled ansatz

struct GridOptions {
    double h_fine_u = 0;     // 0 = auto
    double h_fine_v = 0;     // 0 = auto
    int n_theta_u = 16;
    int n_theta_v = 32;
    double margin_v = 12.0;  // v-grid extent beyond the peak ring, in 1/sqrt(omega0)
    bool with_corrections = true;
};

struct AnsatzContext {
    params::SystemParams p;
    params::PotentialSpec V, W;
    shadow::ShadowPotential sh;
    radial::RadialProfile U;  // single bump at (omega0, mu2)
    PeakConfiguration cfg;
    std::shared_ptr<const SectorGrid> ugrid, vgrid;
    elliptic::Operator op_u;  // -Lap + V - 3 mu1 Y^2
    elliptic::Operator op_v;  // -Lap + omega0 - 3 mu2 sum U_j^2
    elliptic::KernelBasis kb;
    SectorField phi;          // first correction, on ugrid
    double phi0 = 0;
    elliptic::PsiResult psi;  // second correction, on vgrid
    SectorField bumps;        // sum_j U_j on vgrid
    SectorField theta;        // bumps + beta * psi

    double t() const { return cfg.rho / cfg.epsilon; }
};

namespace detail {

inline int round_n_theta(int nt, int m) {
    while ((2 * nt) % m) ++nt;
    return nt;
}

// per-center nodal bump values U(|y - c_j|) on the grid
inline std::vector<Eigen::VectorXd> bump_values(const SectorGrid& g,
                                                const radial::RadialProfile& U,
                                                const std::vector<geometry::Pt>& centers) {
    std::vector<Eigen::VectorXd> out(centers.size(), Eigen::VectorXd(g.size()));
    for (int i = 0; i < g.nr(); ++i)
        for (int j = 0; j < g.nt(); ++j) {
            double x, y;
            geometry::node_xy(g, i, j, x, y);
            for (size_t c = 0; c < centers.size(); ++c)
                out[c](g.idx(i, j)) = U.value(std::hypot(x - centers[c][0], y - centers[c][1]));
        }
    return out;
}

// cancellation-free (sum U)^3 - sum U^3: every summand is a positive product
inline double cubic_cross(const std::vector<Eigen::VectorXd>& Ui, int n) {
    const int kk = (int)Ui.size();
    double s = 0;
    for (int a = 0; a < kk; ++a)
        for (int b = 0; b < kk; ++b)
            if (a != b) s += 3.0 * Ui[a](n) * Ui[a](n) * Ui[b](n);
    for (int a = 0; a < kk; ++a)
        for (int b = a + 1; b < kk; ++b)
            for (int c = b + 1; c < kk; ++c) s += 6.0 * Ui[a](n) * Ui[b](n) * Ui[c](n);
    return s;
}

// cancellation-free (sum U)^2 - sum U^2
inline double quad_cross(const std::vector<Eigen::VectorXd>& Ui, int n) {
    const int kk = (int)Ui.size();
    double s = 0;
    for (int a = 0; a < kk; ++a)
        for (int b = a + 1; b < kk; ++b) s += 2.0 * Ui[a](n) * Ui[b](n);
    return s;
}

}  // namespace detail

inline AnsatzContext build_context(const params::SystemParams& p, const params::PotentialSpec& V,
                                   const params::PotentialSpec& W, double d,
                                   const GridOptions& opt = {}) {
    if (p.dim != 2)
        throw ConfigError("build_context: the sector pipeline is two-dimensional (dim=2)");
    if (d <= 0) throw ConfigError("build_context: d must be positive");
    AnsatzContext c;
    c.p = p;
    c.V = V;
    c.W = W;
    c.sh = shadow::compute_shadow(p, V, W);
    if (c.sh.omega0 <= 0)
        throw HypothesisError("build_context: shadow potential not positive at the origin");
    c.U = radial::solve_ground_state(c.sh.omega0, p.mu2, p.dim);
    double eps = p.epsilon;
    double rho = d * eps * std::abs(std::log(eps));
    c.cfg = geometry::build_peaks(rho, eps, p.k, p.m);
    double t = rho / eps, sqw = c.U.rate;

    double hv = opt.h_fine_v > 0 ? opt.h_fine_v : 0.05 / sqw;
    c.vgrid = geometry::make_sector_grid(p.k, p.m, t + opt.margin_v / sqw, hv, 0.0,
                                         t + 6.0 / sqw,
                                         detail::round_n_theta(opt.n_theta_v, p.m), sqw);

    double yrate = c.sh.Y.rate;
    double hu = opt.h_fine_u > 0 ? opt.h_fine_u : std::min(0.04 / yrate, 0.25 * eps / sqw);
    double Ru = std::max(9.0 / yrate, rho + 1.0);
    c.ugrid = geometry::make_sector_grid(p.k, p.m, Ru, hu, 0.0, rho + 4.0 * eps / sqw,
                                         detail::round_n_theta(opt.n_theta_u, p.m), yrate);

    c.op_u = elliptic::assemble(c.ugrid,
                                elliptic::first_component_coef(c.ugrid, V, c.sh.Y, p.mu1));
    c.op_v = elliptic::assemble(
        c.vgrid, elliptic::second_component_coef(c.vgrid, c.sh.omega0, c.U, p.mu2, c.cfg));
    c.kb = elliptic::build_kernel(c.U, c.cfg, c.vgrid);
    c.bumps = geometry::assemble_sum_of_bumps(c.U, c.cfg, c.vgrid);

    if (opt.with_corrections) {
        c.phi = elliptic::solve_phi(c.op_u, elliptic::phi_rhs(c.ugrid, c.sh.Y, c.U, c.cfg));
        c.phi0 = c.phi.eval(0.0, 0.0);
        c.psi = elliptic::solve_psi(c.op_v, c.kb, c.U, c.cfg, p.beta, c.phi0, c.sh.Y.u0());
    } else {
        c.phi = SectorField(c.ugrid);
        c.psi.psi = SectorField(c.vgrid);
    }
    c.theta = c.bumps;
    c.theta.v += p.beta * c.psi.psi.v;
    return c;
}

// ---------------------------------------------------------------------------
// residual ledger

struct ErrorReport {
    double e1_l2 = 0, e2_l2 = 0;
    // unit-coefficient L2 norms of the second-component summands:
    //   M1 (om0-om)sumU   M2 (om0-om)Psi    M3 U(Y Phi - Y0 Phi0)
    //   M4 (sumU)^3-sumU^3  M5 Psi((sumU)^2-sumU^2)  M6 Theta sum Theta^2(Ri y)
    //   M7 Phi^2 Theta    M8 Psi Y Phi      M9 U Psi^2    M10 Psi^3
    std::map<std::string, double> per_term;
    // max nodal |ledger-assembled E2 - independent direct E2| relative to the
    // local magnitude of the naive intermediates (round-off-level when the
    // ledger is complete)
    double ledger_defect = 0;
};

inline ErrorReport eval_error_terms(const AnsatzContext& c) {
    const params::SystemParams& p = c.p;
    const double beta = p.beta, al = p.alpha, mu1 = p.mu1, mu2 = p.mu2;
    const double eps = c.cfg.epsilon, om0 = c.sh.omega0, Y0 = c.sh.Y.u0();
    ErrorReport rep;

    // --- first component, on the u-grid
    {
        const SectorGrid& g = *c.ugrid;
        SectorField e1(c.ugrid);
        for (int i = 0; i < g.nr(); ++i)
            for (int j = 0; j < g.nt(); ++j) {
                int n = g.idx(i, j);
                double x, y;
                geometry::node_xy(g, i, j, x, y);
                double Y = c.sh.Y.value(std::hypot(x, y));
                double Phi = c.phi.v(n);
                double sum_psi2 = 0, sum_upsi = 0, sum_theta2 = 0;
                for (int ii = 1; ii <= p.m; ++ii) {
                    geometry::Pt q = geometry::rhat(ii, p.m, p.k).apply({x, y, 0.0});
                    double ub = 0;
                    for (auto& pk : c.cfg.rotated_peaks[ii - 1])
                        ub += c.U.value(std::hypot(x - pk[0], y - pk[1]) / eps);
                    double ps = c.psi.psi.eval(q[0] / eps, q[1] / eps);
                    sum_psi2 += ps * ps;
                    sum_upsi += ub * ps;
                    double th = ub + beta * ps;
                    sum_theta2 += th * th;
                }
                e1.v(n) = 3.0 * mu1 * beta * beta * Y * Phi * Phi +
                          mu1 * beta * beta * beta * Phi * Phi * Phi +
                          beta * beta * beta * Y * sum_psi2 +
                          2.0 * beta * beta * Y * sum_upsi + beta * beta * Phi * sum_theta2;
            }
        rep.e1_l2 = e1.l2_norm();
    }

    // --- second component, on the v-grid
    const SectorGrid& g = *c.vgrid;
    auto Ui = detail::bump_values(g, c.U, c.cfg.centers_scaled());
    std::vector<SectorField> trot;  // Theta(Rhat_i y), i = 2..m
    for (int ii = 2; ii <= p.m; ++ii) trot.push_back(geometry::rotate_field(c.theta, ii));

    std::map<std::string, SectorField> M;
    for (const char* name : {"M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8", "M9", "M10"})
        M.emplace(name, SectorField(c.vgrid));
    SectorField e2(c.vgrid), direct(c.vgrid), scale(c.vgrid);

    for (int i = 0; i < g.nr(); ++i)
        for (int j = 0; j < g.nt(); ++j) {
            int n = g.idx(i, j);
            double x, y;
            geometry::node_xy(g, i, j, x, y);
            double r = std::hypot(x, y);
            double sumU = 0, sumU2 = 0, sumU3 = 0;
            for (auto& u : Ui) {
                sumU += u(n);
                sumU2 += u(n) * u(n);
                sumU3 += u(n) * u(n) * u(n);
            }
            double Psi = c.psi.psi.v(n), Th = c.theta.v(n);
            double om = c.sh.omega(eps * r), Ye = c.sh.Y.value(eps * r);
            double Phie = c.phi.eval(eps * x, eps * y);
            double rot2 = 0;
            for (auto& tr : trot) rot2 += tr.v(n) * tr.v(n);
            double d3 = detail::cubic_cross(Ui, n), d2 = detail::quad_cross(Ui, n);

            M.at("M1").v(n) = (om0 - om) * sumU;
            M.at("M2").v(n) = (om0 - om) * Psi;
            M.at("M3").v(n) = sumU * (Ye * Phie - Y0 * c.phi0);
            M.at("M4").v(n) = d3;
            M.at("M5").v(n) = Psi * d2;
            M.at("M6").v(n) = Th * rot2;
            M.at("M7").v(n) = Phie * Phie * Th;
            M.at("M8").v(n) = Psi * Ye * Phie;
            M.at("M9").v(n) = sumU * Psi * Psi;
            M.at("M10").v(n) = Psi * Psi * Psi;

            double b2 = beta * beta, b3 = b2 * beta;
            e2.v(n) = M.at("M1").v(n) + beta * M.at("M2").v(n) + mu2 * d3 +
                      3.0 * mu2 * beta * M.at("M5").v(n) + 2.0 * b2 * M.at("M3").v(n) +
                      2.0 * b3 * M.at("M8").v(n) + 3.0 * mu2 * b2 * M.at("M9").v(n) +
                      mu2 * b3 * M.at("M10").v(n) + b3 * M.at("M7").v(n) +
                      al * M.at("M6").v(n);

            // independent direct evaluation with the naive bump differences
            double Th_naive = sumU + beta * Psi;
            double dir = (om0 - om) * Th_naive +
                         mu2 * (sumU * sumU * sumU - sumU3) +
                         3.0 * mu2 * beta * Psi * (sumU * sumU - sumU2) +
                         2.0 * b2 * sumU * (Ye * Phie - Y0 * c.phi0) +
                         2.0 * b3 * Psi * Ye * Phie + 3.0 * mu2 * b2 * sumU * Psi * Psi +
                         mu2 * b3 * Psi * Psi * Psi + b3 * Phie * Phie * Th_naive +
                         al * Th_naive * rot2;
            direct.v(n) = dir;
            scale.v(n) = mu2 * sumU * sumU * sumU + std::abs((om0 - om) * Th_naive) +
                         std::abs(al * Th_naive * rot2) + 1.0;
        }

    rep.e2_l2 = e2.l2_norm();
    for (auto& [name, f] : M) rep.per_term[name] = f.l2_norm();
    rep.ledger_defect = ((e2.v - direct.v).cwiseAbs().cwiseQuotient(scale.v)).maxCoeff();
    return rep;
}

// epsilon sweep of the two residual norms with the continuation parameter d
// held fixed; the second component is compared against the log-corrected
// model eps^p |ln eps|^2 (alpha = 0 regime).
struct ErrorRates {
    std::vector<double> epsilons, e1, e2;
    double e1_exponent = 0;
    double e2_exponent = 0;            // exponent of the log-corrected model
    double e2_plain_exponent = 0;      // pure power fit, for comparison
    bool e2_log_model_preferred = false;
};

inline ErrorRates sweep_error_rates(params::SystemParams p, const params::PotentialSpec& V,
                                    const params::PotentialSpec& W, double d,
                                    const std::vector<double>& epsilons,
                                    const GridOptions& opt = {}) {
    ErrorRates out;
    for (double e : epsilons) {
        p.epsilon = e;
        AnsatzContext c = build_context(p, V, W, d, opt);
        ErrorReport rep = eval_error_terms(c);
        out.epsilons.push_back(e);
        out.e1.push_back(rep.e1_l2);
        out.e2.push_back(rep.e2_l2);
    }
    out.e1_exponent = fit_rate(out.epsilons, out.e1).exponent;
    RateFit plain = fit_rate(out.epsilons, out.e2);
    RateFit logc = fit_rate(out.epsilons, out.e2, 2.0);
    out.e2_plain_exponent = plain.exponent;
    out.e2_exponent = logc.exponent;
    out.e2_log_model_preferred = logc.rss < plain.rss;
    return out;
}

// ---------------------------------------------------------------------------
// kernel projection

struct ProjectionReport {
    std::map<std::string, double> f_terms;  // F1..F9: int E2 Z, term by term
    std::map<std::string, double> p_terms;  // P1..P13: int L2(phi,psi) Z (with remainder)
    double e_projection = 0;                // sum of F
    double l_projection = 0;                // sum of P
    double n_projection = 0;                // int N2(phi,psi) Z
    double denom = 0;                       // int Z^2
    double c_epsilon = 0;                   // (L - E - N) projection / denom
};

// F-terms always; P- and N-terms when the remainder pair is supplied (phi_rem
// on the u-grid, psi_rem on the v-grid).
inline ProjectionReport eval_projection(const AnsatzContext& c,
                                        const SectorField* phi_rem = nullptr,
                                        const SectorField* psi_rem = nullptr) {
    const params::SystemParams& p = c.p;
    const double beta = p.beta, al = p.alpha, mu2 = p.mu2;
    const double eps = c.cfg.epsilon, om0 = c.sh.omega0, Y0 = c.sh.Y.u0();
    const double b2 = beta * beta, b3 = b2 * beta;
    const SectorGrid& g = *c.vgrid;
    auto Ui = detail::bump_values(g, c.U, c.cfg.centers_scaled());
    std::vector<SectorField> trot, prot;  // Theta(Rhat_i y), psi(Rhat_i y), i=2..m
    for (int ii = 2; ii <= p.m; ++ii) {
        trot.push_back(geometry::rotate_field(c.theta, ii));
        if (psi_rem) prot.push_back(geometry::rotate_field(*psi_rem, ii));
    }

    ProjectionReport rep;
    std::map<std::string, double> F, P;
    for (int idx = 1; idx <= 9; ++idx) F["F" + std::to_string(idx)] = 0;
    if (psi_rem) for (int idx = 1; idx <= 13; ++idx) P["P" + std::to_string(idx)] = 0;
    double denom = 0, nproj = 0;

    for (int i = 0; i < g.nr(); ++i)
        for (int j = 0; j < g.nt(); ++j) {
            int n = g.idx(i, j);
            double wq = g.weights[n];
            if (wq == 0) continue;
            double x, y;
            geometry::node_xy(g, i, j, x, y);
            double r = std::hypot(x, y);
            double Z = c.kb.z.v(n);
            double sumU = 0;
            for (auto& u : Ui) sumU += u(n);
            double Psi = c.psi.psi.v(n), Th = c.theta.v(n);
            double om = c.sh.omega(eps * r), Ye = c.sh.Y.value(eps * r);
            double Phie = c.phi.eval(eps * x, eps * y);
            double rot2 = 0;
            for (auto& tr : trot) rot2 += tr.v(n) * tr.v(n);
            double d3 = detail::cubic_cross(Ui, n), d2 = detail::quad_cross(Ui, n);

            denom += wq * Z * Z;
            F["F1"] += wq * (om0 - om) * Th * Z;
            F["F2"] += wq * 2.0 * b2 * sumU * (Ye * Phie - Y0 * c.phi0) * Z;
            F["F3"] += wq * mu2 * d3 * Z;
            F["F4"] += wq * 3.0 * mu2 * beta * d2 * Psi * Z;
            F["F5"] += wq * b3 * Phie * Phie * Th * Z;
            F["F6"] += wq * 2.0 * b3 * Psi * Ye * Phie * Z;
            F["F7"] += wq * 3.0 * mu2 * b2 * sumU * Psi * Psi * Z;
            F["F8"] += wq * mu2 * b3 * Psi * Psi * Psi * Z;
            F["F9"] += wq * al * Th * rot2 * Z;

            if (!psi_rem) continue;
            double ps = psi_rem->v(n);
            double ph = phi_rem ? phi_rem->eval(eps * x, eps * y) : 0.0;
            // sum_{a != b} U_b^2 Z_a at this node
            double cross_uz = 0, sumU2 = 0;
            for (auto& u : Ui) sumU2 += u(n) * u(n);
            for (size_t a = 0; a < Ui.size(); ++a)
                cross_uz += c.kb.z_parts[a].v(n) * (sumU2 - Ui[a](n) * Ui[a](n));
            P["P1"] += wq * (om - om0) * ps * Z;
            P["P2"] += wq * (-3.0 * mu2) * cross_uz * ps;
            P["P3"] += wq * (-3.0 * mu2) * d2 * Z * ps;
            P["P4"] += wq * (-3.0 * mu2 * b2) * Psi * Psi * Z * ps;
            P["P5"] += wq * (-6.0 * mu2 * beta) * sumU * Psi * Z * ps;
            P["P6"] += wq * (-b3) * Phie * Phie * Z * ps;
            P["P7"] += wq * (-2.0 * b2) * Ye * Phie * Z * ps;
            P["P8"] += wq * (-2.0 * b2) * Psi * Ye * ph * Z;
            P["P9"] += wq * (-2.0 * b3) * Psi * Phie * ph * Z;
            P["P10"] += wq * (-2.0 * beta) * sumU * Ye * ph * Z;
            P["P11"] += wq * (-2.0 * b2) * sumU * Phie * ph * Z;
            double rot_mix = 0, rot_psi2 = 0, rot_tp = 0;
            for (size_t a = 0; a < trot.size(); ++a) {
                rot_mix += trot[a].v(n) * prot[a].v(n);
                rot_psi2 += prot[a].v(n) * prot[a].v(n);
                rot_tp += 2.0 * trot[a].v(n) * prot[a].v(n) + prot[a].v(n) * prot[a].v(n);
            }
            P["P12"] += wq * (-2.0 * al) * Th * rot_mix * Z;
            P["P13"] += wq * (-al) * ps * rot2 * Z;
            // quadratic-and-higher remainder terms
            double ue = Ye + beta * Phie;  // first-component ansatz at eps*y
            double n2 = mu2 * ps * ps * (3.0 * Th + ps) + beta * ps * ph * (2.0 * ue + ph) +
                        beta * Th * ph * ph + al * Th * rot_psi2 + al * ps * rot_tp;
            nproj += wq * n2 * Z;
        }

    double full = 2.0 * g.k;  // the plane integral is 2k sector copies
    for (auto& kv : F) { kv.second *= full; rep.e_projection += kv.second; }
    for (auto& kv : P) { kv.second *= full; rep.l_projection += kv.second; }
    rep.f_terms = std::move(F);
    rep.p_terms = std::move(P);
    rep.n_projection = nproj * full;
    rep.denom = denom * full;
    rep.c_epsilon = (rep.l_projection - rep.e_projection - rep.n_projection) / rep.denom;
    return rep;
}

// ---------------------------------------------------------------------------
// light bump-only interaction samples for the prefactor sweeps (no correction
// solves; the neglected correction contributions are higher order)

namespace detail {

inline std::shared_ptr<SectorGrid> sample_grid(const radial::RadialProfile& U, int k, int m,
                                               double t, double h_factor) {
    double rate = U.rate;
    double h = h_factor / rate;
    // angular resolution tied to the arc length at the peak ring
    int nt = std::max(32, (int)std::ceil((PI / k) * t * rate / 0.1));
    nt = round_n_theta(nt, m);
    return geometry::make_sector_grid(k, m, t + 10.0 / rate, h,
                                      std::max(0.0, t - 6.0 / rate), t + 6.0 / rate, nt, rate);
}

}  // namespace detail

// mu2 int ((sum U)^3 - sum U^3) Z at peak-ring radius t (scaled units)
inline double f3_sample(const radial::RadialProfile& U, int k, int m, double t, double mu2,
                        double h_factor = 0.04) {
    auto g = detail::sample_grid(U, k, m, t, h_factor);
    PeakConfiguration cfg = geometry::build_peaks(t, 1.0, k, m);
    auto Ui = detail::bump_values(*g, U, cfg.centers_scaled());
    elliptic::KernelBasis kb = elliptic::build_kernel(U, cfg, g);
    double s = 0;
    for (int n = 0; n < g->size(); ++n)
        s += g->weights[n] * mu2 * detail::cubic_cross(Ui, n) * kb.z.v(n);
    return 2.0 * k * s;
}

// alpha int Theta0 sum_{i>=2} Theta0^2(Rhat_i y) Z with the bump-only Theta0
inline double f9_sample(const radial::RadialProfile& U, int k, int m, double t, double alpha,
                        double h_factor = 0.04) {
    if (m < 2) throw ConfigError("f9_sample: needs m >= 2");
    auto g = detail::sample_grid(U, k, m, t, h_factor);
    PeakConfiguration cfg = geometry::build_peaks(t, 1.0, k, m);
    SectorField th0 = geometry::assemble_sum_of_bumps(U, cfg, g);
    elliptic::KernelBasis kb = elliptic::build_kernel(U, cfg, g);
    std::vector<SectorField> trot;
    for (int ii = 2; ii <= m; ++ii) trot.push_back(geometry::rotate_field(th0, ii));
    double s = 0;
    for (int n = 0; n < g->size(); ++n) {
        double rot2 = 0;
        for (auto& tr : trot) rot2 += tr.v(n) * tr.v(n);
        s += g->weights[n] * alpha * th0.v(n) * rot2 * kb.z.v(n);
    }
    return 2.0 * k * s;
}

// fit samples ~ prefactor * exp(-fixed_rate * t) * t^(-fixed_power); the free
// (rate, power) fit is reported alongside for the asymptotic-form check
struct PrefactorFit {
    double prefactor = 0;
    double fitted_rate = 0, fitted_power = 0;
    double r2 = 0;
};

inline PrefactorFit fit_prefactor(const std::vector<double>& ts, const std::vector<double>& vals,
                                  double fixed_rate, double fixed_power) {
    if (ts.size() < 3) throw NumericalError("fit_prefactor: too few samples");
    ExpPowerFit free = fit_exp_power(ts, vals, true);
    PrefactorFit out;
    out.fitted_rate = free.rate;
    out.fitted_power = free.power;
    out.r2 = free.r2;
    double acc = 0;
    for (size_t i = 0; i < ts.size(); ++i)
        acc += std::log(std::abs(vals[i])) + fixed_rate * ts[i] + fixed_power * std::log(ts[i]);
    out.prefactor = std::exp(acc / ts.size());
    return out;
}

// ---------------------------------------------------------------------------
// calibrated peak-radius equation

struct ReducedSolution {
    balance::BalanceProblem problem;
    balance::BalanceSolution sol;
};

// interaction_prefactor: B1 (alpha = 0) or B2 (alpha != 0), both positive.
inline ReducedSolution solve_reduced_d(const params::SystemParams& p,
                                       const shadow::ShadowPotential& sh, const Constants& cst,
                                       double interaction_prefactor) {
    shadow::Classification cl = shadow::classify(sh, p.alpha);
    if (cl == shadow::Classification::Inadmissible)
        throw HypothesisError(
            "solve_reduced_d: sign hypothesis violated (need Lap omega(0) < 0 for alpha = 0, "
            "alpha * Lap omega(0) < 0 otherwise)");
    if (!(interaction_prefactor > 0))
        throw NumericalError("solve_reduced_d: interaction prefactor must be positive");
    ReducedSolution out;
    out.problem.kase = p.alpha == 0.0 ? balance::BalanceCase::AlphaZero
                                      : balance::BalanceCase::AlphaNonzero;
    out.problem.omega0 = sh.omega0;
    out.problem.k = p.k;
    out.problem.m = p.m;
    out.problem.dim = p.dim;
    out.problem.epsilon = p.epsilon;
    out.problem.lhs_const = cst.A * std::abs(sh.lap_omega0);
    out.problem.rhs_const =
        p.alpha == 0.0 ? interaction_prefactor : std::abs(p.alpha) * interaction_prefactor;
    out.sol = balance::solve_balance(out.problem);
    return out;
}

}  // namespace polybump::reduction
