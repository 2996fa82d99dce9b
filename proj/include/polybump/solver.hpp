#pragma once
// Damped Newton solve of the full coupled system on the two sector grids,
// epsilon-continuation with warm starts, and remainder extraction against the
// corrected ansatz.
//
// The nonlinear residual is the finite-volume (weighted) form whose exact
// Jacobian is elliptic::assemble_coupled at the current iterate: the coupling
// evaluations (v at Rhat_i y/eps, u at eps y, v at Rhat_i y) use the same
// interpolation / re-indexing weights as the Jacobian columns, so Newton is
// consistent and converges quadratically on the discrete system.

#include "common.hpp"
#include "elliptic.hpp"
#include "geometry.hpp"
#include "reduction.hpp"

#include <functional>

namespace polybump::solver {

using geometry::SectorField;
using geometry::SectorGrid;

struct SolveResult {
    SectorField u, v;
    // sup norm of the assembled discrete equations (cell-integral form); the
    // strong-form sup (divided by cell measures) is kept as a diagnostic: at
    // the near-center cells its double-precision floor is ~(angular
    // stiffness / measure) * ulp(u) ~ 1e-9 and cannot be driven lower
    double residual = 0;
    double residual_strong = 0;
    int newton_iters = 0;
    double peak_radius = 0;  // sub-grid radius of the v maximum along theta = 0
    bool positive = true;
};

namespace detail {

// weighted-form nonlinear residual; lap_u/lap_v are the bare Laplacian parts
// (assemble with zero coefficient), kept fixed across iterations
struct ResidualAssembler {
    const params::SystemParams& p;
    const params::PotentialSpec& V;
    const params::PotentialSpec& W;
    double epsilon;
    elliptic::Operator lap_u, lap_v;

    ResidualAssembler(const params::SystemParams& p_, const params::PotentialSpec& V_,
                      const params::PotentialSpec& W_,
                      std::shared_ptr<const SectorGrid> ug,
                      std::shared_ptr<const SectorGrid> vg, double eps)
        : p(p_), V(V_), W(W_), epsilon(eps) {
        SectorField zu(ug), zv(vg);
        lap_u = elliptic::assemble(ug, zu);
        lap_v = elliptic::assemble(vg, zv);
    }

    // returns the weighted residual stacked (u rows, v rows)
    Eigen::VectorXd weighted(const SectorField& u, const SectorField& v) const {
        const SectorGrid& gu = *lap_u.grid;
        const SectorGrid& gv = *lap_v.grid;
        Eigen::VectorXd r(gu.size() + gv.size());
        r.head(gu.size()) = elliptic::apply_laplace_flux(gu, u.v);
        r.tail(gv.size()) = elliptic::apply_laplace_flux(gv, v.v);
        for (int i = 0; i < gu.nr(); ++i)
            for (int j = 0; j < gu.nt(); ++j) {
                int n = gu.idx(i, j);
                double x, y;
                geometry::node_xy(gu, i, j, x, y);
                double uu = u.v(n);
                double sumv2 = 0;
                for (int ii = 1; ii <= p.m; ++ii) {
                    geometry::Pt q = geometry::rhat(ii, p.m, p.k).apply({x, y, 0.0});
                    double vq = v.eval(q[0] / epsilon, q[1] / epsilon);
                    sumv2 += vq * vq;
                }
                r(n) += lap_u.w(n) * (V(std::hypot(x, y)) * uu - p.mu1 * uu * uu * uu -
                                      p.beta * uu * sumv2);
            }
        std::vector<SectorField> vrot;
        for (int ii = 2; ii <= p.m; ++ii) vrot.push_back(geometry::rotate_field(v, ii));
        for (int i = 0; i < gv.nr(); ++i)
            for (int j = 0; j < gv.nt(); ++j) {
                int n = gv.idx(i, j);
                double x, y;
                geometry::node_xy(gv, i, j, x, y);
                double vv = v.v(n);
                double ue = u.eval(epsilon * x, epsilon * y);
                double rot2 = 0;
                for (auto& vr : vrot) rot2 += vr.v(n) * vr.v(n);
                r(gu.size() + n) +=
                    lap_v.w(n) * (W(epsilon * std::hypot(x, y)) * vv - p.mu2 * vv * vv * vv -
                                  p.beta * vv * ue * ue - p.alpha * vv * rot2);
            }
        return r;
    }

    // sup of the assembled equations (row n is the cell integral of the
    // residual); this is the Newton convergence norm
    double sup_nodal(const Eigen::VectorXd& rw) const { return rw.cwiseAbs().maxCoeff(); }

    // strong-form sup (per-cell average residual); diagnostic only, see
    // SolveResult::residual_strong
    double sup_strong(const Eigen::VectorXd& rw) const {
        double s = 0;
        for (int n = 0; n < lap_u.w.size(); ++n)
            s = std::max(s, std::abs(rw(n)) / lap_u.w(n));
        for (int n = 0; n < lap_v.w.size(); ++n)
            s = std::max(s, std::abs(rw(lap_u.w.size() + n)) / lap_v.w(n));
        return s;
    }
};

}  // namespace detail

struct NewtonOptions {
    int max_iter = 50;
    double tol = 1e-10;
    double min_step = std::pow(2.0, -20);
};

// sub-grid peak radius of f along theta = 0 by quadratic interpolation around
// the nodal maximum
inline double peak_radius_subgrid(const SectorField& f) {
    const SectorGrid& g = *f.grid;
    int best = 0;
    for (int i = 1; i < g.nr(); ++i)
        if (f.at(i, 0) > f.at(best, 0)) best = i;
    if (best == 0 || best == g.nr() - 1) return g.r[best];
    double r0 = g.r[best - 1], r1 = g.r[best], r2 = g.r[best + 1];
    double f0 = f.at(best - 1, 0), f1 = f.at(best, 0), f2 = f.at(best + 1, 0);
    // vertex of the quadratic through three (possibly non-uniform) nodes, in
    // Newton divided-difference form
    double d1 = (f1 - f0) / (r1 - r0), d2 = (f2 - f1) / (r2 - r1);
    double a = (d2 - d1) / (r2 - r0);
    if (a >= 0) return r1;
    return 0.5 * (r0 + r1) - d1 / (2.0 * a);
}

inline SolveResult newton_solve(const params::SystemParams& p, const params::PotentialSpec& V,
                                const params::PotentialSpec& W, const SectorField& u0,
                                const SectorField& v0, double epsilon,
                                const NewtonOptions& opt = {}) {
    detail::ResidualAssembler ra(p, V, W, u0.grid, v0.grid, epsilon);
    SolveResult out;
    out.u = u0;
    out.v = v0;
    Eigen::VectorXd rw = ra.weighted(out.u, out.v);
    double res = ra.sup_nodal(rw);
    const int nu = (int)ra.lap_u.w.size();
    for (int it = 0; it < opt.max_iter && res > opt.tol; ++it) {
        elliptic::CoupledOperator J =
            elliptic::assemble_coupled(p, V, W, out.u, out.v, epsilon);
        Eigen::SparseLU<elliptic::SpMat> lu(J.A);
        if (lu.info() != Eigen::Success)
            throw NumericalError("newton_solve: Jacobian factorization failed");
        Eigen::VectorXd delta = lu.solve(-rw);
        bool vpos = out.v.v.minCoeff() > 0;
        // damped step along the Newton ray: probe halved steps and keep the
        // best admissible decrease.  Far from the solution the residual along
        // the ray is not monotone in the step, so a first-acceptance Armijo
        // rule picks needlessly small steps; probing a short ladder and then
        // extending only while nothing decreased is both greedier and safe
        SectorField best_u = out.u, best_v = out.v;
        Eigen::VectorXd best_r;
        double best_res = std::numeric_limits<double>::infinity();
        for (double step = 1.0; step >= opt.min_step; step *= 0.5) {
            SectorField ut = out.u, vt = out.v;
            ut.v += step * delta.head(nu);
            vt.v += step * delta.tail(delta.size() - nu);
            if (!(vpos && vt.v.minCoeff() <= 0)) {
                Eigen::VectorXd rt = ra.weighted(ut, vt);
                double rest = ra.sup_nodal(rt);
                if (rest < best_res) {
                    best_res = rest;
                    best_u = std::move(ut);
                    best_v = std::move(vt);
                    best_r = std::move(rt);
                }
            }
            if (best_res < opt.tol) break;
            // past the initial ladder, stop as soon as some decrease exists
            if (step <= 1.0 / 64.0 && best_res < res) break;
        }
        if (best_res >= res)
            throw NumericalError("newton_solve: line search stalled at residual " +
                                 std::to_string(res));
        out.u = std::move(best_u);
        out.v = std::move(best_v);
        rw = std::move(best_r);
        res = best_res;
        out.newton_iters = it + 1;
    }
    out.residual = res;
    out.residual_strong = ra.sup_strong(rw);
    if (res > opt.tol)
        throw NumericalError("newton_solve: no convergence, residual " + std::to_string(res));
    out.peak_radius = peak_radius_subgrid(out.v);
    out.positive = out.u.v.minCoeff() > 0 && out.v.v.minCoeff() > 0;
    return out;
}

// remainder of a solve against the corrected ansatz of the same context
struct Remainder {
    SectorField phi, psi;  // u - Upsilon on the u-grid, v - Theta on the v-grid
    double phi_l2 = 0, psi_l2 = 0;
    double phi_h2 = 0, psi_h2 = 0;  // discrete (L2 + grad + Laplacian) norms
    double orthogonality_defect = 0;  // |int psi Z| / (||psi|| ||Z||), reported, not enforced
};

namespace detail {

inline double h2_norm(const elliptic::Operator& lap, const Eigen::VectorXd& f) {
    Eigen::VectorXd lw = lap.A * f;  // weighted Laplacian (with boundary terms)
    double l2 = f.dot(lap.w.cwiseProduct(f));
    double grad = f.dot(lw);
    double lap2 = lw.cwiseQuotient(lap.w).dot(lw);
    double kfac = 2.0 * lap.grid->k;
    return std::sqrt(kfac * (l2 + std::max(grad, 0.0) + lap2));
}

}  // namespace detail

inline Remainder extract_remainder(const reduction::AnsatzContext& c, const SolveResult& s) {
    Remainder rem;
    rem.phi = s.u;
    rem.phi.v -= geometry::nodal_field(c.ugrid, [&](double x, double y) {
                     return c.sh.Y.value(std::hypot(x, y));
                 }).v +
                 c.p.beta * c.phi.v;
    rem.psi = s.v;
    rem.psi.v -= c.theta.v;
    rem.phi_l2 = rem.phi.l2_norm();
    rem.psi_l2 = rem.psi.l2_norm();
    SectorField zu(c.ugrid), zv(c.vgrid);
    rem.phi_h2 = detail::h2_norm(elliptic::assemble(c.ugrid, zu), rem.phi.v);
    rem.psi_h2 = detail::h2_norm(elliptic::assemble(c.vgrid, zv), rem.psi.v);
    double wzpsi = 0;
    for (int n = 0; n < c.vgrid->size(); ++n)
        wzpsi += c.vgrid->weights[n] * rem.psi.v(n) * c.kb.z.v(n);
    wzpsi *= 2.0 * c.vgrid->k;
    double zn = std::sqrt(c.kb.norm_sq);
    rem.orthogonality_defect = std::abs(wzpsi) / std::max(rem.psi_l2 * zn, 1e-300);
    return rem;
}

// build the corrected-ansatz initial iterate of a context
inline std::pair<SectorField, SectorField> ansatz_pair(const reduction::AnsatzContext& c) {
    SectorField u0 = geometry::nodal_field(c.ugrid, [&](double x, double y) {
        return c.sh.Y.value(std::hypot(x, y));
    });
    u0.v += c.p.beta * c.phi.v;
    return {u0, c.theta};
}

struct ContinuationStep {
    double epsilon = 0;
    double residual = 0;
    int newton_iters = 0;
    double peak_radius = 0;       // v-grid units (= rho_solved / epsilon)
    double d_eff = 0;             // peak_radius * epsilon / (epsilon |ln eps|)
    double psi_l2 = 0, psi_h2 = 0, phi_l2 = 0;
    double orthogonality_defect = 0;
};

struct ContinuationTrace {
    std::vector<ContinuationStep> steps;
    double remainder_exponent = 0;        // log-corrected model eps^p |ln eps|^2
    double remainder_plain_exponent = 0;  // pure power fit
    bool log_model_preferred = false;
    double cold_start_gap = -1;  // sup gap warm vs cold solve at the final eps
};

inline ContinuationTrace continue_in_epsilon(params::SystemParams p,
                                             const params::PotentialSpec& V,
                                             const params::PotentialSpec& W, double d,
                                             const std::vector<double>& eps_list,
                                             const reduction::GridOptions& gopt = {},
                                             const NewtonOptions& nopt = {},
                                             bool cold_check = true) {
    for (size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw ConfigError("continue_in_epsilon: eps_list must be strictly decreasing");
    ContinuationTrace out;
    SectorField prev_u, prev_v;
    bool have_prev = false;
    for (double eps : eps_list) {
        p.epsilon = eps;
        reduction::AnsatzContext c = reduction::build_context(p, V, W, d, gopt);
        auto [u0, v0] = ansatz_pair(c);
        if (have_prev) {
            // warm start: interpolate the previous solution onto the new grids
            for (int i = 0; i < c.ugrid->nr(); ++i)
                for (int j = 0; j < c.ugrid->nt(); ++j) {
                    double x, y;
                    geometry::node_xy(*c.ugrid, i, j, x, y);
                    u0.at(i, j) = prev_u.eval(x, y);
                }
            for (int i = 0; i < c.vgrid->nr(); ++i)
                for (int j = 0; j < c.vgrid->nt(); ++j) {
                    double x, y;
                    geometry::node_xy(*c.vgrid, i, j, x, y);
                    v0.at(i, j) = prev_v.eval(x, y);
                }
        }
        SolveResult s = newton_solve(p, V, W, u0, v0, eps, nopt);
        Remainder rem = extract_remainder(c, s);
        ContinuationStep st;
        st.epsilon = eps;
        st.residual = s.residual;
        st.newton_iters = s.newton_iters;
        st.peak_radius = s.peak_radius;
        st.d_eff = s.peak_radius / std::abs(std::log(eps));
        st.psi_l2 = rem.psi_l2;
        st.psi_h2 = rem.psi_h2;
        st.phi_l2 = rem.phi_l2;
        st.orthogonality_defect = rem.orthogonality_defect;
        out.steps.push_back(st);
        prev_u = s.u;
        prev_v = s.v;
        have_prev = true;
        if (eps == eps_list.back() && cold_check) {
            auto [cu, cv] = ansatz_pair(c);
            SolveResult cold = newton_solve(p, V, W, cu, cv, eps, nopt);
            out.cold_start_gap = std::max((cold.u.v - s.u.v).cwiseAbs().maxCoeff(),
                                          (cold.v.v - s.v.v).cwiseAbs().maxCoeff());
        }
    }
    if (out.steps.size() >= 2) {
        std::vector<double> es, ns;
        for (auto& st : out.steps) {
            es.push_back(st.epsilon);
            ns.push_back(st.psi_h2);
        }
        RateFit plain = fit_rate(es, ns);
        RateFit logc = fit_rate(es, ns, 2.0);
        out.remainder_plain_exponent = plain.exponent;
        out.remainder_exponent = logc.exponent;
        out.log_model_preferred = logc.rss < plain.rss;
    }
    return out;
}

}  // namespace polybump::solver
