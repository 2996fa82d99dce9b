#pragma once
// Linear elliptic machinery on symmetry-reduced sector grids: finite-volume
// operator assembly, direct and kernel-deflated solves, eigenvalue estimates,
// the ansatz correction fields, the translation-mode kernel field, and the
// coupled linearized operator shared with the nonlinear solver.
//
// Discretization: cell-centered finite volumes in polar coordinates on the
// sector theta in [0, pi/k].  The scheme is conservative, so the single-field
// operator matrix is symmetric in the cell-measure inner product; the
// symmetry lines carry natural zero-flux (Neumann) conditions and the outer
// circle a Robin condition -du/dn = robin_rate * u matching the tail decay.

#include "common.hpp"
#include "geometry.hpp"
#include "params.hpp"
#include "radial.hpp"
#include "shadow.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <random>

namespace polybump::elliptic {

using geometry::PeakConfiguration;
using geometry::SectorField;
using geometry::SectorGrid;

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// (-Laplace + c) in weighted (finite-volume) form: row n holds the cell
// integral of the operator, so A is symmetric and the discrete problem reads
// A x = W f with W = diag(cell measures).
struct Operator {
    std::shared_ptr<const SectorGrid> grid;
    SpMat A;
    Eigen::VectorXd w;  // cell measures (copy of grid weights)
};

namespace detail {

// flux coefficients of the sector Laplacian; shared by all assemblies
inline void laplace_triplets(const SectorGrid& g, std::vector<Triplet>& T) {
    const int N = g.nr(), nt = g.nt();
    for (int i = 0; i < N; ++i) {
        double clo = i == 0 ? 0.0 : 0.5 * (g.r[i - 1] + g.r[i]);
        double chi = i == N - 1 ? g.R_out : 0.5 * (g.r[i] + g.r[i + 1]);
        for (int j = 0; j < nt; ++j) {
            int n = g.idx(i, j);
            double wt = (j == 0 || j == g.n_theta) ? 0.5 * g.dtheta : g.dtheta;
            // radial fluxes
            if (i + 1 < N) {
                double t = chi * wt / (g.r[i + 1] - g.r[i]);
                T.emplace_back(n, n, t);
                T.emplace_back(n, g.idx(i + 1, j), -t);
            } else {
                // Robin face: -du/dr = rate*u contributes chi*wt*rate to the diagonal
                T.emplace_back(n, n, chi * wt * g.robin_rate);
            }
            if (i > 0) {
                double t = clo * wt / (g.r[i] - g.r[i - 1]);
                T.emplace_back(n, n, t);
                T.emplace_back(n, g.idx(i - 1, j), -t);
            }
            // angular fluxes (zero across the symmetry lines j=0, n_theta)
            double dr = chi - clo;
            if (j + 1 < nt) {
                double t = dr / (g.r[i] * g.dtheta);
                T.emplace_back(n, n, t);
                T.emplace_back(n, g.idx(i, j + 1), -t);
                T.emplace_back(g.idx(i, j + 1), g.idx(i, j + 1), t);
                T.emplace_back(g.idx(i, j + 1), n, -t);
            }
        }
    }
}

// bilinear interpolation weights of a plane point against the sector grid,
// mirroring SectorField::eval (dihedral fold + exponential continuation)
inline void interp_weights(const SectorGrid& g, double x, double y,
                           std::vector<std::pair<int, double>>& out) {
    out.clear();
    double rr = std::hypot(x, y);
    double period = 2.0 * PI / g.k;
    double t = std::fmod(std::atan2(y, x), period);
    if (t < 0) t += period;
    if (t > 0.5 * period) t = period - t;
    double jt = t / g.dtheta;
    int j0 = std::min((int)jt, g.n_theta - 1);
    double tw = jt - j0;
    const auto& R = g.r;
    int N = g.nr();
    auto add = [&](int i, int j, double wgt) {
        if (wgt != 0.0) out.emplace_back(g.idx(i, j), wgt);
    };
    if (rr <= R[0]) {
        add(0, j0, 1 - tw);
        add(0, j0 + 1, tw);
        return;
    }
    if (rr >= R[N - 1]) {
        double damp = std::exp(-g.robin_rate * (rr - R[N - 1]));
        add(N - 1, j0, (1 - tw) * damp);
        add(N - 1, j0 + 1, tw * damp);
        return;
    }
    auto it = std::upper_bound(R.begin(), R.end(), rr);
    int i = (int)(it - R.begin()) - 1;
    double rw = (rr - R[i]) / (R[i + 1] - R[i]);
    add(i, j0, (1 - rw) * (1 - tw));
    add(i + 1, j0, rw * (1 - tw));
    add(i, j0 + 1, (1 - rw) * tw);
    add(i + 1, j0 + 1, rw * tw);
}

}  // namespace detail

// assemble (-Laplace + coef) with the nodal coefficient field
inline Operator assemble(std::shared_ptr<const SectorGrid> g, const SectorField& coef) {
    Operator op;
    op.grid = g;
    op.w = Eigen::Map<const Eigen::VectorXd>(g->weights.data(), g->size());
    std::vector<Triplet> T;
    detail::laplace_triplets(*g, T);
    for (int n = 0; n < g->size(); ++n) T.emplace_back(n, n, op.w(n) * coef.v(n));
    op.A.resize(g->size(), g->size());
    op.A.setFromTriplets(T.begin(), T.end());
    return op;
}

inline Eigen::VectorXd apply(const Operator& op, const Eigen::VectorXd& x) { return op.A * x; }

// cancellation-free application of the bare weighted Laplacian: each face flux
// is formed from the nodal difference first and only then scaled by the face
// coefficient, so roundoff follows the flux magnitudes (small wherever the
// field is smooth) instead of coef * |x|.  At the near-center cells the
// angular coefficients reach ~1/(r dtheta)^2 and the matrix product A*x
// carries an absolute roundoff floor ~1e-9 in strong form; this form does not.
inline Eigen::VectorXd apply_laplace_flux(const SectorGrid& g, const Eigen::VectorXd& x) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
    const int N = g.nr(), nt = g.nt();
    for (int i = 0; i < N; ++i) {
        double clo = i == 0 ? 0.0 : 0.5 * (g.r[i - 1] + g.r[i]);
        double chi = i == N - 1 ? g.R_out : 0.5 * (g.r[i] + g.r[i + 1]);
        for (int j = 0; j < nt; ++j) {
            int n = g.idx(i, j);
            double wt = (j == 0 || j == g.n_theta) ? 0.5 * g.dtheta : g.dtheta;
            if (i + 1 < N) {
                int n2 = g.idx(i + 1, j);
                double fl = chi * wt / (g.r[i + 1] - g.r[i]) * (x(n) - x(n2));
                out(n) += fl;
                out(n2) -= fl;
            } else {
                out(n) += chi * wt * g.robin_rate * x(n);
            }
            if (j + 1 < nt) {
                int n2 = g.idx(i, j + 1);
                double fl = (chi - clo) / (g.r[i] * g.dtheta) * (x(n) - x(n2));
                out(n) += fl;
                out(n2) -= fl;
            }
        }
    }
    return out;
}

// lowest eigenvalues of the pencil (A, W) near the shift, by shift-invert
// inverse iteration with W-orthogonal deflation of converged vectors
inline std::vector<double> lowest_eigenvalues(const Operator& op, int nev, double shift = 0.0,
                                              int max_iter = 400, double tol = 1e-10) {
    const int n = (int)op.w.size();
    SpMat B = op.A;
    if (shift != 0.0)
        for (int i = 0; i < n; ++i) B.coeffRef(i, i) -= shift * op.w(i);
    Eigen::SparseLU<SpMat> lu(B);
    if (lu.info() != Eigen::Success)
        throw NumericalError("lowest_eigenvalues: factorization failed (shift hits spectrum?)");
    std::vector<Eigen::VectorXd> vecs;
    std::vector<double> vals;
    std::mt19937 rng(987654321u);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    for (int e = 0; e < nev; ++e) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * ur(rng);
        auto orth = [&](Eigen::VectorXd& y) {
            for (auto& v : vecs) y -= v * (v.dot(op.w.cwiseProduct(y)));
            double nn = std::sqrt(y.dot(op.w.cwiseProduct(y)));
            if (nn < 1e-300) throw NumericalError("lowest_eigenvalues: deflation degenerate");
            y /= nn;
        };
        orth(x);
        double lam = 0, prev = 1e300;
        for (int it = 0; it < max_iter; ++it) {
            Eigen::VectorXd y = lu.solve(op.w.cwiseProduct(x));
            orth(y);
            x = y;
            lam = x.dot(op.A * x) / x.dot(op.w.cwiseProduct(x));
            if (std::abs(lam - prev) < tol * (1.0 + std::abs(lam))) break;
            prev = lam;
        }
        vals.push_back(lam);
        vecs.push_back(x);
    }
    std::sort(vals.begin(), vals.end(),
              [&](double a, double b) { return std::abs(a - shift) < std::abs(b - shift); });
    return vals;
}

// direct solve A x = W f, refusing near-singular operators
inline SectorField solve_direct(const Operator& op, const SectorField& f,
                                double singular_tol = 1e-8) {
    Eigen::SparseLU<SpMat> lu(op.A);
    if (lu.info() != Eigen::Success) throw NumericalError("solve_direct: factorization failed");
    // cheap smallest-eigenvalue probe through the existing factorization
    Eigen::VectorXd x = Eigen::VectorXd::Ones(op.w.size());
    double lam = 0;
    for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd y = lu.solve(op.w.cwiseProduct(x));
        y /= std::sqrt(y.dot(op.w.cwiseProduct(y)));
        lam = y.dot(op.A * y) / y.dot(op.w.cwiseProduct(y));
        x = y;
    }
    if (std::abs(lam) < singular_tol) {
        auto eigs = lowest_eigenvalues(op, 3);
        std::string msg = "solve_direct: operator near singular; eigenvalues near 0:";
        for (double e : eigs) msg += " " + std::to_string(e);
        throw NumericalError(msg);
    }
    SectorField out(op.grid);
    out.v = lu.solve(op.w.cwiseProduct(f.v));
    if (lu.info() != Eigen::Success) throw NumericalError("solve_direct: backsolve failed");
    return out;
}

struct DeflatedSolve {
    SectorField x;
    double multiplier = 0;      // Lagrange multiplier = projection of W f onto the deflated mode
    double defect = 0;          // |<x, z>| / (|x| |z|), ~0 by construction
    double second_eigenvalue = 0;  // smallest pencil eigenvalue on the z-complement
};

// solve A x = W f with the near-kernel direction z deflated: the bordered
// system enforces <x, z> = 0 (cell-measure inner product) and projects the
// equation onto the complement of z.
inline DeflatedSolve solve_deflated(const Operator& op, const SectorField& f, const SectorField& z,
                                    double second_singular_tol = 1e-8) {
    const int n = (int)op.w.size();
    Eigen::VectorXd wz = op.w.cwiseProduct(z.v);
    std::vector<Triplet> T;
    T.reserve(op.A.nonZeros() + 2 * n + 1);
    for (int kk = 0; kk < op.A.outerSize(); ++kk)
        for (SpMat::InnerIterator it(op.A, kk); it; ++it)
            T.emplace_back((int)it.row(), (int)it.col(), it.value());
    for (int i = 0; i < n; ++i) {
        T.emplace_back(i, n, wz(i));
        T.emplace_back(n, i, wz(i));
    }
    SpMat M(n + 1, n + 1);
    M.setFromTriplets(T.begin(), T.end());
    Eigen::SparseLU<SpMat> lu(M);
    if (lu.info() != Eigen::Success)
        throw NumericalError("solve_deflated: bordered factorization failed");
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = op.w.cwiseProduct(f.v);
    rhs(n) = 0.0;
    Eigen::VectorXd sol = lu.solve(rhs);
    DeflatedSolve out;
    out.x = SectorField(op.grid);
    out.x.v = sol.head(n);
    double z2 = z.v.dot(wz);
    out.multiplier = sol(n) / std::max(z2, 1e-300);
    double xn = std::sqrt(out.x.v.dot(op.w.cwiseProduct(out.x.v)));
    out.defect = std::abs(out.x.v.dot(wz)) / std::max(xn * std::sqrt(z2), 1e-300);
    // probe the smallest remaining pencil eigenvalue through the bordered solve
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double lam = 0;
    for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd b(n + 1);
        b.head(n) = op.w.cwiseProduct(x);
        b(n) = 0.0;
        Eigen::VectorXd y = lu.solve(b);
        Eigen::VectorXd yy = y.head(n);
        yy /= std::sqrt(yy.dot(op.w.cwiseProduct(yy)));
        lam = yy.dot(op.A * yy) / yy.dot(op.w.cwiseProduct(yy));
        x = yy;
    }
    out.second_eigenvalue = lam;
    if (std::abs(lam) < second_singular_tol)
        throw NumericalError("solve_deflated: deflation ineffective, second eigenvalue " +
                             std::to_string(lam) + " also near 0");
    return out;
}

// ---------------------------------------------------------------------------
// correction fields of the ansatz

struct SpectrumReport {
    std::vector<double> eigenvalues;
    double tol = 1e-3;
    bool pass = false;
};

// lowest eigenvalues of -Laplace + V - 3 mu1 Y^2 on the even symmetric
// subspace.  dim=1 uses a half-line mesh with the even (Neumann) condition at
// the origin; dim>=2 uses the sector grid (even in each coordinate).
inline SpectrumReport check_nondegeneracy(const params::PotentialSpec& V,
                                          const radial::RadialProfile& Y, double mu1, int dim,
                                          double tol = 1e-3, double R_out = 14.0,
                                          double h = 0.02) {
    SpectrumReport rep;
    rep.tol = tol;
    if (dim == 1) {
        // half-line finite volumes, nodes at (i+1/2)h, zero flux at 0 (even parity)
        int n = (int)std::ceil(R_out / h);
        std::vector<Triplet> T;
        Eigen::VectorXd w(n);
        double cmin = 0;
        for (int i = 0; i < n; ++i) {
            w(i) = h;
            double r = (i + 0.5) * h;
            double c = V(r) - 3.0 * mu1 * Y.value(r) * Y.value(r);
            cmin = std::min(cmin, c);
            T.emplace_back(i, i, h * c);
            if (i + 1 < n) {
                T.emplace_back(i, i, 1.0 / h);
                T.emplace_back(i, i + 1, -1.0 / h);
                T.emplace_back(i + 1, i + 1, 1.0 / h);
                T.emplace_back(i + 1, i, -1.0 / h);
            } else {
                T.emplace_back(i, i, std::sqrt(std::max(V(R_out), 1e-12)));
            }
        }
        Operator op;
        op.w = w;
        op.A.resize(n, n);
        op.A.setFromTriplets(T.begin(), T.end());
        op.grid = nullptr;
        rep.eigenvalues = lowest_eigenvalues(op, 1, cmin - 0.5);
        for (double e : lowest_eigenvalues(op, 3, 0.0)) rep.eigenvalues.push_back(e);
    } else {
        auto g = geometry::make_sector_grid(2, 1, R_out, h, 0.0, 6.0, 24,
                                            std::sqrt(std::max(V(R_out), 1e-12)), 8 * h);
        SectorField coef = geometry::nodal_field(g, [&](double x, double y) {
            double r = std::hypot(x, y);
            return V(r) - 3.0 * mu1 * Y.value(r) * Y.value(r);
        });
        Operator op = assemble(g, coef);
        double cmin = coef.v.minCoeff();
        rep.eigenvalues = lowest_eigenvalues(op, 1, cmin - 0.5);
        for (double e : lowest_eigenvalues(op, 3, 0.0)) rep.eigenvalues.push_back(e);
    }
    rep.pass = true;
    for (double e : rep.eigenvalues)
        if (std::abs(e) < tol) rep.pass = false;
    return rep;
}

// first-component coefficient V - 3 mu1 Y^2 on a given grid
inline SectorField first_component_coef(std::shared_ptr<const SectorGrid> g,
                                        const params::PotentialSpec& V,
                                        const radial::RadialProfile& Y, double mu1) {
    return geometry::nodal_field(g, [&](double x, double y) {
        double r = std::hypot(x, y);
        return V(r) - 3.0 * mu1 * Y.value(r) * Y.value(r);
    });
}

// second-component coefficient omega0 - 3 mu2 sum_j U_j^2 on the bump grid
inline SectorField second_component_coef(std::shared_ptr<const SectorGrid> g, double omega0,
                                         const radial::RadialProfile& U, double mu2,
                                         const PeakConfiguration& cfg) {
    auto centers = cfg.centers_scaled();
    return geometry::nodal_field(g, [&](double x, double y) {
        double s = 0;
        for (auto& c : centers) {
            double u = U.value(std::hypot(x - c[0], y - c[1]));
            s += u * u;
        }
        return omega0 - 3.0 * mu2 * s;
    });
}

// RHS of the first correction: Y(y) * sum_i U_{rho,eps}^2(Rhat_i y / eps).
// The bump centers of the i-th rotated copy are the P_{ji} in original units.
inline SectorField phi_rhs(std::shared_ptr<const SectorGrid> g, const radial::RadialProfile& Y,
                           const radial::RadialProfile& U, const PeakConfiguration& cfg) {
    return geometry::nodal_field(g, [&](double x, double y) {
        double tot = 0;
        for (auto& row : cfg.rotated_peaks) {
            double s = 0;
            for (auto& p : row)
                s += U.value(std::hypot(x - p[0], y - p[1]) / cfg.epsilon);
            tot += s * s;
        }
        return Y.value(std::hypot(x, y)) * tot;
    });
}

inline SectorField solve_phi(const Operator& first_component, const SectorField& rhs) {
    return solve_direct(first_component, rhs);
}

// translation-mode kernel field Z and its per-peak parts
struct KernelBasis {
    SectorField z;
    std::vector<SectorField> z_parts;  // Z_j, j = 1..k (on the sector)
    double norm_sq = 0;
};

inline KernelBasis build_kernel(const radial::RadialProfile& U, const PeakConfiguration& cfg,
                                std::shared_ptr<const SectorGrid> g) {
    KernelBasis kb;
    kb.z = SectorField(g);
    auto centers = cfg.centers_scaled();
    for (int j = 0; j < cfg.k; ++j) {
        double a = 2.0 * PI * j / cfg.k;
        double nx = std::cos(a), ny = std::sin(a);
        SectorField zj = geometry::nodal_field(g, [&](double x, double y) {
            double dx = x - centers[j][0], dy = y - centers[j][1];
            double r = std::hypot(dx, dy);
            if (r < 1e-12) return 0.0;
            return -U.deriv(r) * (nx * dx + ny * dy) / r;
        });
        kb.z += zj;
        kb.z_parts.push_back(std::move(zj));
    }
    double l2 = kb.z.l2_norm();
    kb.norm_sq = l2 * l2;
    return kb;
}

// residual of the kernel identity (-Laplace + omega0) Z = 3 mu2 sum_j U_j^2 Z_j,
// reported as an L2 norm of the weighted-form defect divided by cell measures
inline double kernel_residual(const Operator& helmholtz, const KernelBasis& kb,
                              const radial::RadialProfile& U, const PeakConfiguration& cfg,
                              double mu2) {
    auto g = helmholtz.grid;
    auto centers = cfg.centers_scaled();
    SectorField rhs(g);
    for (int j = 0; j < cfg.k; ++j) {
        SectorField uj2 = geometry::nodal_field(g, [&](double x, double y) {
            double u = U.value(std::hypot(x - centers[j][0], y - centers[j][1]));
            return 3.0 * mu2 * u * u;
        });
        rhs.v += uj2.v.cwiseProduct(kb.z_parts[j].v);
    }
    Eigen::VectorXd defect = helmholtz.A * kb.z.v - helmholtz.w.cwiseProduct(rhs.v);
    SectorField d(g);
    d.v = defect.cwiseQuotient(helmholtz.w);
    return d.l2_norm();
}

struct PsiResult {
    SectorField psi;
    double deflation_multiplier = 0;
    double deflation_defect = 0;
    double gamma = 0;       // fitted decay rate away from the peaks
    double gamma_r2 = 0;
};

// second correction with the kernel direction deflated; gamma fitted along
// the theta=0 ray beyond the peak ring
inline PsiResult solve_psi(const Operator& second_component, const KernelBasis& kb,
                           const radial::RadialProfile& U, const PeakConfiguration& cfg,
                           double beta, double phi_at_origin, double Y0) {
    auto g = second_component.grid;
    auto centers = cfg.centers_scaled();
    double coefv = 2.0 * beta * phi_at_origin * Y0;
    SectorField rhs = geometry::nodal_field(g, [&](double x, double y) {
        double s = 0;
        for (auto& c : centers) s += U.value(std::hypot(x - c[0], y - c[1]));
        return coefv * s;
    });
    DeflatedSolve ds = solve_deflated(second_component, rhs, kb.z);
    PsiResult out;
    out.psi = std::move(ds.x);
    out.deflation_multiplier = ds.multiplier;
    out.deflation_defect = ds.defect;
    // decay fit: |psi| vs distance to the nearest peak along theta = 0
    double t = cfg.rho / cfg.epsilon;
    std::vector<double> xs, vs;
    for (double r = t + 2.0; r <= std::min(g->R_out - 1.0, t + 10.0); r += 0.5) {
        double v = out.psi.eval(r, 0.0);
        if (std::abs(v) > 1e-280) {
            xs.push_back(r - t);
            vs.push_back(v);
        }
    }
    if (xs.size() >= 4) {
        bool monotone = true;
        for (size_t i = 1; i < vs.size(); ++i)
            if (std::abs(vs[i]) >= std::abs(vs[i - 1])) monotone = false;
        if (monotone) {
            ExpPowerFit f = fit_exp_power(xs, vs, false);
            out.gamma = f.rate;
            out.gamma_r2 = f.r2;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// coupled linearized operator (also the Newton Jacobian of the full system)

struct CoupledOperator {
    std::shared_ptr<const SectorGrid> ugrid, vgrid;
    SpMat A;           // (Nu+Nv) x (Nu+Nv), weighted form
    Eigen::VectorXd w;  // concatenated cell measures
    int nu = 0, nv = 0;
};

// Linearization of the coupled system at the pair (ufield, vfield): diagonal
// blocks are sector Helmholtz operators with state-dependent coefficients,
// off-diagonal blocks are interpolation couplings across the two scales, and
// the alpha terms add group-aligned rotation (re-indexing) couplings.
inline CoupledOperator assemble_coupled(const params::SystemParams& p,
                                        const params::PotentialSpec& Vpot,
                                        const params::PotentialSpec& Wpot,
                                        const SectorField& ufield, const SectorField& vfield,
                                        double epsilon) {
    CoupledOperator op;
    op.ugrid = ufield.grid;
    op.vgrid = vfield.grid;
    op.nu = op.ugrid->size();
    op.nv = op.vgrid->size();
    const int n = op.nu + op.nv;
    op.w.resize(n);
    op.w.head(op.nu) = Eigen::Map<const Eigen::VectorXd>(op.ugrid->weights.data(), op.nu);
    op.w.tail(op.nv) = Eigen::Map<const Eigen::VectorXd>(op.vgrid->weights.data(), op.nv);

    std::vector<Triplet> T;
    {
        std::vector<Triplet> Tu, Tv;
        detail::laplace_triplets(*op.ugrid, Tu);
        detail::laplace_triplets(*op.vgrid, Tv);
        for (auto& t : Tu) T.emplace_back(t.row(), t.col(), t.value());
        for (auto& t : Tv) T.emplace_back(op.nu + t.row(), op.nu + t.col(), t.value());
    }

    std::vector<std::pair<int, double>> iw;
    // first row block: diagonal coefficient and the psi coupling at y/eps
    for (int i = 0; i < op.ugrid->nr(); ++i)
        for (int j = 0; j < op.ugrid->nt(); ++j) {
            int nidx = op.ugrid->idx(i, j);
            double x, y;
            geometry::node_xy(*op.ugrid, i, j, x, y);
            double wv = op.w(nidx);
            double u = ufield.v(nidx);
            double sumv2 = 0;
            for (int ii = 1; ii <= p.m; ++ii) {
                geometry::Rotation R = geometry::rhat(ii, p.m, p.k, p.dim);
                geometry::Pt q = R.apply({x, y, 0.0});
                double vq = vfield.eval(q[0] / epsilon, q[1] / epsilon);
                sumv2 += vq * vq;
                detail::interp_weights(*op.vgrid, q[0] / epsilon, q[1] / epsilon, iw);
                for (auto& [col, wgt] : iw)
                    T.emplace_back(nidx, op.nu + col, wv * (-2.0 * p.beta * u * vq) * wgt);
            }
            double c = Vpot(std::hypot(x, y)) - 3.0 * p.mu1 * u * u - p.beta * sumv2;
            T.emplace_back(nidx, nidx, wv * c);
        }

    // rotated copies of v on its own grid (exact re-indexing, m | 2 n_theta)
    std::vector<SectorField> vrot;
    for (int ii = 1; ii <= p.m; ++ii) vrot.push_back(geometry::rotate_field(vfield, ii));

    for (int i = 0; i < op.vgrid->nr(); ++i)
        for (int j = 0; j < op.vgrid->nt(); ++j) {
            int nidx = op.vgrid->idx(i, j);
            int row = op.nu + nidx;
            double x, y;
            geometry::node_xy(*op.vgrid, i, j, x, y);
            double wv = op.w(row);
            double v = vfield.v(nidx);
            double ueps = ufield.eval(epsilon * x, epsilon * y);
            double alpha_sum = 0;
            for (int ii = 2; ii <= p.m; ++ii) {
                double vr = vrot[ii - 1].v(nidx);
                alpha_sum += vr * vr;
                // -2 alpha v(y) v(Rhat_i y) psi(Rhat_i y): re-indexed column
                double shift = 2.0 * PI * (ii - 1) / (p.m * p.k) / op.vgrid->dtheta;
                int si = (int)std::lround(shift);
                int col = op.vgrid->idx(i, op.vgrid->fold_j(j - si));
                T.emplace_back(row, op.nu + col, wv * (-2.0 * p.alpha * v * vr));
            }
            double c = Wpot(epsilon * std::hypot(x, y)) - 3.0 * p.mu2 * v * v -
                       p.beta * ueps * ueps - p.alpha * alpha_sum;
            T.emplace_back(row, row, wv * c);
            // phi coupling at eps*y
            detail::interp_weights(*op.ugrid, epsilon * x, epsilon * y, iw);
            for (auto& [col, wgt] : iw)
                T.emplace_back(row, col, wv * (-2.0 * p.beta * v * ueps) * wgt);
        }

    op.A.resize(n, n);
    op.A.setFromTriplets(T.begin(), T.end());
    return op;
}

// smallest singular value of the coupled operator restricted to the kernel
// complement {(phi,psi): <psi, Z> = 0}, in the cell-measure inner products.
// Power iteration on the inverse Gram operator through bordered LU solves of
// the symmetrically scaled matrix and its transpose.
inline double estimate_coercivity(const CoupledOperator& op, const KernelBasis& kb,
                                  int iters = 60) {
    const int n = op.nu + op.nv;
    Eigen::VectorXd s = op.w.cwiseSqrt();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c.tail(op.nv) = s.tail(op.nv).cwiseProduct(kb.z.v);
    c /= c.norm();
    // symmetric scaling: Atil = S^{-1} A S^{-1} represents the operator in
    // orthonormal nodal coordinates (A is the weighted form)
    std::vector<Triplet> T, Tt;
    for (int kk = 0; kk < op.A.outerSize(); ++kk)
        for (SpMat::InnerIterator it(op.A, kk); it; ++it) {
            double val = it.value() / (s(it.row()) * s(it.col()));
            T.emplace_back((int)it.row(), (int)it.col(), val);
            Tt.emplace_back((int)it.col(), (int)it.row(), val);
        }
    for (int i = 0; i < n; ++i) {
        T.emplace_back(i, n, c(i));
        T.emplace_back(n, i, c(i));
        Tt.emplace_back(i, n, c(i));
        Tt.emplace_back(n, i, c(i));
    }
    SpMat M(n + 1, n + 1), Mt(n + 1, n + 1);
    M.setFromTriplets(T.begin(), T.end());
    Mt.setFromTriplets(Tt.begin(), Tt.end());
    Eigen::SparseLU<SpMat> lu(M), lut(Mt);
    if (lu.info() != Eigen::Success || lut.info() != Eigen::Success)
        throw NumericalError("estimate_coercivity: bordered factorization failed");
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    x -= c * c.dot(x);
    x /= x.norm();
    double lam = 0, prev = 0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd b(n + 1);
        b.head(n) = x - c * c.dot(x);
        b(n) = 0.0;
        Eigen::VectorXd y1 = lut.solve(b);  // R^{-T} x
        b.head(n) = y1.head(n);
        b(n) = 0.0;
        Eigen::VectorXd y2 = lu.solve(b);   // R^{-1} R^{-T} x
        Eigen::VectorXd y = y2.head(n);
        y -= c * c.dot(y);
        double nn = y.norm();
        if (nn < 1e-300) throw NumericalError("estimate_coercivity: iteration collapsed");
        lam = nn;  // Rayleigh growth factor of (R R^T)^{-1}
        x = y / nn;
        if (it > 8 && std::abs(lam - prev) < 1e-10 * lam) break;
        prev = lam;
    }
    return 1.0 / std::sqrt(lam);
}

}  // namespace polybump::elliptic
