#pragma once
// Planar rotations, polygon peak configurations, and symmetry-reduced
// polar-sector grids/fields.  The discrete symmetry group is the dihedral
// group of order 2k (rotation by 2pi/k plus evenness in each coordinate);
// its fundamental domain is the sector theta in [0, pi/k].

#include "common.hpp"
#include "radial.hpp"

#include <array>
#include <memory>

namespace polybump::geometry {

using Pt = std::array<double, 3>;

inline double norm2d(const Pt& p) { return std::hypot(p[0], p[1]); }
inline double dist(const Pt& a, const Pt& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                     (a[2] - b[2]) * (a[2] - b[2]));
}

// (x1,x2) -> (x1 cos t + x2 sin t, -x1 sin t + x2 cos t): rotation by -t in the
// usual orientation, identity on x3.
struct Rotation {
    double theta = 0;
    int dim = 2;
    Pt apply(const Pt& p) const {
        double c = std::cos(theta), s = std::sin(theta);
        return {p[0] * c + p[1] * s, -p[0] * s + p[1] * c, p[2]};
    }
    Rotation compose(const Rotation& o) const { return {theta + o.theta, dim}; }
};

// R-hat_i = R_{2pi(i-1)/(mk)}, i = 1..m
inline Rotation rhat(int i, int m, int k, int dim = 2) {
    return {2.0 * PI * (i - 1) / (m * k), dim};
}

struct PeakConfiguration {
    double rho = 1, epsilon = 1;
    int k = 2, m = 1;
    std::vector<Pt> peaks;                      // P_j, j=1..k
    std::vector<std::vector<Pt>> rotated_peaks; // [i-1][j-1] = P_{ji} = R_{-2pi(i-1)/(mk)} P_j
    double min_sep_scaled = 0;

    // all bump centers of the combined field sum_i U_{rho,eps}(R-hat_i y), in y-units
    std::vector<Pt> all_centers_scaled() const {
        std::vector<Pt> out;
        for (auto& row : rotated_peaks)
            for (auto& p : row) out.push_back({p[0] / epsilon, p[1] / epsilon, p[2] / epsilon});
        return out;
    }
    std::vector<Pt> centers_scaled() const {
        std::vector<Pt> out;
        for (auto& p : peaks) out.push_back({p[0] / epsilon, p[1] / epsilon, p[2] / epsilon});
        return out;
    }
};

inline PeakConfiguration build_peaks(double rho, double epsilon, int k, int m) {
    if (rho <= 0 || epsilon <= 0) throw ConfigError("build_peaks: rho, epsilon must be positive");
    if (k < 2 || k % 2) throw ConfigError("build_peaks: k must be even");
    if (m < 1) throw ConfigError("build_peaks: m must be >= 1");
    PeakConfiguration c;
    c.rho = rho;
    c.epsilon = epsilon;
    c.k = k;
    c.m = m;
    for (int j = 1; j <= k; ++j) {
        double a = 2.0 * PI * (j - 1) / k;
        c.peaks.push_back({rho * std::cos(a), rho * std::sin(a), 0.0});
    }
    for (int i = 1; i <= m; ++i) {
        Rotation R{-2.0 * PI * (i - 1) / (m * k), 2};
        std::vector<Pt> row;
        for (auto& p : c.peaks) row.push_back(R.apply(p));
        c.rotated_peaks.push_back(std::move(row));
    }
    // brute-force minimum pairwise distance over all bump centers
    std::vector<Pt> all;
    for (auto& row : c.rotated_peaks)
        for (auto& p : row) all.push_back(p);
    double mn = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < all.size(); ++a)
        for (size_t b = a + 1; b < all.size(); ++b) mn = std::min(mn, dist(all[a], all[b]));
    c.min_sep_scaled = mn / epsilon;
    return c;
}

// ---------------------------------------------------------------------------

struct SectorGrid {
    int k = 2, m = 1;
    double R_out = 10;
    std::vector<double> r;   // radial nodes, r[0] > 0 (half-spacing offset from center)
    int n_theta = 16;        // angular cells; nodes j=0..n_theta, dtheta = (pi/k)/n_theta
    double dtheta = 0;
    double robin_rate = 1;   // outflow -du/dn = robin_rate * u at R_out

    int nr() const { return (int)r.size(); }
    int nt() const { return n_theta + 1; }
    int idx(int i, int j) const { return i * nt() + j; }
    int size() const { return nr() * nt(); }
    double sector_angle() const { return PI / k; }

    // angular index fold over the dihedral extension (period 2 n_theta)
    int fold_j(int jj) const {
        int p = ((jj % (2 * n_theta)) + 2 * n_theta) % (2 * n_theta);
        return p > n_theta ? 2 * n_theta - p : p;
    }

    std::vector<double> weights;  // quadrature weight per node, sector measure r dr dtheta

    void build_weights() {
        weights.assign(size(), 0.0);
        int N = nr();
        for (int i = 0; i < N; ++i) {
            double clo = i == 0 ? 0.0 : 0.5 * (r[i - 1] + r[i]);
            double chi = i == N - 1 ? R_out : 0.5 * (r[i] + r[i + 1]);
            double wr = 0.5 * (chi * chi - clo * clo);
            for (int j = 0; j <= n_theta; ++j) {
                double wt = (j == 0 || j == n_theta) ? 0.5 * dtheta : dtheta;
                weights[idx(i, j)] = wr * wt;
            }
        }
    }
};

// Graded radial mesh: spacing h_fine inside [band_lo, band_hi], growing
// linearly with the distance to the band elsewhere (capped at h_max).
inline std::shared_ptr<SectorGrid> make_sector_grid(int k, int m, double R_out, double h_fine,
                                                    double band_lo, double band_hi,
                                                    int n_theta, double robin_rate,
                                                    double h_max = 0.0) {
    if ((2 * n_theta) % m != 0)
        throw ConfigError("make_sector_grid: 2*n_theta must be divisible by m "
                          "(group-aligned rotations need mesh-aligned angles)");
    auto g = std::make_shared<SectorGrid>();
    g->k = k;
    g->m = m;
    g->R_out = R_out;
    g->n_theta = n_theta;
    g->dtheta = (PI / k) / n_theta;
    g->robin_rate = robin_rate;
    if (h_max == 0.0) h_max = std::max(4 * h_fine, R_out / 100.0);
    const double grow = 0.35;  // spacing growth per unit distance from the band
    double rr = 0.0;
    bool first = true;
    while (rr < R_out - 1e-12) {
        double d = 0.0;
        if (rr < band_lo) d = band_lo - rr;
        else if (rr > band_hi) d = rr - band_hi;
        double h = std::min(h_max, h_fine + grow * d);
        if (rr < band_lo && rr + h > band_lo) h = band_lo - rr + 1e-14;
        if (rr + h > R_out) h = R_out - rr;
        if (first) {
            rr = 0.5 * h;  // half-spacing offset: no node at the coordinate center
            first = false;
        } else {
            rr += h;
        }
        g->r.push_back(std::min(rr, R_out));
        if (R_out - rr < 1e-12) break;
    }
    if ((int)g->r.size() < 4) throw ConfigError("make_sector_grid: degenerate radial mesh");
    g->build_weights();
    return g;
}

struct SectorField {
    std::shared_ptr<const SectorGrid> grid;
    Eigen::VectorXd v;

    SectorField() = default;
    explicit SectorField(std::shared_ptr<const SectorGrid> g)
        : grid(std::move(g)), v(Eigen::VectorXd::Zero(grid->size())) {}

    double& at(int i, int j) { return v(grid->idx(i, j)); }
    double at(int i, int j) const { return v(grid->idx(i, j)); }

    double sup_norm() const { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

    // integral over the full plane = 2k copies of the sector
    double integral() const {
        double s = 0;
        for (int n = 0; n < grid->size(); ++n) s += grid->weights[n] * v(n);
        return 2.0 * grid->k * s;
    }
    double l2_norm() const {
        double s = 0;
        for (int n = 0; n < grid->size(); ++n) s += grid->weights[n] * v(n) * v(n);
        return std::sqrt(2.0 * grid->k * s);
    }

    // value at an arbitrary plane point, via dihedral fold + bilinear interpolation;
    // exponential continuation beyond R_out (consistent with the Robin condition)
    double eval(double x, double y) const {
        const SectorGrid& g = *grid;
        double rr = std::hypot(x, y);
        double s = fold_angle(std::atan2(y, x));
        double jt = s / g.dtheta;
        int j0 = std::min((int)jt, g.n_theta - 1);
        double tw = jt - j0;
        auto ray = [&](int j) { return radial_line(rr, j); };
        return (1 - tw) * ray(j0) + tw * ray(j0 + 1);
    }

    double fold_angle(double phi) const {
        const SectorGrid& g = *grid;
        double period = 2.0 * PI / g.k;
        double t = std::fmod(phi, period);
        if (t < 0) t += period;
        if (t > 0.5 * period) t = period - t;
        return t;
    }

  private:
    double radial_line(double rr, int j) const {
        const SectorGrid& g = *grid;
        const auto& R = g.r;
        int N = g.nr();
        if (rr <= R[0]) return at(0, j);  // flat across the center, error O(r0^2)
        if (rr >= R[N - 1])
            return at(N - 1, j) * std::exp(-g.robin_rate * (rr - R[N - 1]));
        auto it = std::upper_bound(R.begin(), R.end(), rr);
        int i = (int)(it - R.begin()) - 1;
        double t = (rr - R[i]) / (R[i + 1] - R[i]);
        return (1 - t) * at(i, j) + t * at(i + 1, j);
    }

  public:
    SectorField& operator+=(const SectorField& o) { v += o.v; return *this; }
    SectorField& operator-=(const SectorField& o) { v -= o.v; return *this; }
    SectorField& operator*=(double c) { v *= c; return *this; }
};

// nodal coordinates helper
inline void node_xy(const SectorGrid& g, int i, int j, double& x, double& y) {
    double th = j * g.dtheta;
    x = g.r[i] * std::cos(th);
    y = g.r[i] * std::sin(th);
}

// Field of f(x1, x2) sampled at the nodes.
template <class F>
SectorField nodal_field(std::shared_ptr<const SectorGrid> g, F&& f) {
    SectorField out(g);
    for (int i = 0; i < g->nr(); ++i)
        for (int j = 0; j < g->nt(); ++j) {
            double x, y;
            node_xy(*g, i, j, x, y);
            out.at(i, j) = f(x, y);
        }
    return out;
}

// sum of radial bumps U(|y - c|) over the given centers
inline SectorField assemble_bumps(std::shared_ptr<const SectorGrid> g,
                                  const radial::RadialProfile& U, const std::vector<Pt>& centers) {
    for (auto& c : centers)
        if (norm2d(c) > g->R_out)
            throw ConfigError("assemble_bumps: R_out too small, peak outside grid");
    return nodal_field(g, [&](double x, double y) {
        double s = 0;
        for (auto& c : centers) s += U.value(std::hypot(x - c[0], y - c[1]));
        return s;
    });
}

inline SectorField assemble_sum_of_bumps(const radial::RadialProfile& U,
                                         const PeakConfiguration& cfg,
                                         std::shared_ptr<const SectorGrid> g) {
    return assemble_bumps(g, U, cfg.centers_scaled());
}

// f composed with R-hat_i.  Exact angular re-indexing when the rotation angle
// is a mesh multiple; cubic angular interpolation otherwise.
inline SectorField rotate_field(const SectorField& f, int i) {
    const SectorGrid& g = *f.grid;
    double phi = 2.0 * PI * (i - 1) / (g.m * g.k);
    double shift = phi / g.dtheta;
    SectorField out(f.grid);
    long si = std::lround(shift);
    if (std::abs(shift - si) < 1e-9) {
        for (int ir = 0; ir < g.nr(); ++ir)
            for (int j = 0; j < g.nt(); ++j)
                out.at(ir, j) = f.at(ir, g.fold_j(j - (int)si));
        return out;
    }
    // non-aligned: Catmull-Rom in the angular index
    for (int ir = 0; ir < g.nr(); ++ir)
        for (int j = 0; j < g.nt(); ++j) {
            double pos = j - shift;
            int j1 = (int)std::floor(pos);
            double t = pos - j1;
            double p0 = f.at(ir, g.fold_j(j1 - 1)), p1 = f.at(ir, g.fold_j(j1)),
                   p2 = f.at(ir, g.fold_j(j1 + 1)), p3 = f.at(ir, g.fold_j(j1 + 2));
            out.at(ir, j) = p1 + 0.5 * t * (p2 - p0 +
                             t * (2 * p0 - 5 * p1 + 4 * p2 - p3 + t * (3 * (p1 - p2) + p3 - p0)));
        }
    return out;
}

}  // namespace polybump::geometry
