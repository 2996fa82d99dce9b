#pragma once
// Shadow potential omega = W - beta*Y^2: value and Laplacian at the origin,
// and the sign-condition admissibility classification.

#include "params.hpp"
#include "radial.hpp"

namespace polybump::shadow {

enum class Classification {
    AlphaZeroAdmissible,  // alpha = 0, Laplacian of omega at 0 negative
    AttractiveBranch,    // alpha > 0 required (needs lap_omega0 < 0)
    RepulsiveBranch,     // alpha < 0 required (needs lap_omega0 > 0)
    Inadmissible,
};

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::AlphaZeroAdmissible: return "alpha-zero-admissible";
        case Classification::AttractiveBranch: return "attractive-branch";
        case Classification::RepulsiveBranch: return "repulsive-branch";
        case Classification::Inadmissible: return "inadmissible";
    }
    return "?";
}

struct ShadowPotential {
    radial::RadialProfile Y;      // ground state of -DY + VY = mu1 Y^3
    params::PotentialSpec W;
    double beta = -1;
    int dim = 2;
    double omega0 = 0;            // W(0) - beta*Y(0)^2
    double lap_omega0 = 0;        // N * omega''(0) by radial isotropy
    double lap_omega0_fd = 0;     // 5-point stencil cross-check
    Classification classification = Classification::Inadmissible;

    double omega(double r) const {
        double y = Y.value(r);
        return W(r) - beta * y * y;
    }
};

// c_n of the Hessian isotropy d11 f(0) = c_n * Lap f(0) for smooth radial f.
inline double c_n(int dim) { return 1.0 / dim; }

inline double second_radial_derivative_at_0(const std::function<double(double)>& f, double h) {
    // 5-point even-extension stencil: f(-h)=f(h)
    return (-30.0 * f(0.0) + 32.0 * f(h) - 2.0 * f(2 * h)) / (12.0 * h * h);
}

inline ShadowPotential compute_shadow(const params::SystemParams& p,
                                      const params::PotentialSpec& V,
                                      const params::PotentialSpec& W) {
    ShadowPotential s;
    s.W = W;
    s.beta = p.beta;
    s.dim = p.dim;
    s.Y = radial::solve_ground_state_fn([&V](double r) { return V(r); }, p.mu1, p.dim,
                                        V(1e6) > 0 ? V(1e6) : V.floor);
    double y0 = s.Y.u0();
    s.omega0 = W(0.0) - p.beta * y0 * y0;
    if (s.omega0 <= 0) {
        s.classification = Classification::Inadmissible;
        return s;
    }
    // Lap omega(0) = Lap W(0) - 2 beta (|grad Y(0)|^2 + Y(0) Lap Y(0)), grad Y(0)=0.
    // Lap Y(0) from the equation: Lap Y(0) = V(0)Y(0) - mu1 Y(0)^3.
    double lapW0 = p.dim * second_radial_derivative_at_0([&W](double r) { return W(r); }, 1e-3);
    double lapY0 = V(0.0) * y0 - p.mu1 * y0 * y0 * y0;
    s.lap_omega0 = lapW0 - 2.0 * p.beta * y0 * lapY0;
    // independent finite-difference check on the sampled omega itself
    s.lap_omega0_fd = p.dim * second_radial_derivative_at_0(
        [&s](double r) { return s.omega(r); }, 5e-3);
    // classification for the given alpha
    if (p.alpha == 0.0)
        s.classification = s.lap_omega0 < 0 ? Classification::AlphaZeroAdmissible
                                            : Classification::Inadmissible;
    else if (p.alpha * s.lap_omega0 < 0)
        s.classification = p.alpha > 0 ? Classification::AttractiveBranch
                                       : Classification::RepulsiveBranch;
    else
        s.classification = Classification::Inadmissible;
    return s;
}

inline Classification classify(const ShadowPotential& s, double alpha, double tol = 1e-10) {
    if (s.omega0 <= 0) return Classification::Inadmissible;
    if (std::abs(s.lap_omega0) < tol)
        throw HypothesisError("degenerate sign condition: Lap omega(0) = 0 within tolerance");
    if (alpha == 0.0)
        return s.lap_omega0 < 0 ? Classification::AlphaZeroAdmissible : Classification::Inadmissible;
    if (alpha * s.lap_omega0 < 0)
        return alpha > 0 ? Classification::AttractiveBranch : Classification::RepulsiveBranch;
    return Classification::Inadmissible;
}

}  // namespace polybump::shadow
