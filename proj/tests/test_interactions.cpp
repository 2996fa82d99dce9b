#include "polybump/interactions.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace polybump;
using namespace polybump::interactions;

static radial::RadialProfile& ref1() {
    static radial::RadialProfile P = radial::solve_ground_state(1.0, 1.0, 1);
    return P;
}
static radial::RadialProfile& ref2() {
    static radial::RadialProfile P = radial::solve_ground_state(1.0, 1.0, 2);
    return P;
}

TEST_CASE("pair integral analytic check: int U^2 = 4 in 1D") {
    auto u = shape_of(ref1());
    double v = pair_integral(u, u, {0, 0, 0}, 1, 0.005);
    CHECK_THAT(v, Catch::Matchers::WithinRel(4.0, 1e-8));
}

TEST_CASE("pair integral rotational symmetry in 2D") {
    auto u = shape_of(ref2());
    double a = pair_integral(u, u, {8.0, 0, 0}, 2, 0.05);
    double b = pair_integral(u, u, {0, 8.0, 0}, 2, 0.05);
    CHECK_THAT(a, Catch::Matchers::WithinRel(b, 1e-7));
    // xi -> -xi invariance
    double c = pair_integral(u, u, {-8.0, 0, 0}, 2, 0.05);
    CHECK_THAT(a, Catch::Matchers::WithinRel(c, 1e-12));
}

TEST_CASE("pair integral resolution doubling agrees") {
    auto u = shape_of(ref2());
    double a = pair_integral(u, u, {6.0, 0, 0}, 2, 0.06);
    double b = pair_integral(u, u, {6.0, 0, 0}, 2, 0.03);
    CHECK_THAT(a, Catch::Matchers::WithinRel(b, 1e-6));
}

TEST_CASE("theta integral structure") {
    ThetaQuery q;
    q.Uref = &ref2();
    q.s = 2;
    q.t = 1;
    q.dim = 2;
    SECTION("zero at xi=0 and on the x2-axis, exactly") {
        CHECK(theta_integral(q, {0, 0, 0}) == 0.0);
        CHECK(theta_integral(q, {0, 7.0, 0}) == 0.0);
    }
    SECTION("antisymmetric under xi1 negation, exactly at the node level") {
        double a = theta_integral(q, {5.0, 2.0, 0});
        double b = theta_integral(q, {-5.0, 2.0, 0});
        CHECK(a == -b);
        CHECK(a != 0.0);
    }
    SECTION("sign follows xi1") {
        // bump of U^t ahead of the offset: moving mass toward -xi gives sign
        double a = theta_integral(q, {6.0, 0, 0});
        double b = theta_integral(q, {-6.0, 0, 0});
        CHECK(a * b < 0);
    }
}

TEST_CASE("asymptotic fit: ground-state pair in 2D, b=b' case") {
    auto u = shape_of(ref2());
    std::vector<double> xis, vals;
    for (double R = 10.0; R <= 24.0; R += 1.0) {
        xis.push_back(R);
        vals.push_back(pair_integral(u, u, {R, 0, 0}, 2, 0.05));
    }
    AsymptoticFit f = fit_asymptotics(xis, vals);
    // a = a' = -(N-1)/2 = -1/2, b = b' = 1: predicted power a+a'+(N+1)/2 = 1/2
    CHECK(rel_err(f.exp_rate, 1.0) < 0.02);
    CHECK_THAT(f.poly_power, Catch::Matchers::WithinAbs(0.5, 0.15));
    CHECK(f.r2 > 0.999);
}

TEST_CASE("synthetic profiles: b < b' regime") {
    auto u = synthetic(-1.0, 1.0);
    auto v = synthetic(0.0, 1.6);
    std::vector<double> xis, vals;
    for (double R = 10.0; R <= 24.0; R += 1.0) {
        xis.push_back(R);
        vals.push_back(pair_integral(u, v, {R, 0, 0}, 2, 0.05));
    }
    AsymptoticFit f = fit_asymptotics(xis, vals);
    CHECK(rel_err(f.exp_rate, 1.0) < 0.02);
    CHECK_THAT(f.poly_power, Catch::Matchers::WithinAbs(-1.0, 0.15));
}

TEST_CASE("synthetic profiles: all three b=b' sub-cases (N=2)") {
    // a = 0 against a' in {0, -(N+1)/2, -(N+2)}
    struct Case { double ap; double expect_power; bool log_case; };
    for (Case c : {Case{0.0, 1.5, false}, Case{-1.5, 0.0, true}, Case{-4.0, 0.0, false}}) {
        auto u = synthetic(0.0, 1.0);
        auto v = synthetic(c.ap, 1.0);
        std::vector<double> xis, vals;
        for (double R = 10.0; R <= 24.0; R += 1.0) {
            xis.push_back(R);
            vals.push_back(pair_integral(u, v, {R, 0, 0}, 2, 0.05));
        }
        AsymptoticFit f = fit_asymptotics(xis, vals);
        auto pred = predict_pair(0.0, 1.0, c.ap, 1.0, 2);
        CHECK(rel_err(f.exp_rate, pred.rate) < 0.02);
        CHECK(pred.power == c.expect_power);
        CHECK(pred.log_factor == c.log_case);
        if (!c.log_case) {
            CHECK_THAT(f.poly_power, Catch::Matchers::WithinAbs(c.expect_power, 0.15));
        } else {
            // the hidden log factor inflates a free power fit; the log-model
            // comparison should prefer the log term
            CHECK(f.log_model_preferred);
        }
    }
}

TEST_CASE("theta fit: s<t rate s*sqrt(lambda)") {
    ThetaQuery q;
    q.Uref = &ref2();
    q.s = 1;
    q.t = 3;
    q.dim = 2;
    q.h_factor = 0.05;
    std::vector<double> xis, vals;
    for (double R = 10.0; R <= 24.0; R += 1.0) {
        xis.push_back(R);
        vals.push_back(theta_integral(q, {R, 0, 0}));
    }
    AsymptoticFit f = fit_asymptotics(xis, vals);
    CHECK(rel_err(f.exp_rate, 1.0) < 0.02);  // s*sqrt(lambda) = 1
    CHECK_THAT(f.poly_power, Catch::Matchers::WithinAbs(-0.5, 0.15));  // -s(N-1)/2
    // sign tracks xi1/|xi|: consistent sign along the sweep, flips with xi1
    for (size_t i = 1; i < vals.size(); ++i) CHECK(vals[i] * vals[0] > 0);
    CHECK(theta_integral(q, {-12.0, 0, 0}) * theta_integral(q, {12.0, 0, 0}) < 0);
}

TEST_CASE("theta fit: N=1, s=t power +1") {
    ThetaQuery q;
    q.Uref = &ref1();
    q.s = 1;
    q.t = 1;
    q.dim = 1;
    q.h_factor = 0.04;
    std::vector<double> xis, vals;
    for (double R = 10.0; R <= 24.0; R += 1.0) {
        xis.push_back(R);
        vals.push_back(theta_integral(q, {R, 0, 0}));
    }
    AsymptoticFit f = fit_asymptotics(xis, vals);
    CHECK(rel_err(f.exp_rate, 1.0) < 0.02);
    CHECK_THAT(f.poly_power, Catch::Matchers::WithinAbs(1.0, 0.15));
}

TEST_CASE("3D reduction consistency") {
    // same |xi|: N=3 pair integral is rotation invariant by construction; check
    // against a coarse direct interpretation via two different axis choices
    auto u = shape_of(ref2());  // any radial shape works for the reduction
    double a = pair_integral(u, u, {7.0, 0, 0}, 3, 0.05);
    double b = pair_integral(u, u, {0, 7.0, 0}, 3, 0.05);
    CHECK_THAT(a, Catch::Matchers::WithinRel(b, 1e-12));
    ThetaQuery q;
    q.Uref = &ref2();
    q.s = 1;
    q.t = 2;
    q.dim = 3;
    CHECK(theta_integral(q, {0, 7.0, 0}) == 0.0);  // cos factor vanishes
    double t1 = theta_integral(q, {7.0, 0, 0});
    double t2 = theta_integral(q, {7.0 / std::sqrt(2.0), 7.0 / std::sqrt(2.0), 0});
    // |theta| scales with the cos factor at fixed |xi|
    CHECK_THAT(t2, Catch::Matchers::WithinRel(t1 / std::sqrt(2.0), 1e-10));
}

TEST_CASE("fit rejects non-monotone samples") {
    std::vector<double> xis{10, 11, 12, 13, 14, 15};
    std::vector<double> vals{1e-3, 1e-4, 2e-4, 1e-5, 1e-6, 1e-7};
    CHECK_THROWS_AS(fit_asymptotics(xis, vals), NumericalError);
}
