#include "polybump/params.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <sstream>

using namespace polybump;
using namespace polybump::params;

TEST_CASE("validate accepts the baseline two-component setup") {
    SystemParams p;  // mu1=mu2=1, beta=-1, alpha=0, m=1, k=2, dim=2
    PotentialSpec V, W;
    auto rep = validate(p, V, W);
    CHECK(rep.pass);
    CHECK(rep.failures.empty());
    REQUIRE_FALSE(rep.deferred.empty());
}

TEST_CASE("validate rejects bad parameter combinations") {
    PotentialSpec V, W;
    SystemParams p;
    SECTION("odd k") {
        p.k = 3;
        CHECK_FALSE(validate(p, V, W).pass);
    }
    SECTION("m=2 with alpha=0 and no override") {
        p.m = 2;
        CHECK_FALSE(validate(p, V, W).pass);
        p.allow_alpha_zero_multi = true;
        CHECK(validate(p, V, W).pass);
    }
    SECTION("m=1 with alpha nonzero") {
        p.alpha = 0.3;
        CHECK_FALSE(validate(p, V, W).pass);
    }
    SECTION("nonnegative beta on a full run") {
        p.beta = 0.5;
        CHECK_FALSE(validate(p, V, W).pass);
        CHECK(validate(p, V, W, /*full_run=*/false).pass);
    }
    SECTION("nonpositive floor") {
        V.floor = 0.0;
        CHECK_FALSE(validate(p, V, W).pass);
    }
}

TEST_CASE("validate is pure") {
    SystemParams p;
    p.k = 3;
    PotentialSpec V, W;
    auto a = validate(p, V, W), b = validate(p, V, W);
    CHECK(a.pass == b.pass);
    CHECK(a.failures == b.failures);
}

static Config sample_config() {
    Config c;
    c.sys.mu1 = 1.25;
    c.sys.mu2 = 0.75;
    c.sys.beta = -0.1234567890123456;
    c.sys.epsilon = 0.037;
    c.sys.k = 4;
    c.V.kind = PotentialKind::GaussianBump;
    c.V.parameters = {1.0, 0.5, 2.0};
    c.V.floor = 1.0;
    c.W.kind = PotentialKind::Constant;
    c.W.parameters = {2.0};
    c.W.floor = 2.0;
    c.run.epsilon_sweep = {0.1, 0.05, 0.025};
    c.run.output_dir = "artifacts";
    return c;
}

TEST_CASE("config serialization round-trips bit-exactly") {
    Config c = sample_config();
    std::istringstream in(serialize_config(c));
    Config d = parse_config(in);
    CHECK(d.sys.mu1 == c.sys.mu1);
    CHECK(d.sys.beta == c.sys.beta);
    CHECK(d.sys.epsilon == c.sys.epsilon);
    CHECK(d.V.parameters == c.V.parameters);
    CHECK(d.W.parameters == c.W.parameters);
    CHECK(d.run.epsilon_sweep == c.run.epsilon_sweep);
    CHECK(serialize_config(d) == serialize_config(c));
}

TEST_CASE("unknown keys and malformed input are hard errors") {
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return parse_config(in);
    };
    CHECK_THROWS_AS(parse("[system]\nnot_a_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[nope]\nmu1 = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nnewton_tol = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nepsilon_sweep = 0.1,0.2\n"), ConfigError);
    CHECK_THROWS_AS(parse("mu1 = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[system]\nmu1 = abc\n"), ConfigError);
    CHECK_NOTHROW(parse("[system]\nmu1 = 2.0  # comment\n"));
}

TEST_CASE("potential evaluation families") {
    PotentialSpec g;
    g.kind = PotentialKind::GaussianBump;
    g.parameters = {1.0, 2.0, 3.0};
    CHECK_THAT(g(0.0), Catch::Matchers::WithinAbs(3.0, 1e-14));
    CHECK_THAT(g(3.0), Catch::Matchers::WithinAbs(1.0 + 2.0 * std::exp(-1.0), 1e-14));

    PotentialSpec p;
    p.kind = PotentialKind::PolynomialRadial;
    p.parameters = {1.0, 0.5};  // 1 + 0.5 r^2
    CHECK_THAT(p(2.0), Catch::Matchers::WithinAbs(3.0, 1e-14));

    PotentialSpec t;
    t.kind = PotentialKind::TabulatedRadial;
    t.parameters = {0.0, 1.0, 1.0, 3.0, 2.0, 2.0};
    CHECK_THAT(t(0.5), Catch::Matchers::WithinAbs(2.0, 1e-14));
    CHECK_THAT(t(1.5), Catch::Matchers::WithinAbs(2.5, 1e-14));
    CHECK_THAT(t(9.0), Catch::Matchers::WithinAbs(2.0, 1e-14));
}
