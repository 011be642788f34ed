#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sg/activation.hpp"
#include "sg/linalg.hpp"

using namespace sg;

namespace {

// central finite differences as the independent oracle
double fd1(const Activation& a, double x, double h = 1e-5) {
    return (a.f(x + h) - a.f(x - h)) / (2 * h);
}
double fd2(const Activation& a, double x, double h = 1e-4) {
    return (a.f(x + h) - 2 * a.f(x) + a.f(x - h)) / (h * h);
}
double fd3(const Activation& a, double x, double h = 1e-3) {
    return (a.f(x + 2 * h) - 2 * a.f(x + h) + 2 * a.f(x - h) - a.f(x - 2 * h)) /
           (2 * h * h * h);
}

void check_derivatives(ActKind kind) {
    Activation a{kind};
    SeededRng rng(31 + static_cast<int>(kind));
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-4.0, 4.0);
        CHECK(a.d1(x) == doctest::Approx(fd1(a, x)).epsilon(1e-7));
        CHECK(a.d2(x) == doctest::Approx(fd2(a, x)).epsilon(1e-5).scale(1.0));
        CHECK(a.d3(x) == doctest::Approx(fd3(a, x)).epsilon(1e-4).scale(1.0));
    }
}

}  // namespace

TEST_CASE("tanh derivatives match finite differences") { check_derivatives(ActKind::Tanh); }
TEST_CASE("silu derivatives match finite differences") { check_derivatives(ActKind::Silu); }

TEST_CASE("identity activation is exactly linear") {
    Activation a{ActKind::Identity};
    CHECK(a.f(3.7) == 3.7);
    CHECK(a.d1(-2.0) == 1.0);
    CHECK(a.d2(1.0) == 0.0);
    CHECK(a.d3(1.0) == 0.0);
}

TEST_CASE("known point values") {
    Activation t{ActKind::Tanh};
    CHECK(t.f(0.0) == 0.0);
    CHECK(t.d1(0.0) == 1.0);
    CHECK(t.d2(0.0) == 0.0);
    CHECK(t.d3(0.0) == doctest::Approx(-2.0));

    Activation s{ActKind::Silu};
    CHECK(s.f(0.0) == 0.0);
    CHECK(s.d1(0.0) == doctest::Approx(0.5));
}

TEST_CASE("default gains") {
    CHECK(Activation{ActKind::Tanh}.default_gain() == doctest::Approx(5.0 / 3.0));
    CHECK(Activation{ActKind::Silu}.default_gain() == 1.0);
    CHECK(Activation{ActKind::Identity}.default_gain() == 1.0);
}

TEST_CASE("string round trip") {
    for (ActKind k : {ActKind::Tanh, ActKind::Silu, ActKind::Identity})
        CHECK(act_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(act_kind_from_string("relu"), ConfigError);
}
