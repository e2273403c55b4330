#include <doctest.h>

#include "ldlab/errors.hpp"
#include "ldlab/quadrature.hpp"

#include <cmath>
#include <numbers>

using namespace ldlab;

TEST_CASE("polynomial and smooth integrals") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0).value == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value ==
          doctest::Approx(2.0).epsilon(1e-13));
    // reversed limits flip the sign
    CHECK(integrate([](double x) { return x; }, 1.0, 0.0).value == doctest::Approx(-0.5));
}

TEST_CASE("infinite ranges") {
    const double half_line = integrate([](double x) { return std::exp(-x); }, 0.0, INFINITY).value;
    CHECK(half_line == doctest::Approx(1.0).epsilon(1e-12));
    const double gauss = integrate([](double x) { return std::exp(-0.5 * x * x); }, -INFINITY, INFINITY).value;
    CHECK(gauss == doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));
    const double left = integrate([](double x) { return std::exp(x); }, -INFINITY, 0.0).value;
    CHECK(left == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("power substitution tames endpoint singularities") {
    // int_0^1 x^{-1/2} (1-x)^{-1/2} dx = pi
    const auto f = [](double x) { return 1.0 / std::sqrt(x * (1.0 - x)); };
    QuadratureConfig cfg;
    const QuadResult r = integrate(f, 0.0, 1.0, cfg, {0.5, 0.5});
    CHECK(r.value == doctest::Approx(std::numbers::pi).epsilon(1e-12));

    // int_0^1 x^{-0.9} = 10, substitution on the left only
    const QuadResult r2 = integrate([](double x) { return std::pow(x, -0.9); }, 0.0, 1.0, cfg, {0.1, 1.0});
    CHECK(r2.value == doctest::Approx(10.0).epsilon(1e-11));

    // half line with singular finite end
    const QuadResult r3 = integrate([](double x) { return std::exp(-x) / std::sqrt(x); }, 0.0, INFINITY,
                                    cfg, {0.5, 1.0});
    CHECK(r3.value == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-11));
}

TEST_CASE("breakpoints at kinks") {
    const auto f = [](double x) { return std::fabs(x - 0.3); };
    const double bp[] = {0.3};
    const QuadResult r = integrate(f, 0.0, 1.0, {}, {}, bp);
    CHECK(r.value == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-14));
    CHECK(r.subdivisions == 0);
}

TEST_CASE("non-convergence is reported") {
    QuadratureConfig cfg;
    cfg.max_subdivisions = 2;
    const auto wild = [](double x) { return std::sin(1.0 / x) / x; };
    CHECK_THROWS_AS(integrate(wild, 1e-4, 1.0, cfg), ConvergenceError);
    cfg.abs_tol = 0.0;
    CHECK_THROWS_AS(integrate(wild, 0.1, 1.0, cfg), InvalidArgument);
}
