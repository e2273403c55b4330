#include <doctest.h>

#include "ldlab/bounds.hpp"
#include "ldlab/divergence.hpp"
#include "ldlab/errors.hpp"

#include <cmath>

using namespace ldlab;

namespace {

ModelPtr beta(double a, double b) { return build_family("beta", {{"alpha", a}, {"beta", b}}); }

std::vector<double> fine_s_grid() {
    std::vector<double> g;
    for (int i = 1; i < 100; ++i) g.push_back(0.01 * i);
    return g;
}

// Power law with a fixed order on the default grid.
ScalingLaw power_law(double kappa) {
    ScalingLaw law;
    law.kappa_hat = kappa;
    law.eps_grid = default_eps_grid();
    return law;
}

// Brute-force oracle for inf_x sup_t [(s-t)x + (1-s)f(t)]/(1-t) on a dense 2-D grid.
template <class F>
double duality_brute(F f, double s) {
    double best = kInf;
    for (int i = 0; i <= 3000; ++i) {
        const double x = 3.0 * i / 3000.0;
        double sup = -kInf;
        for (int j = 1; j < 20000; ++j) {
            const double t = j / 20000.0;
            sup = std::max(sup, ((s - t) * x + (1.0 - s) * f(t)) / (1.0 - t));
        }
        best = std::min(best, sup);
    }
    return best;
}

} // namespace

TEST_CASE("fit_order recovers the edge order") {
    const auto grid = default_eps_grid();
    CHECK(fit_order(build_family("uniform"), 0.0, grid).kappa_hat == doctest::Approx(1.0).epsilon(0.02));
    CHECK(fit_order(build_family("exponential"), 0.0, grid).kappa_hat == doctest::Approx(1.0).epsilon(0.02));
    CHECK(fit_order(build_family("gaussian"), 0.0, grid).kappa_hat == doctest::Approx(2.0).epsilon(0.01));
    CHECK(std::fabs(fit_order(beta(0.5, 0.5), 0.0, grid).kappa_hat - 0.5) <= 0.05);

    const ScalingLaw law = fit_order(build_family("gaussian"), 1.7, grid);
    CHECK(law.r_squared > 0.999);
    CHECK_FALSE(law.poor_fit);
    CHECK(law.source_s == 0.5);
    CHECK(law.eps_grid.size() == 5);
    // g(x eps)/g(eps) -> x^kappa
    CHECK(law.g(2e-4) / law.g(1e-4) == doctest::Approx(std::pow(2.0, law.kappa_hat)));
}

TEST_CASE("fitted order does not depend on s") {
    const auto grid = default_eps_grid();
    for (const auto& m : {build_family("uniform"), build_family("exponential"), build_family("gaussian"),
                          beta(0.5, 0.5), beta(2.0, 3.0), build_family("triangular")}) {
        CAPTURE(m->label());
        const double k_half = fit_order(m, 0.0, grid).kappa_hat;
        const double k_quarter = fit_order(m, 0.0, grid, {}, 0.25).kappa_hat;
        CHECK(std::fabs(k_quarter - k_half) <= 0.02 * k_half);
    }
}

TEST_CASE("fit_order validates its grid") {
    const auto m = build_family("uniform");
    const std::vector<double> short_grid{1e-3, 1e-4, 1e-5};
    CHECK_THROWS_AS(fit_order(m, 0.0, short_grid), InvalidArgument);
    const std::vector<double> uneven{1e-3, 5e-4, 1e-4, 5e-5, 1e-6};
    CHECK_THROWS_AS(fit_order(m, 0.0, uneven), InvalidArgument);
    const std::vector<double> too_wide{4.0, 2.0, 1.0, 0.5, 0.25};
    CHECK_THROWS_AS(fit_order(m, 0.0, too_wide), InvalidArgument);
    CHECK_THROWS_AS(fit_order(m, 0.0, default_eps_grid(), {}, 1.0), InvalidArgument);
}

TEST_CASE("tabulated g") {
    const std::vector<double> eps{1e-3, 1e-4, 1e-5};
    const std::vector<double> g{2e-6, 2e-8, 2e-10};
    const ScalingLaw law = tabulated_law(eps, g);
    CHECK(law.kappa_hat == doctest::Approx(2.0));
    CHECK(law.g(1e-4) == doctest::Approx(2e-8));
    CHECK(law.g(std::sqrt(1e-7)) == doctest::Approx(2e-7).epsilon(1e-9));
    CHECK(law.g(1e-6) == doctest::Approx(2e-12));

    const std::vector<double> noisy_eps{1e-1, 1e-2, 1e-3, 1e-4};
    const std::vector<double> noisy_g{1e-3, 1.1e-3, 2e-3, 5e-2};
    CHECK_THROWS_AS(tabulated_law(noisy_eps, noisy_g), InvalidArgument);
    const std::vector<double> bumpy_g{1e-1, 3e-2, 1e-3, 9e-4};
    CHECK(tabulated_law(noisy_eps, bumpy_g).poor_fit);
}

TEST_CASE("richardson extrapolation") {
    const std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<double> v;
    for (double e : eps) v.push_back(3.0 + 5.0 * e);
    Extrapolation r = richardson_limit(eps, v, 1.0);
    CHECK(r.value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.converged);
    CHECK_FALSE(r.fallback);

    v.clear();
    for (double e : eps) v.push_back(1.0 - std::sqrt(e));
    CHECK(richardson_limit(eps, v, 0.5).value == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
    r = richardson_limit(eps, flat, 1.0);
    CHECK(r.value == 2.0);
    CHECK(r.converged);

    const std::vector<double> bumpy{1.0, 1.2, 1.1, 1.15};
    r = richardson_limit(eps, bumpy, 1.0);
    CHECK(r.fallback);
    CHECK(r.value == 1.15);
}

TEST_CASE("limit curves of the catalog") {
    const auto s_grid = default_s_grid();

    const LimitCurve uni = limit_curve(build_family("uniform"), 0.0, power_law(1.0), s_grid);
    for (double v : uni.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(uni.endpoint_left() == doctest::Approx(1.0).epsilon(1e-6));

    const LimitCurve ex = limit_curve(build_family("exponential"), 0.0, power_law(1.0), s_grid);
    for (std::size_t i = 0; i < s_grid.size(); ++i)
        CHECK(ex.values()[i] == doctest::Approx(s_grid[i]).epsilon(1e-8));
    CHECK(ex.endpoint_left() == doctest::Approx(0.0));
    CHECK(ex.endpoint_right() == doctest::Approx(1.0).epsilon(1e-8));

    // Regular limit s(1-s) J/2 with J = 1.
    const LimitCurve ga = limit_curve(build_family("gaussian"), 0.0, power_law(2.0), s_grid);
    for (std::size_t i = 0; i < s_grid.size(); ++i)
        CHECK(ga.values()[i] == doctest::Approx(0.5 * s_grid[i] * (1.0 - s_grid[i])).epsilon(1e-6));
    CHECK(ga.at(0.33) == doctest::Approx(0.5 * 0.33 * 0.67).epsilon(1e-6));
}

TEST_CASE("limit curves are nonnegative and concave") {
    const auto s_grid = default_s_grid();
    for (const auto& m : {build_family("uniform"), build_family("exponential"), build_family("gaussian"),
                          beta(0.5, 0.5), beta(2.0, 2.0), beta(2.0, 3.0), build_family("triangular")}) {
        CAPTURE(m->label());
        const ScalingLaw law = fit_order(m, 0.0, default_eps_grid());
        const LimitCurve c = limit_curve(m, 0.0, law, s_grid);
        const auto& v = c.values();
        for (double x : v) CHECK(x >= 0.0);
        for (std::size_t i = 1; i + 1 < v.size(); ++i)
            CHECK(v[i] >= 0.5 * (v[i - 1] + v[i + 1]) - 1e-6 * v[i]);
    }
}

TEST_CASE("alpha bars on exact curves") {
    const auto s_grid = default_s_grid();
    const auto ex = LimitCurve::from_function(s_grid, [](double s) { return s; }, 1.0);
    const auto uni = LimitCurve::from_function(s_grid, [](double) { return 1.0; }, 1.0);
    const auto ga = LimitCurve::from_function(s_grid, [](double s) { return 0.5 * s * (1.0 - s); }, 2.0);

    const BoundValue e1 = alpha_bar_1(ex, 1.0);
    CHECK(e1.value == doctest::Approx(2.0));
    CHECK(e1.s_witness == 1.0);
    CHECK(alpha_bar_2(ex, 1.0).value == doctest::Approx(1.0));
    CHECK(alpha_bar_1(uni, 1.0).value == doctest::Approx(2.0));
    CHECK(alpha_bar_2(uni, 1.0).value == doctest::Approx(2.0));
    const BoundValue g1 = alpha_bar_1(ga, 2.0);
    CHECK(g1.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g1.s_witness == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(alpha_bar_2(ga, 2.0).value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("alpha_bar_2 branches join continuously at kappa = 1") {
    const auto ex = LimitCurve::from_function(default_s_grid(), [](double s) { return s; }, 1.0);
    const double at_one = alpha_bar_2(ex, 1.0, KappaBranch::one).value;
    const double below = alpha_bar_2(ex, 1.0 - 1e-3, KappaBranch::below_one).value;
    const double above = alpha_bar_2(ex, 1.0 + 1e-3, KappaBranch::above_one).value;
    CHECK(std::fabs(below - at_one) <= 0.01 * at_one);
    CHECK(std::fabs(above - at_one) <= 0.01 * at_one);
    // Automatic selection snaps to the kappa = 1 branch nearby.
    CHECK(alpha_bar_2(ex, 1.005).value == at_one);
}

TEST_CASE("alpha_bar_2 matches a dense grid for kappa < 1") {
    const auto f = [](double s) { return std::sqrt(s * (1.0 - s)) + 0.2 * s; };
    const auto c = LimitCurve::from_function(default_s_grid(), f, 0.5);
    double oracle = std::max(f(0.0), f(1.0));
    for (int i = 1; i < 100000; ++i) {
        const double s = i / 100000.0;
        const double h = f(s) / (s * (1.0 - s)) / std::sqrt(1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s)));
        oracle = std::max(oracle, h);
    }
    CHECK(alpha_bar_2(c, 0.5).value == doctest::Approx(oracle).epsilon(1e-8));

    double oracle_inf = kInf;
    for (int i = 1; i < 100000; ++i) {
        const double s = i / 100000.0;
        oracle_inf = std::min(oracle_inf, f(s) / (s * (1.0 - s)) *
                                              std::pow(std::pow(s, 1.0 / 1.5) + std::pow(1.0 - s, 1.0 / 1.5), 1.5));
    }
    CHECK(alpha_bar_2(c, 2.5).value == doctest::Approx(oracle_inf).epsilon(1e-8));
}

TEST_CASE("coincidence verdicts and bound order") {
    const auto s_grid = default_s_grid();
    const auto check_family = [&](const ModelPtr& m) {
        const ScalingLaw law = fit_order(m, 0.0, default_eps_grid());
        return coincidence(limit_curve(m, 0.0, law, s_grid), law.kappa_hat);
    };

    const BoundsReport u = check_family(build_family("uniform"));
    CHECK(u.alpha_bar_1 == doctest::Approx(2.0).epsilon(0.02));
    CHECK(u.alpha_bar_2 == doctest::Approx(2.0).epsilon(0.02));
    CHECK(u.coincide);

    const BoundsReport e = check_family(build_family("exponential"));
    CHECK(e.alpha_bar_1 == doctest::Approx(2.0).epsilon(0.02));
    CHECK(e.alpha_bar_2 == doctest::Approx(1.0).epsilon(0.02));
    CHECK_FALSE(e.coincide);
    CHECK_FALSE(e.condition_163_holds);

    const BoundsReport g = check_family(build_family("gaussian"));
    CHECK(g.alpha_bar_1 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(g.alpha_bar_2 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(g.coincide);

    for (const auto& m : {beta(2.0, 3.0), beta(0.5, 0.5), beta(2.0, 2.0), build_family("triangular")}) {
        CAPTURE(m->label());
        const BoundsReport r = check_family(m);
        CHECK(r.order_holds);
        CHECK(r.alpha_bar_1 >= r.alpha_bar_2 - 1e-9);
    }
    // Asymmetric edges give a tilted curve.
    CHECK_FALSE(check_family(beta(2.0, 3.0)).condition_163_holds);
}

TEST_CASE("duality check recovers f(s)") {
    const auto parab = [](double t) { return t * (1.0 - t); };
    const auto tent = [](double t) { return std::min(t, 1.0 - t); };
    const auto flat = [](double) { return 0.7; };
    const auto line = [](double t) { return t; };
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        CAPTURE(s);
        CHECK(std::fabs(duality_check(parab, s) - parab(s)) <= 1e-3);
        CHECK(std::fabs(duality_check(tent, s) - tent(s)) <= 1e-3);
        CHECK(std::fabs(duality_check(flat, s) - 0.7) <= 1e-3);
    }
    CHECK(std::fabs(duality_check(line, 0.5) - 0.5) <= 1e-3);
    CHECK(duality_check(parab, 0.3) == doctest::Approx(duality_brute(parab, 0.3)).epsilon(1e-3));

    const auto grid = fine_s_grid();
    std::vector<double> samples;
    for (double t : grid) samples.push_back(parab(t));
    CHECK(std::fabs(duality_check(grid, samples, 0.3) - 0.21) <= 1e-3);
    CHECK_THROWS_AS(duality_check(parab, 0.0), InvalidArgument);
}
