#include <doctest.h>

#include "ldlab/errors.hpp"
#include "ldlab/estimators.hpp"

#include <algorithm>
#include <cmath>

using namespace ldlab;

namespace {

ModelPtr beta(double a, double b) { return build_family("beta", {{"alpha", a}, {"beta", b}}); }

std::vector<ModelPtr> builtins() {
    return {build_family("uniform"), build_family("exponential"), build_family("gaussian"),
            beta(0.5, 0.5), beta(2.0, 3.0), build_family("triangular")};
}

std::vector<EstimatorSpec> all_specs() {
    return {EstimatorSpec::min_shift(), EstimatorSpec::max_shift(), EstimatorSpec::cc(0.5),
            EstimatorSpec::cc(0.3),     EstimatorSpec::mle(),       EstimatorSpec::lr(0.01),
            EstimatorSpec::shifted_min(0.01)};
}

bool applicable(const EstimatorSpec& spec, const DensityModel& m) {
    try {
        check_applicable(spec, m);
        return true;
    } catch (const HypothesisGate&) {
        return false;
    }
}

double score_sum(const DensityModel& m, const std::vector<double>& xs, double theta) {
    double s = 0.0;
    for (double x : xs) s -= m.dlogpdf(x - theta);
    return s;
}

// Brute-force likelihood-ratio oracle: scan k on a fine grid.
std::pair<double, double> lr_bracket_scan(const DensityModel& m, const std::vector<double>& xs,
                                          double eps, double lo, double hi) {
    double sup_neg = lo, inf_pos = hi;
    const int n = 200000;
    for (int i = 1; i < n; ++i) {
        const double z = lo + (hi - lo) * i / n;
        double k = 0.0;
        for (double x : xs) k += m.logpdf(x - z + eps) - m.logpdf(x - z - eps);
        if (k < 0) sup_neg = z;
        if (k > 0 && inf_pos == hi) inf_pos = z;
    }
    return {sup_neg, inf_pos};
}

} // namespace

TEST_CASE("simple estimators on a fixed sample") {
    const auto uni = build_family("uniform");
    const std::vector<double> xs{0.3, 0.7, 1.2};
    CHECK(point_estimate(EstimatorSpec::min_shift(), *uni, xs).value == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(point_estimate(EstimatorSpec::max_shift(), *uni, xs).value == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(point_estimate(EstimatorSpec::cc(0.5), *uni, xs).value == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(point_estimate(EstimatorSpec::shifted_min(0.1), *uni, xs).value == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("mle on exponential equals the min shift") {
    const auto ex = build_family("exponential");
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SampleBatch b = sample(*ex, 0.4, 50, seed);
        CHECK(point_estimate(EstimatorSpec::mle(), *ex, b).value ==
              point_estimate(EstimatorSpec::min_shift(), *ex, b).value);
    }
}

TEST_CASE("lr on exponential equals the shifted min sample by sample") {
    const auto ex = build_family("exponential");
    for (double eps : {1e-3, 0.05, 0.5}) {
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            const SampleBatch b = sample(*ex, -1.3, 40, seed);
            const double m = *std::min_element(b.values.begin(), b.values.end());
            const Estimate e = point_estimate(EstimatorSpec::lr(eps), *ex, b);
            CHECK(e.value == point_estimate(EstimatorSpec::shifted_min(eps), *ex, b).value);
            CHECK(e.value == m - eps);
        }
    }
}

TEST_CASE("lr on uniform is the midpoint of the shift range") {
    const auto uni = build_family("uniform");
    const std::vector<double> xs{0.3, 0.7, 1.2};
    // Range of shifts (0.2, 0.3) is within 2 eps.
    CHECK(point_estimate(EstimatorSpec::lr(0.1), *uni, xs).value == doctest::Approx(0.25).epsilon(1e-15));
    const std::vector<double> wide{0.1, 0.5, 0.95};
    const Estimate e = point_estimate(EstimatorSpec::lr(0.01), *uni, wide);
    CHECK(e.value == doctest::Approx(0.5 * (0.1 + (-0.05))).epsilon(1e-12));
    REQUIRE(e.diagnostics.lr_bracket);
}

TEST_CASE("lr matches a grid scan of k") {
    for (const auto& m : {build_family("gaussian"), beta(2.0, 3.0), build_family("triangular")}) {
        const double eps = 0.02;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const SampleBatch b = sample(*m, 0.1, 25, seed);
            const Estimate e = point_estimate(EstimatorSpec::lr(eps), *m, b);
            REQUIRE(e.diagnostics.lr_bracket);
            const auto [lo_x, hi_x] = std::minmax_element(b.values.begin(), b.values.end());
            double lo = *hi_x - m->support().upper + eps, hi = *lo_x - m->support().lower - eps;
            if (!std::isfinite(lo)) lo = 0.1 - 2.0;
            if (!std::isfinite(hi)) hi = 0.1 + 2.0;
            const auto [s, i] = lr_bracket_scan(*m, b.values, eps, lo, hi);
            const double h = (hi - lo) / 200000 * 1.01;
            CHECK(std::fabs(e.diagnostics.lr_bracket->first - s) <= h);
            CHECK(std::fabs(e.diagnostics.lr_bracket->second - i) <= h);
        }
    }
}

TEST_CASE("mle satisfies the first-order condition") {
    for (const auto& m : {beta(2.0, 3.0), build_family("gaussian"), build_family("triangular")}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const SampleBatch b = sample(*m, 0.7, 200, seed);
            const double th = point_estimate(EstimatorSpec::mle(), *m, b).value;
            CHECK(score_sum(*m, b.values, th - 5e-11) >= 0.0);
            CHECK(score_sum(*m, b.values, th + 5e-11) <= 0.0);
        }
    }
}

TEST_CASE("gaussian mle is the sample mean") {
    const auto g = build_family("gaussian");
    const SampleBatch b = sample(*g, 2.5, 500, 9);
    double mean = 0.0;
    for (double x : b.values) mean += x;
    mean /= b.values.size();
    CHECK(point_estimate(EstimatorSpec::mle(), *g, b).value == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("shift equivariance") {
    SUBCASE("exact on dyadic data") {
        const auto uni = build_family("uniform");
        const std::vector<double> xs{0.25, 0.5, 0.875, 0.375};
        for (double c : {-3.0, 0.5, 16.0}) {
            std::vector<double> shifted;
            for (double x : xs) shifted.push_back(x + c);
            for (const auto& spec : {EstimatorSpec::min_shift(), EstimatorSpec::max_shift(),
                                     EstimatorSpec::cc(0.5), EstimatorSpec::shifted_min(0.125)}) {
                CHECK(point_estimate(spec, *uni, shifted).value == point_estimate(spec, *uni, xs).value + c);
            }
        }
    }
    SUBCASE("all estimators on random data") {
        for (const auto& m : builtins()) {
            const SampleBatch b = sample(*m, 0.0, 100, 3);
            for (double c : {-2.75, 1e-3, 7.0}) {
                std::vector<double> shifted;
                for (double x : b.values) shifted.push_back(x + c);
                for (const auto& spec : all_specs()) {
                    if (!applicable(spec, *m)) continue;
                    const double base = point_estimate(spec, *m, b.values).value;
                    const double moved = point_estimate(spec, *m, shifted).value;
                    INFO(spec.label() << " on " << m->label() << " c=" << c);
                    CHECK(std::fabs(moved - (base + c)) <= 1e-12 * std::max(1.0, std::fabs(c)));
                }
            }
        }
    }
}

TEST_CASE("domination") {
    for (const auto& m : {build_family("uniform"), beta(2.0, 3.0), beta(0.5, 0.5), build_family("triangular")}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const SampleBatch b = sample(*m, 0.2, 30, seed);
            const double lo = point_estimate(EstimatorSpec::max_shift(), *m, b).value;
            const double hi = point_estimate(EstimatorSpec::min_shift(), *m, b).value;
            CHECK(lo <= hi);
            for (double lam : {0.01, 0.3, 0.5, 0.99}) {
                const double v = point_estimate(EstimatorSpec::cc(lam), *m, b).value;
                CHECK(v >= lo);
                CHECK(v <= hi);
            }
            if (applicable(EstimatorSpec::mle(), *m)) {
                const double v = point_estimate(EstimatorSpec::mle(), *m, b).value;
                CHECK(v >= lo);
                CHECK(v <= hi);
            }
        }
    }
}

TEST_CASE("consistency at n = 10^4") {
    for (const auto& m : builtins()) {
        const SampleBatch b = sample(*m, 0.37, 10000, 2024);
        for (const auto& spec : all_specs()) {
            if (!applicable(spec, *m)) continue;
            INFO(spec.label() << " on " << m->label());
            CHECK(std::fabs(point_estimate(spec, *m, b).value - 0.37) < 0.05);
        }
    }
}

TEST_CASE("gates") {
    const auto g = build_family("gaussian");
    const auto ex = build_family("exponential");
    const auto arc = beta(0.5, 0.5);
    const std::vector<double> xs{0.1, 0.2};
    CHECK_THROWS_AS(point_estimate(EstimatorSpec::min_shift(), *g, xs), HypothesisGate);
    CHECK_THROWS_AS(point_estimate(EstimatorSpec::max_shift(), *ex, xs), HypothesisGate);
    CHECK_THROWS_AS(point_estimate(EstimatorSpec::cc(0.5), *ex, xs), HypothesisGate);
    CHECK_THROWS_AS(point_estimate(EstimatorSpec::mle(), *arc, xs), HypothesisGate);
    CHECK_THROWS_AS(point_estimate(EstimatorSpec::lr(0.1), *arc, xs), HypothesisGate);
    CHECK_THROWS_AS(point_estimate(EstimatorSpec::min_shift(), *ex, std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(EstimatorSpec::cc(1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(EstimatorSpec::lr(0.0).validate(), InvalidArgument);
    CHECK_THROWS_AS((EstimatorSpec{EstimatorKind::mle, 0.5, {}}).validate(), InvalidArgument);
}

TEST_CASE("estimator labels round trip") {
    for (const auto& spec : all_specs()) CHECK(parse_estimator(spec.label()) == spec);
    CHECK(parse_estimator("cc(0.25)") == EstimatorSpec::cc(0.25));
    CHECK_THROWS_AS(parse_estimator("cc"), InvalidArgument);
    CHECK_THROWS_AS(parse_estimator("lr(x)"), InvalidArgument);
    CHECK_THROWS_AS(parse_estimator("median"), InvalidArgument);
    CHECK_THROWS_AS(parse_estimator("mle(0.1)"), InvalidArgument);
}

TEST_CASE("optimal lambda") {
    CHECK(optimal_lambda({1.7, 3.0, 1.7, 3.0}) == doctest::Approx(0.5));
    CHECK(optimal_lambda({1.0, 2.0, 1.0, 1.0}) == doctest::Approx(2.0 / 3.0));
    CHECK(optimal_lambda({2.0, 4.0, 2.0, 1.0}) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(optimal_lambda({1.0, 1.0, 2.0, 1.0}), HypothesisGate);
    CHECK_THROWS_AS(optimal_lambda({1.0, 0.0, 1.0, 1.0}), InvalidArgument);
}
