#include "ldlab/estimators.hpp"

#include "ldlab/errors.hpp"
#include "ldlab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

namespace ldlab {

namespace {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Smallest point (to double precision) where a monotone predicate turns true,
// given pred(lo) == false and pred(hi) == true.
double first_true(const std::function<bool(double)>& pred, double lo, double hi) {
    for (int i = 0; i < 2200; ++i) {
        const double mid = lo + 0.5 * (hi - lo);
        if (!(mid > lo && mid < hi)) break;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// Sign of k(z) = mean of log f(x - z + eps) - log f(x - z - eps); infinite
// summands decide the sign on their own.
int k_sign(const DensityModel& model, std::span<const double> xs, double z, double eps) {
    double sum = 0.0;
    bool pos_inf = false, neg_inf = false;
    for (double x : xs) {
        const double up = model.logpdf(x - z + eps);
        const double down = model.logpdf(x - z - eps);
        if (up == -kInf && down == -kInf) continue;
        if (up == -kInf)
            neg_inf = true;
        else if (down == -kInf)
            pos_inf = true;
        else
            sum += model.log_ratio(x - z - eps, 2.0 * eps);
    }
    if (neg_inf != pos_inf) return neg_inf ? -1 : 1;
    if (neg_inf) return 0;
    return (sum > 0.0) - (sum < 0.0);
}

Estimate lr_estimate(const DensityModel& model, std::span<const double> xs, double eps,
                     double min_shift, double max_shift) {
    Estimate out;
    if (std::isfinite(min_shift) && std::isfinite(max_shift) && min_shift - max_shift <= 2.0 * eps) {
        out.value = 0.5 * (min_shift + max_shift);
        out.diagnostics.note = "range of shifts within 2 eps; midpoint of min and max shift";
        return out;
    }
    const double lo = max_shift + eps;
    const double hi = min_shift - eps;
    const auto sign = [&](double z) { return k_sign(model, xs, z, eps); };

    const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
    const double center = std::isfinite(hi)   ? hi
                          : std::isfinite(lo) ? lo
                                              : 0.5 * (*xmin + *xmax) - model.mode();
    const double step0 = std::max({eps, *xmax - *xmin, 1.0});

    // z_lo with k < 0 and z_hi with k > 0; a finite domain end qualifies by definition.
    std::optional<double> z_lo, z_hi;
    if (std::isfinite(lo)) z_lo = lo;
    if (std::isfinite(hi)) z_hi = hi;
    for (double step = step0; !z_lo && step < 1e300; step *= 2.0)
        if (sign(center - step) < 0) z_lo = center - step;
    for (double step = step0; !z_hi && step < 1e300; step *= 2.0)
        if (sign(center + step) > 0) z_hi = center + step;

    if (!z_lo || !z_hi) {
        out.value = z_hi ? *z_hi : *z_lo;
        out.diagnostics.note = z_hi ? "k(z) >= 0 everywhere below the domain end"
                                    : "k(z) <= 0 everywhere above the domain end";
        out.diagnostics.lr_bracket = std::pair{out.value, out.value};
        return out;
    }
    const double sup_neg = first_true([&](double z) { return sign(z) >= 0; }, *z_lo, *z_hi);
    const double inf_pos = first_true([&](double z) { return sign(z) > 0; }, *z_lo, *z_hi);
    out.diagnostics.lr_bracket = std::pair{sup_neg, inf_pos};
    out.value = 0.5 * (sup_neg + inf_pos);
    return out;
}

Estimate mle_estimate(const DensityModel& model, std::span<const double> xs, double min_shift,
                      double max_shift) {
    Estimate out;
    if (model.flags().monotone_decreasing) {
        out.value = min_shift;
        out.diagnostics.note = "monotone density: maximizer is the min shift";
        return out;
    }
    const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
    const double mode = model.mode();
    const double lo = std::max(max_shift, *xmin - mode);
    const double hi = std::min(min_shift, *xmax - mode);
    if (!(lo < hi)) {
        out.value = lo;
        return out;
    }

    const auto loglik = [&](double theta) {
        double sum = 0.0;
        for (double x : xs) sum += model.logpdf(x - theta);
        return sum;
    };
    // Sum of scores; nonincreasing in theta for log-concave densities.
    const auto score_sum = [&](double theta) {
        double sum = 0.0;
        for (double x : xs) sum -= model.dlogpdf(x - theta);
        return sum;
    };

    const double tol = 1e-7 * (hi - lo);
    const ScalarOptimum g = golden_section_max(loglik, lo, hi, tol);
    out.diagnostics.ml_iterations = g.iterations;

    // Polish on the sign change of the score; golden section stalls near
    // sqrt(machine epsilon) on the flat top.
    const double w = std::max(1e-6 * (hi - lo), 1e-12);
    double a = std::max(lo, g.x - w);
    double b = std::min(hi, g.x + w);
    if (!(score_sum(a) >= 0.0 && score_sum(b) <= 0.0)) {
        a = lo;
        b = hi;
    }
    const auto falling = [&](double theta) { return score_sum(theta) < 0.0; };
    if (falling(a)) {
        out.value = a;
    } else if (!falling(b)) {
        out.value = b;
    } else {
        double left = a, right = b;
        int it = 0;
        for (; it < 200; ++it) {
            const double mid = left + 0.5 * (right - left);
            if (!(mid > left && mid < right)) break;
            if (falling(mid))
                right = mid;
            else
                left = mid;
        }
        out.diagnostics.ml_iterations += it;
        out.value = 0.5 * (left + right);
    }
    return out;
}

} // namespace

void EstimatorSpec::validate() const {
    const bool wants_lambda = kind == EstimatorKind::cc;
    const bool wants_eps = kind == EstimatorKind::lr || kind == EstimatorKind::shifted_min;
    if (wants_lambda != lambda.has_value())
        throw InvalidArgument(kind_name(kind) + (wants_lambda ? ": lambda is required" : ": lambda is not accepted"));
    if (wants_eps != epsilon.has_value())
        throw InvalidArgument(kind_name(kind) + (wants_eps ? ": epsilon is required" : ": epsilon is not accepted"));
    if (lambda && !(*lambda > 0.0 && *lambda < 1.0))
        throw InvalidArgument("cc: lambda must lie in (0, 1)");
    if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon)))
        throw InvalidArgument(kind_name(kind) + ": epsilon must be positive");
}

std::string EstimatorSpec::label() const {
    if (lambda) return kind_name(kind) + "(" + format_number(*lambda) + ")";
    if (epsilon) return kind_name(kind) + "(" + format_number(*epsilon) + ")";
    return kind_name(kind);
}

std::string kind_name(EstimatorKind kind) {
    switch (kind) {
    case EstimatorKind::min_shift: return "min_shift";
    case EstimatorKind::max_shift: return "max_shift";
    case EstimatorKind::cc: return "cc";
    case EstimatorKind::mle: return "mle";
    case EstimatorKind::lr: return "lr";
    case EstimatorKind::shifted_min: return "shifted_min";
    }
    return "unknown";
}

EstimatorKind parse_kind(const std::string& name) {
    for (EstimatorKind k : {EstimatorKind::min_shift, EstimatorKind::max_shift, EstimatorKind::cc,
                            EstimatorKind::mle, EstimatorKind::lr, EstimatorKind::shifted_min})
        if (kind_name(k) == name) return k;
    throw InvalidArgument("unknown estimator kind '" + name + "'");
}

EstimatorSpec parse_estimator(const std::string& text) {
    const auto open = text.find('(');
    EstimatorSpec spec;
    if (open == std::string::npos) {
        spec.kind = parse_kind(text);
    } else {
        if (text.back() != ')') throw InvalidArgument("malformed estimator '" + text + "'");
        spec.kind = parse_kind(text.substr(0, open));
        const std::string arg = text.substr(open + 1, text.size() - open - 2);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(arg, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("malformed estimator parameter in '" + text + "'");
        }
        if (used != arg.size()) throw InvalidArgument("malformed estimator parameter in '" + text + "'");
        if (spec.kind == EstimatorKind::cc)
            spec.lambda = v;
        else
            spec.epsilon = v;
    }
    spec.validate();
    return spec;
}

void check_applicable(const EstimatorSpec& spec, const DensityModel& model) {
    spec.validate();
    const auto& sup = model.support();
    const auto& flags = model.flags();
    const auto who = [&] { return spec.label() + " on " + model.label(); };
    switch (spec.kind) {
    case EstimatorKind::min_shift:
    case EstimatorKind::shifted_min:
        if (!sup.lower_finite()) throw HypothesisGate(who() + ": needs a finite lower support end");
        break;
    case EstimatorKind::max_shift:
        if (!sup.upper_finite()) throw HypothesisGate(who() + ": needs a finite upper support end");
        break;
    case EstimatorKind::cc:
        if (!sup.lower_finite() || !sup.upper_finite())
            throw HypothesisGate(who() + ": needs a bounded support");
        break;
    case EstimatorKind::mle:
        if (!flags.log_concave && !flags.monotone_decreasing)
            throw HypothesisGate("log-concavity gate: " + who() +
                                 " needs a log-concave or monotone decreasing density");
        break;
    case EstimatorKind::lr:
        if (!flags.log_concave)
            throw HypothesisGate("log-concavity gate: " + who() + " needs a log-concave density");
        break;
    }
}

Estimate point_estimate(const EstimatorSpec& spec, const DensityModel& model,
                        const SampleBatch& sample) {
    return point_estimate(spec, model, std::span<const double>(sample.values));
}

Estimate point_estimate(const EstimatorSpec& spec, const DensityModel& model,
                        std::span<const double> xs) {
    if (xs.empty()) throw InvalidArgument("point_estimate: empty sample");
    check_applicable(spec, model);
    const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
    const double min_shift = *xmin - model.support().lower;
    const double max_shift = *xmax - model.support().upper;

    Estimate out;
    switch (spec.kind) {
    case EstimatorKind::min_shift:
        out.value = min_shift;
        break;
    case EstimatorKind::max_shift:
        out.value = max_shift;
        break;
    case EstimatorKind::cc:
        out.value = *spec.lambda * min_shift + (1.0 - *spec.lambda) * max_shift;
        break;
    case EstimatorKind::shifted_min:
        out.value = min_shift - *spec.epsilon;
        break;
    case EstimatorKind::mle:
        return mle_estimate(model, xs, min_shift, max_shift);
    case EstimatorKind::lr:
        return lr_estimate(model, xs, *spec.epsilon, min_shift, max_shift);
    }
    return out;
}

double optimal_lambda(const EdgeProfile& edge) {
    if (std::fabs(edge.kappa1 - edge.kappa2) > 1e-12 * std::max(edge.kappa1, edge.kappa2))
        throw HypothesisGate("optimal_lambda: edge exponents differ");
    if (!(edge.A1 > 0.0) || !(edge.A2 > 0.0))
        throw InvalidArgument("optimal_lambda: edge coefficients must be positive");
    const double r1 = std::pow(edge.A1, 1.0 / edge.kappa1);
    const double r2 = std::pow(edge.A2, 1.0 / edge.kappa1);
    return r1 / (r1 + r2);
}

} // namespace ldlab
