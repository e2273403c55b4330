#include "ldlab/rates.hpp"

#include "ldlab/divergence.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/optimize.hpp"
#include "ldlab/rng.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace ldlab {

namespace {

// Non-owning handle for APIs that take a ModelPtr.
ModelPtr borrow(const DensityModel& model) { return ModelPtr(ModelPtr{}, &model); }

double chernoff_between(const DensityModel& model, double theta1, double theta2,
                        const QuadratureConfig& quad) {
    if (theta1 == theta2) return 0.0;
    const auto grid = default_s_grid();
    return chernoff_exponent(renyi_curve(borrow(model), theta1, theta2, grid, quad)).value;
}

// -log of the integral of exp(h) over (lo, hi), shifted by the largest probe
// value so that large t does not overflow.
double neg_log_int_exp(const std::function<double(double)>& h, double lo, double hi,
                       std::span<const double> probes, std::span<const double> breaks,
                       const QuadratureConfig& quad) {
    if (!(lo < hi)) return kInf;
    double c = -kInf;
    for (double x : probes)
        if (x > lo && x < hi) c = std::max(c, h(x));
    if (!std::isfinite(c)) c = 0.0;
    std::vector<double> inside;
    for (double x : breaks)
        if (x > lo && x < hi) inside.push_back(x);
    std::sort(inside.begin(), inside.end());
    const QuadResult r = integrate(
        [&](double x) {
            const double v = h(x);
            return v == -kInf ? 0.0 : std::exp(v - c);
        },
        lo, hi, quad, {}, inside);
    return -(c + std::log(r.value));
}

struct TOptimum {
    double value = 0.0;
    double t = 0.0;
};

// sup over t >= 0 of a concave function: scan {0} and a log grid up to 1e4,
// stop once past the maximum, refine by golden section.
TOptimum sup_over_t(const std::function<double(double)>& v) {
    std::vector<double> grid{0.0};
    for (int k = 0; k <= 64; ++k) grid.push_back(std::pow(10.0, -4.0 + k / 8.0));
    std::size_t best_i = 0;
    double best = v(0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double val = v(grid[i]);
        if (val > best) {
            best = val;
            best_i = i;
        } else {
            break;
        }
    }
    if (best_i + 1 == grid.size()) return {kInf, kInf};
    const double lo = best_i == 0 ? 0.0 : grid[best_i - 1];
    const double hi = grid[best_i + 1];
    const ScalarOptimum g = golden_section_max(v, lo, hi, 1e-10 * std::max(1.0, hi));
    if (g.value > best) return {g.value, g.x};
    return {best, grid[best_i]};
}

double two_sided_z(double confidence) {
    return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + confidence));
}

// Runs per_rep(r, scratch) for r in [0, reps) on a pool and counts the true
// results. Chunks are claimed dynamically; counts are summed in chunk order.
template <class F>
std::uint64_t parallel_count(std::size_t reps, std::size_t scratch_size, const McConfig& cfg,
                             F&& per_rep) {
    const std::size_t chunk = std::max<std::size_t>(cfg.chunk, 1);
    const std::size_t n_chunks = (reps + chunk - 1) / chunk;
    unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_chunks, 1)));
    std::vector<std::uint64_t> counts(n_chunks, 0);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto work = [&] {
        std::vector<double> scratch(scratch_size);
        try {
            for (std::size_t c = next++; c < n_chunks; c = next++) {
                const std::size_t end = std::min(reps, (c + 1) * chunk);
                std::uint64_t k = 0;
                for (std::size_t r = c * chunk; r < end; ++r) k += per_rep(r, std::span<double>(scratch)) ? 1 : 0;
                counts[c] = k;
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_chunks;
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void require_grid(std::span<const std::size_t> n_grid, std::size_t reps, std::size_t min_reps) {
    if (n_grid.size() < 4) throw InvalidArgument("n_grid needs at least 4 values");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] == 0) throw InvalidArgument("n_grid values must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw InvalidArgument("n_grid must be strictly increasing");
    }
    if (reps < min_reps) throw InvalidArgument("reps must be at least " + std::to_string(min_reps));
}

} // namespace

std::string method_name(RateMethod method) {
    switch (method) {
    case RateMethod::closed_form: return "closed_form";
    case RateMethod::quadrature_opt: return "quadrature_opt";
    case RateMethod::chernoff_equiv: return "chernoff_equiv";
    }
    return "unknown";
}

std::string side_name(Side side) {
    switch (side) {
    case Side::plus: return "plus";
    case Side::minus: return "minus";
    case Side::both: return "both";
    }
    return "unknown";
}

Side parse_side(const std::string& name) {
    if (name == "plus") return Side::plus;
    if (name == "minus") return Side::minus;
    if (name == "both") return Side::both;
    throw InvalidArgument("unknown side '" + name + "'");
}

MleRateDetail mle_rate_detail(const DensityModel& model, double eps, const QuadratureConfig& quad) {
    if (!model.flags().log_concave)
        throw HypothesisGate("log-concavity gate: mle rate on " + model.label() + " needs a log-concave density");
    if (!(eps > 0.0)) throw InvalidArgument("mle rate: epsilon must be positive");
    const double a = model.support().lower;
    const double b = model.support().upper;

    std::vector<double> probes{model.mode(), model.mode() + eps, model.mode() - eps};
    for (double u : {1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999}) {
        const double x = model.quantile(u);
        probes.insert(probes.end(), {x, x + eps, x - eps});
    }
    std::vector<double> breaks;
    for (double x : model.breakpoints()) breaks.insert(breaks.end(), {x, x + eps, x - eps});

    const auto lf = [&](double x) { return model.logpdf(x); };
    const auto tilt = [&](double t, double x) { return t == 0.0 ? 0.0 : t * model.dlogpdf(x); };

    const auto form = [&](auto h, double lo, double hi) {
        return [&, h, lo, hi](double t) {
            return neg_log_int_exp([&](double x) { return h(t, x); }, lo, hi, probes, breaks, quad);
        };
    };
    const auto f33 = form([&](double t, double x) { return lf(x) - tilt(t, x - eps); }, a + eps, b);
    const auto f34 = form([&](double t, double x) { return lf(x + eps) - tilt(t, x); }, a, b - eps);
    const auto f35 = form([&](double t, double x) { return lf(x) + tilt(t, x + eps); }, a, b - eps);
    const auto f36 = form([&](double t, double x) { return lf(x - eps) + tilt(t, x); }, a + eps, b);

    MleRateDetail d;
    const TOptimum plus = sup_over_t(f33);
    const TOptimum minus = sup_over_t(f35);
    d.beta_plus = plus.value;
    d.t_plus = plus.t;
    d.beta_minus = minus.value;
    d.t_minus = minus.t;
    d.beta_plus_alt = std::isfinite(plus.t) ? f34(plus.t) : kInf;
    d.beta_minus_alt = std::isfinite(minus.t) ? f36(minus.t) : kInf;
    return d;
}

RatePair exact_rate(const EstimatorSpec& spec, const DensityModel& model, double theta, double eps,
                    const QuadratureConfig& quad) {
    check_applicable(spec, model);
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("exact_rate: epsilon must be positive");
    const double a = model.support().lower;
    const double b = model.support().upper;
    RatePair r;
    r.epsilon = eps;
    r.theta = theta;
    switch (spec.kind) {
    case EstimatorKind::min_shift:
        r.beta_plus = model.neg_log_sf(a + eps);
        r.beta_minus = kInf;
        break;
    case EstimatorKind::max_shift:
        r.beta_plus = kInf;
        r.beta_minus = model.neg_log_cdf(b - eps);
        break;
    case EstimatorKind::cc:
        r.beta_plus = model.neg_log_sf(a + eps / *spec.lambda);
        r.beta_minus = model.neg_log_cdf(b - eps / (1.0 - *spec.lambda));
        break;
    case EstimatorKind::shifted_min:
        r.beta_plus = model.neg_log_sf(a + eps + *spec.epsilon);
        r.beta_minus = *spec.epsilon > eps ? 0.0 : kInf;
        break;
    case EstimatorKind::mle:
        if (model.flags().monotone_decreasing)
            return exact_rate(EstimatorSpec::min_shift(), model, theta, eps, quad);
        {
            const MleRateDetail d = mle_rate_detail(model, eps, quad);
            r.beta_plus = d.beta_plus;
            r.beta_minus = d.beta_minus;
            r.method = RateMethod::quadrature_opt;
        }
        break;
    case EstimatorKind::lr:
        if (std::fabs(*spec.epsilon - eps) > 1e-12 * eps)
            throw InvalidArgument("exact_rate: lr rate is only available at its own epsilon");
        r.beta_plus = r.beta_minus = chernoff_between(model, theta - eps, theta + eps, quad);
        r.method = RateMethod::chernoff_equiv;
        break;
    }
    return r;
}

RatePair literal_rate(const EstimatorSpec& spec, const DensityModel& model, double theta, double eps,
                      const QuadratureConfig& quad) {
    RatePair r = exact_rate(spec, model, theta, eps, quad);
    const double a = model.support().lower;
    const double b = model.support().upper;
    switch (spec.kind) {
    case EstimatorKind::min_shift:
        r.beta_plus = model.neg_log_cdf(b - eps);
        break;
    case EstimatorKind::max_shift:
        r.beta_minus = model.neg_log_sf(a + eps);
        break;
    case EstimatorKind::cc:
        r.beta_plus = model.neg_log_cdf(b - eps / (1.0 - *spec.lambda));
        r.beta_minus = model.neg_log_sf(a + eps / *spec.lambda);
        break;
    case EstimatorKind::shifted_min:
        r.beta_plus = model.neg_log_cdf(b - eps - *spec.epsilon);
        break;
    default:
        break;
    }
    return r;
}

MleLowerBound mle_rate_lower_bound(const DensityModel& model, double theta, double eps,
                                   const QuadratureConfig& quad) {
    if (!model.flags().log_concave)
        throw HypothesisGate("log-concavity gate: mle rate bound on " + model.label() +
                             " needs a log-concave density");
    if (eps < 0.0) throw InvalidArgument("mle_rate_lower_bound: epsilon must be nonnegative");
    if (eps == 0.0) return {};
    return {chernoff_between(model, theta, theta + eps, quad),
            chernoff_between(model, theta - eps, theta, quad)};
}

double exact_tail(const EstimatorSpec& spec, const DensityModel& model, double eps, Side side,
                  std::size_t n, const QuadratureConfig& quad) {
    check_applicable(spec, model);
    if (n == 0) throw InvalidArgument("exact_tail: n must be positive");
    const double a = model.support().lower;
    const double b = model.support().upper;
    const double dn = static_cast<double>(n);
    const auto power = [&](double neg_log) { return std::exp(-dn * neg_log); };
    double plus = 0.0, minus = 0.0;
    switch (spec.kind) {
    case EstimatorKind::min_shift:
        plus = power(model.neg_log_sf(a + eps));
        break;
    case EstimatorKind::max_shift:
        minus = power(model.neg_log_cdf(b - eps));
        break;
    case EstimatorKind::shifted_min:
        plus = power(model.neg_log_sf(a + eps + *spec.epsilon));
        if (*spec.epsilon > eps) minus = -std::expm1(-dn * model.neg_log_sf(a + *spec.epsilon - eps));
        break;
    case EstimatorKind::cc: {
        // Joint density of (min, max) with the inner integral done in closed
        // form: int n(n-1) (F(w) - F(u))^(n-2) f(u) du = n (F(w) - F(u0))^(n-1).
        const double lam = *spec.lambda;
        const EndpointPowers edges{substitution_power(model.edge().kappa1, quad),
                                   substitution_power(model.edge().kappa2, quad)};
        const auto mass = [&](double lo, double hi) {
            return hi <= lo ? 0.0 : std::max(0.0, model.cdf(hi) - model.cdf(lo));
        };
        const double w_min = lam * a + (1.0 - lam) * b + eps;
        if (w_min < b) {
            const auto f = [&](double w) {
                const double u0 = a + (eps - (1.0 - lam) * (w - b)) / lam;
                return dn * std::pow(mass(u0, w), dn - 1.0) * model.pdf(w);
            };
            plus = integrate(f, std::max(a, w_min), b, quad, {1.0, edges.right}).value;
        }
        const double u_max = lam * a + (1.0 - lam) * b - eps;
        if (u_max > a) {
            const auto f = [&](double u) {
                const double w0 = b - (eps + lam * (u - a)) / (1.0 - lam);
                return dn * std::pow(mass(u, w0), dn - 1.0) * model.pdf(u);
            };
            minus = integrate(f, a, std::min(b, u_max), quad, {edges.left, 1.0}).value;
        }
        break;
    }
    default:
        throw InvalidArgument("exact_tail: no finite-n formula for " + spec.label());
    }
    switch (side) {
    case Side::plus: return plus;
    case Side::minus: return minus;
    case Side::both: return plus + minus;
    }
    return plus + minus;
}

RateEstimate fit_rate(std::span<const std::size_t> n_grid, std::span<const std::uint64_t> counts,
                      std::size_t reps, double confidence, double log_n_correction) {
    if (n_grid.size() != counts.size() || n_grid.empty())
        throw InvalidArgument("fit_rate: grid and counts differ in length");
    if (reps == 0) throw InvalidArgument("fit_rate: reps must be positive");
    const double alpha = 1.0 - confidence;
    const double z = two_sided_z(confidence);
    const double R = static_cast<double>(reps);

    RateEstimate out;
    out.reps = reps;
    std::vector<std::size_t> populated;
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
        RateCell c;
        c.n = n_grid[j];
        c.exceedances = counts[j];
        const double k = static_cast<double>(counts[j]);
        c.p_hat = k / R;
        if (counts[j] == 0) {
            c.band_low = 0.0;
            c.band_high = -std::expm1(std::log(alpha) / R);
        } else {
            c.band_low = boost::math::ibeta_inv(k, R - k + 1.0, 0.5 * alpha);
            c.band_high = counts[j] == reps ? 1.0 : boost::math::ibeta_inv(k + 1.0, R - k, 1.0 - 0.5 * alpha);
            populated.push_back(j);
        }
        out.cells.push_back(c);
    }
    const auto y_of = [&](double p, std::size_t n) {
        return std::log(p) + log_n_correction * std::log(static_cast<double>(n));
    };

    if (populated.empty()) {
        const RateCell& last = out.cells.back();
        out.value = out.ci_low = -y_of(last.band_high, last.n) / static_cast<double>(last.n);
        out.ci_high = kInf;
        out.lower_bound_only = true;
        out.note = "rate >= value (no exceedances)";
        return out;
    }
    if (populated.size() == 1) {
        const RateCell& c = out.cells[populated.front()];
        const double dn = static_cast<double>(c.n);
        out.value = -y_of(c.p_hat, c.n) / dn;
        out.ci_low = -y_of(c.band_high, c.n) / dn;
        out.ci_high = -y_of(c.band_low, c.n) / dn;
        out.note = "single populated cell; intercept assumed zero";
    } else {
        double sw = 0.0, sx = 0.0, sy = 0.0;
        std::vector<double> w, x, y;
        for (std::size_t j : populated) {
            const RateCell& c = out.cells[j];
            const double sigma = (std::log(c.band_high) - std::log(c.band_low)) / (2.0 * z);
            w.push_back(1.0 / (sigma * sigma));
            x.push_back(static_cast<double>(c.n));
            y.push_back(y_of(c.p_hat, c.n));
            sw += w.back();
            sx += w.back() * x.back();
            sy += w.back() * y.back();
        }
        const double mx = sx / sw, my = sy / sw;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            sxx += w[i] * (x[i] - mx) * (x[i] - mx);
            sxy += w[i] * (x[i] - mx) * (y[i] - my);
        }
        const double slope = sxy / sxx;
        const double se = std::sqrt(1.0 / sxx);
        out.value = -slope;
        out.ci_low = out.value - z * se;
        out.ci_high = out.value + z * se;
    }
    // An empty cell at n_j after a populated cell at n_i < n_j bounds the
    // rate from below.
    for (std::size_t j = 0; j < out.cells.size(); ++j) {
        if (out.cells[j].exceedances != 0) continue;
        for (std::size_t i : populated) {
            if (out.cells[i].n >= out.cells[j].n) continue;
            const double bound = (y_of(out.cells[i].band_low, out.cells[i].n) -
                                  y_of(out.cells[j].band_high, out.cells[j].n)) /
                                 static_cast<double>(out.cells[j].n - out.cells[i].n);
            if (bound > out.ci_low) {
                out.ci_low = bound;
                out.note = "lower limit raised by empty cells";
            }
        }
    }
    out.value = std::max(out.value, out.ci_low);
    out.ci_high = std::max(out.ci_high, out.value);
    return out;
}

RateEstimate mc_rate(const EstimatorSpec& spec, const ModelPtr& model, double theta, double eps,
                     Side side, std::span<const std::size_t> n_grid, std::size_t reps,
                     std::uint64_t seed, const McConfig& cfg) {
    if (!model) throw InvalidArgument("mc_rate: model is null");
    check_applicable(spec, *model);
    require_grid(n_grid, reps, 10000);
    if (!(eps > 0.0)) throw InvalidArgument("mc_rate: epsilon must be positive");
    const DensityModel& m = *model;
    std::vector<std::uint64_t> counts;
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
        const std::size_t n = n_grid[j];
        counts.push_back(parallel_count(reps, n, cfg, [&](std::size_t r, std::span<double> xs) {
            sample_into(m, theta, derive_key(seed, j, r), xs);
            const double t = point_estimate(spec, m, std::span<const double>(xs)).value;
            const bool above = t > theta + eps;
            const bool below = t < theta - eps;
            return side == Side::plus ? above : side == Side::minus ? below : (above || below);
        }));
    }
    RateEstimate out = fit_rate(n_grid, counts, reps, cfg.confidence);
    out.seed = seed;
    return out;
}

SlopeReport slope_report(const EstimatorSpec& spec, const DensityModel& model, double theta,
                         std::span<const double> eps_grid, const ScalingLaw& law,
                         const BoundsReport& bounds, const QuadratureConfig& quad) {
    if (eps_grid.size() < 2) throw InvalidArgument("slope_report: need at least two epsilon values");
    check_applicable(spec, model);
    SlopeReport rep;
    rep.estimator = spec;
    rep.eps_grid.assign(eps_grid.begin(), eps_grid.end());
    std::sort(rep.eps_grid.begin(), rep.eps_grid.end(), std::greater<>());
    const bool indexed = spec.kind == EstimatorKind::lr || spec.kind == EstimatorKind::shifted_min;
    if (indexed) rep.diagnostics.push_back("estimator parameter follows the epsilon grid");

    for (double eps : rep.eps_grid) {
        EstimatorSpec s = spec;
        if (indexed) s.epsilon = eps;
        rep.rates.push_back(exact_rate(s, model, theta, eps, quad));
        rep.normalized.push_back(rep.rates.back().beta() / law.g(eps));
    }
    const double p = std::min(law.kappa_hat, 1.0);
    const bool finite = std::all_of(rep.normalized.begin(), rep.normalized.end(),
                                    [](double v) { return std::isfinite(v); });
    if (finite) {
        rep.extrapolation = richardson_limit(rep.eps_grid, rep.normalized, p);
        // Normalized rates are nonnegative; extrapolation can dip just below 0.
        rep.slope = std::max(0.0, rep.extrapolation.value);
        if (rep.extrapolation.fallback)
            rep.diagnostics.push_back("normalized rates are not monotone; slope is the smallest-eps value");
        else if (!rep.extrapolation.converged)
            rep.diagnostics.push_back("slope extrapolation did not converge");
    } else {
        rep.slope = kInf;
        rep.diagnostics.push_back("rate is infinite on the grid");
    }

    auto& cmp = rep.comparison;
    cmp.alpha_bar_1 = bounds.alpha_bar_1;
    cmp.alpha_bar_2 = bounds.alpha_bar_2;
    const auto close = [](double v, double target) {
        return std::isfinite(v) && std::fabs(v - target) <= kSlopeTolerance * std::fabs(target);
    };
    cmp.attains_1 = close(rep.slope, cmp.alpha_bar_1);
    cmp.attains_2 = close(rep.slope, cmp.alpha_bar_2);
    cmp.below_alpha_bar_1 = rep.slope <= cmp.alpha_bar_1 * (1.0 + kSlopeTolerance);

    // Edge-coefficient predictions, normalized by eps^kappa of the edge itself.
    const EdgeProfile& e = model.edge();
    const auto measure = [&](double kappa) {
        std::vector<double> v;
        for (std::size_t i = 0; i < rep.eps_grid.size(); ++i)
            v.push_back(rep.rates[i].beta() / std::pow(rep.eps_grid[i], kappa));
        return richardson_limit(rep.eps_grid, v, std::min(kappa, 1.0)).value;
    };
    const auto check = [&](std::string name, double expected, double kappa) {
        EdgeCheck c{std::move(name), expected, measure(kappa), false};
        c.holds = close(c.measured, c.expected);
        rep.edge_check = c;
    };
    if (finite && e.A1 > 0.0) {
        if (spec.kind == EstimatorKind::min_shift) {
            check("min_shift: A1 eps^k1 / k1", e.A1 / e.kappa1, e.kappa1);
        } else if (spec.kind == EstimatorKind::shifted_min) {
            check("shifted_min: A1 2^k1 / k1", e.A1 * std::pow(2.0, e.kappa1) / e.kappa1, e.kappa1);
        } else if (spec.kind == EstimatorKind::cc && e.A2 > 0.0 &&
                   std::fabs(e.kappa1 - e.kappa2) <= 1e-12 * e.kappa1 &&
                   std::fabs(*spec.lambda - optimal_lambda(e)) <= 1e-9) {
            const double k = e.kappa1;
            const double value = std::pow(std::pow(e.A1, 1.0 / k) + std::pow(e.A2, 1.0 / k), k) / k;
            check("cc(lambda_0): (A1^(1/k) + A2^(1/k))^k / k", value, k);
        }
    }
    return rep;
}

TestError test_exponents(const ModelPtr& model, double theta1, double theta2,
                         std::span<const std::size_t> n_grid, std::size_t reps, std::uint64_t seed,
                         const McConfig& cfg) {
    if (!model) throw InvalidArgument("test_exponents: model is null");
    require_grid(n_grid, reps, 1000);
    const DensityModel& m = *model;
    const double lo = std::max(m.support().lower + theta1, m.support().lower + theta2);
    const double hi = std::min(m.support().upper + theta1, m.support().upper + theta2);
    if (!(lo < hi)) throw InvalidArgument("test_exponents: shifted supports do not overlap");

    TestError out;
    out.n_grid.assign(n_grid.begin(), n_grid.end());
    QuadratureConfig quad;
    ChernoffResult chernoff;
    if (theta1 != theta2)
        chernoff = chernoff_exponent(renyi_curve(model, theta1, theta2, default_s_grid(), quad));
    out.target = chernoff.value;

    // log f(x - theta1) - log f(x - theta2) summed; +-inf when one side vanishes.
    const auto llr = [&](std::span<const double> xs) {
        double sum = 0.0;
        for (double x : xs) {
            const double lp = m.logpdf(x - theta1);
            const double lq = m.logpdf(x - theta2);
            if (lq == -kInf && lp > -kInf) return kInf;
            if (lp == -kInf && lq > -kInf) return -kInf;
            sum += lp - lq;
        }
        return sum;
    };

    // Continuous per-observation log ratio with an interior Chernoff optimum:
    // the tail carries an n^(-1/2) prefactor.
    {
        std::vector<double> probe(64);
        sample_into(m, theta1, derive_key(seed, ~std::uint64_t{0}, 0), probe);
        std::vector<double> finite;
        for (double x : probe) {
            const double d = m.logpdf(x - theta1) - m.logpdf(x - theta2);
            if (std::isfinite(d)) finite.push_back(d);
        }
        std::sort(finite.begin(), finite.end());
        const bool continuous = finite.size() >= 2 && finite.back() - finite.front() > 1e-12;
        out.bahadur_rao = continuous && chernoff.s_star > 1e-3 && chernoff.s_star < 1.0 - 1e-3;
    }

    std::vector<std::uint64_t> k1, k2, kc;
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
        const std::size_t n = n_grid[j];
        k1.push_back(parallel_count(reps, n, cfg, [&](std::size_t r, std::span<double> xs) {
            sample_into(m, theta1, derive_key(seed, 2 * j, r), xs);
            return llr(xs) < 0.0;
        }));
        k2.push_back(parallel_count(reps, n, cfg, [&](std::size_t r, std::span<double> xs) {
            sample_into(m, theta2, derive_key(seed, 2 * j + 1, r), xs);
            return llr(xs) >= 0.0;
        }));
        kc.push_back(k1.back() + k2.back());
        out.e1_hat.push_back(static_cast<double>(k1.back()) / static_cast<double>(reps));
        out.e2_hat.push_back(static_cast<double>(k2.back()) / static_cast<double>(reps));
    }
    const double corr = out.bahadur_rao ? 0.5 : 0.0;
    out.e1_star = fit_rate(n_grid, k1, reps, cfg.confidence, corr);
    out.e2_star = fit_rate(n_grid, k2, reps, cfg.confidence, corr);
    // (e1 + e2) / 2 is the error of a fair mixture: 2 reps draws per n.
    out.combined = fit_rate(n_grid, kc, 2 * reps, cfg.confidence, corr);
    for (RateEstimate* r : {&out.e1_star, &out.e2_star, &out.combined}) {
        r->seed = seed;
        r->value = std::max(r->value, 0.0);
        r->ci_high = std::max(r->ci_high, r->value);
    }
    return out;
}

} // namespace ldlab
