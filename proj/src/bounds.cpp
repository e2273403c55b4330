#include "ldlab/bounds.hpp"

#include "ldlab/divergence.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ldlab {

namespace {

void require_positive_monotone(std::span<const double> eps, const char* what) {
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0) || !std::isfinite(eps[i]))
            throw InvalidArgument(std::string(what) + ": grid values must be positive and finite");
        if (i > 0 && eps[i] == eps[i - 1])
            throw InvalidArgument(std::string(what) + ": grid values must be distinct");
    }
    for (std::size_t i = 2; i < eps.size(); ++i)
        if ((eps[i] > eps[i - 1]) != (eps[i - 1] > eps[i - 2]))
            throw InvalidArgument(std::string(what) + ": grid must be monotone");
}

struct LineFit {
    double slope, intercept, r_squared;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return {slope, my - slope * mx, r2};
}

// Points sorted by decreasing eps, as the extrapolation expects.
std::vector<double> decreasing(std::span<const double> eps) {
    std::vector<double> e(eps.begin(), eps.end());
    std::sort(e.begin(), e.end(), std::greater<>());
    return e;
}

double log_add_exp(double a, double b) {
    const double m = std::max(a, b);
    if (m == -kInf) return -kInf;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

} // namespace

double ScalingLaw::g(double eps) const {
    if (table_eps.empty()) return std::pow(eps, kappa_hat);
    // Log-log interpolation inside the table, power law with kappa_hat outside.
    const auto n = table_eps.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [this](auto a, auto b) { return table_eps[a] < table_eps[b]; });
    if (eps <= table_eps[idx.front()])
        return table_g[idx.front()] * std::pow(eps / table_eps[idx.front()], kappa_hat);
    if (eps >= table_eps[idx.back()])
        return table_g[idx.back()] * std::pow(eps / table_eps[idx.back()], kappa_hat);
    for (std::size_t k = 1; k < n; ++k) {
        const double e0 = table_eps[idx[k - 1]], e1 = table_eps[idx[k]];
        if (eps <= e1) {
            const double w = std::log(eps / e0) / std::log(e1 / e0);
            return std::exp((1.0 - w) * std::log(table_g[idx[k - 1]]) + w * std::log(table_g[idx[k]]));
        }
    }
    return table_g[idx.back()];
}

std::vector<double> default_eps_grid() {
    std::vector<double> g;
    for (int i = 0; i < 5; ++i) g.push_back(std::pow(10.0, -3.0 - 0.5 * i));
    return g;
}

ScalingLaw fit_order(const ModelPtr& model, double theta, std::span<const double> eps_grid,
                     const QuadratureConfig& quad, double s) {
    if (!model) throw InvalidArgument("fit_order: null model");
    if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("fit_order: s must lie in (0, 1)");
    if (eps_grid.size() < 5) throw InvalidArgument("fit_order: need at least 5 grid points");
    require_positive_monotone(eps_grid, "fit_order");
    const double step = std::log(eps_grid[1] / eps_grid[0]);
    for (std::size_t i = 1; i < eps_grid.size(); ++i)
        if (std::fabs(std::log(eps_grid[i] / eps_grid[i - 1]) - step) > 1e-6 * std::fabs(step))
            throw InvalidArgument("fit_order: grid must be geometric");

    ScalingLaw law;
    law.source_s = s;
    law.eps_grid = decreasing(eps_grid);
    std::vector<double> x;
    for (double e : law.eps_grid) {
        const double v = renyi_divergence(*model, theta - 0.5 * e, theta + 0.5 * e, s, quad);
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument("fit_order: divergence is not finite and positive at eps = " +
                                  std::to_string(e) + "; use smaller shifts");
        x.push_back(std::log(e));
        law.log_values.push_back(std::log(v));
    }
    const LineFit fit = least_squares(x, law.log_values);
    law.kappa_hat = fit.slope;
    law.intercept = fit.intercept;
    law.r_squared = fit.r_squared;
    law.poor_fit = fit.r_squared < 0.99;
    if (!(law.kappa_hat > 0.0)) throw ConvergenceError("fit_order: fitted order is not positive");
    return law;
}

ScalingLaw tabulated_law(std::span<const double> eps, std::span<const double> g) {
    if (eps.size() != g.size() || eps.size() < 2)
        throw InvalidArgument("tabulated_law: need at least two (eps, g) pairs of equal length");
    require_positive_monotone(eps, "tabulated_law");
    for (double v : g)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument("tabulated_law: g values must be positive and finite");
    std::vector<std::size_t> idx(eps.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&eps](auto a, auto b) { return eps[a] < eps[b]; });
    for (std::size_t k = 1; k < idx.size(); ++k)
        if (!(g[idx[k]] > g[idx[k - 1]]))
            throw InvalidArgument("tabulated_law: g must be strictly increasing in eps");

    ScalingLaw law;
    law.table_eps.assign(eps.begin(), eps.end());
    law.table_g.assign(g.begin(), g.end());
    law.eps_grid = decreasing(eps);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        x.push_back(std::log(eps[i]));
        y.push_back(std::log(g[i]));
    }
    const LineFit fit = least_squares(x, y);
    law.kappa_hat = fit.slope;
    law.intercept = fit.intercept;
    law.r_squared = fit.r_squared;
    law.poor_fit = fit.r_squared < 0.99;
    law.log_values = std::move(y);
    return law;
}

Extrapolation richardson_limit(std::span<const double> eps, std::span<const double> values,
                               double p, double tol) {
    if (eps.size() != values.size() || values.empty())
        throw InvalidArgument("richardson_limit: need matching, nonempty eps and values");
    const std::size_t m = values.size();
    const double last = values[m - 1];
    if (m == 1) return {last, 0.0, false, false};
    if (!std::isfinite(last)) return {last, kInf, false, true};

    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return {0.0, 0.0, true, false};

    const double tiny = 1e-9 * scale;
    int sign = 0;
    bool monotone = true;
    double max_diff = 0.0;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double d = values[j + 1] - values[j];
        max_diff = std::max(max_diff, std::fabs(d));
        if (std::fabs(d) <= tiny) continue;
        const int sj = d > 0.0 ? 1 : -1;
        if (sign != 0 && sj != sign) monotone = false;
        sign = sj;
    }
    if (max_diff <= tiny) return {last, max_diff, true, false};
    if (!monotone) return {last, std::fabs(values[m - 1] - values[m - 2]), false, true};

    std::vector<double> r;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double ratio = std::pow(eps[j + 1] / eps[j], p);
        r.push_back((values[j + 1] - ratio * values[j]) / (1.0 - ratio));
    }
    const double value = r.back();
    const double change = r.size() >= 2 ? std::fabs(r[r.size() - 1] - r[r.size() - 2])
                                        : std::fabs(values[m - 1] - values[m - 2]);
    return {value, change, change <= tol * std::max(std::fabs(value), 1e-300), false};
}

LimitCurve::LimitCurve(std::vector<double> s_grid, std::vector<double> values,
                       std::vector<Extrapolation> diagnostics, double endpoint_left,
                       double endpoint_right, double kappa,
                       std::function<double(double)> evaluator)
    : s_grid_(std::move(s_grid)), values_(std::move(values)), diagnostics_(std::move(diagnostics)),
      endpoint_left_(endpoint_left), endpoint_right_(endpoint_right), kappa_(kappa),
      evaluator_(std::move(evaluator)) {
    if (s_grid_.size() != values_.size())
        throw InvalidArgument("LimitCurve: grid and values differ in length");
    for (std::size_t i = 0; i < s_grid_.size(); ++i) {
        if (!(s_grid_[i] > 0.0 && s_grid_[i] < 1.0))
            throw InvalidArgument("LimitCurve: grid points must lie in (0, 1)");
        if (i > 0 && !(s_grid_[i] > s_grid_[i - 1]))
            throw InvalidArgument("LimitCurve: grid must be strictly increasing");
    }
}

LimitCurve LimitCurve::from_function(std::span<const double> s_grid,
                                     const std::function<double(double)>& f, double kappa) {
    std::vector<double> values;
    for (double s : s_grid) values.push_back(f(s));
    std::vector<Extrapolation> diag(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) diag[i] = {values[i], 0.0, true, false};
    return LimitCurve(std::vector<double>(s_grid.begin(), s_grid.end()), std::move(values),
                      std::move(diag), f(0.0), f(1.0), kappa, f);
}

double LimitCurve::at(double s) const {
    if (s <= 0.0) return endpoint_left_;
    if (s >= 1.0) return endpoint_right_;
    const auto it = std::lower_bound(s_grid_.begin(), s_grid_.end(), s);
    if (it != s_grid_.end() && *it == s) return values_[static_cast<std::size_t>(it - s_grid_.begin())];
    if (evaluator_) return evaluator_(s);
    // Linear interpolation through the grid and the endpoint limits.
    const std::size_t k = static_cast<std::size_t>(it - s_grid_.begin());
    const double s0 = k == 0 ? 0.0 : s_grid_[k - 1];
    const double v0 = k == 0 ? endpoint_left_ : values_[k - 1];
    const double s1 = k == s_grid_.size() ? 1.0 : s_grid_[k];
    const double v1 = k == s_grid_.size() ? endpoint_right_ : values_[k];
    return v0 + (v1 - v0) * (s - s0) / (s1 - s0);
}

int LimitCurve::unstable_points() const {
    int n = 0;
    for (const auto& d : diagnostics_)
        if (!d.converged || d.fallback) ++n;
    return n;
}

LimitCurve limit_curve(const ModelPtr& model, double theta, const ScalingLaw& law,
                       std::span<const double> s_grid, const QuadratureConfig& quad) {
    if (!model) throw InvalidArgument("limit_curve: null model");
    if (law.eps_grid.size() < 2) throw InvalidArgument("limit_curve: law has fewer than two eps");
    const std::vector<double> eps = decreasing(law.eps_grid);
    const double p = std::min(law.kappa_hat, 1.0);
    std::vector<double> gs;
    for (double e : eps) gs.push_back(law.g(e));

    auto extrapolate_s = [model, theta, eps, gs, p, quad](double s) {
        std::vector<double> v;
        for (std::size_t j = 0; j < eps.size(); ++j)
            v.push_back(renyi_divergence(*model, theta - 0.5 * eps[j], theta + 0.5 * eps[j], s, quad) /
                        gs[j]);
        return richardson_limit(eps, v, p);
    };

    std::vector<double> values;
    std::vector<Extrapolation> diag;
    for (double s : s_grid) {
        diag.push_back(extrapolate_s(s));
        values.push_back(std::max(diag.back().value, 0.0));
    }
    std::vector<double> left, right;
    for (std::size_t j = 0; j < eps.size(); ++j) {
        const RenyiEndpoints ends = renyi_endpoints(*model, theta - 0.5 * eps[j], theta + 0.5 * eps[j]);
        left.push_back(ends.left / gs[j]);
        right.push_back(ends.right / gs[j]);
    }
    const double el = std::max(richardson_limit(eps, left, p).value, 0.0);
    const double er = std::max(richardson_limit(eps, right, p).value, 0.0);
    return LimitCurve(std::vector<double>(s_grid.begin(), s_grid.end()), std::move(values),
                      std::move(diag), el, er, law.kappa_hat,
                      [extrapolate_s](double s) { return std::max(extrapolate_s(s).value, 0.0); });
}

BoundValue alpha_bar_1(const LimitCurve& curve, double kappa) {
    std::vector<double> grid{0.0};
    grid.insert(grid.end(), curve.s_grid().begin(), curve.s_grid().end());
    grid.push_back(1.0);
    const ScalarOptimum best =
        grid_then_golden_max([&curve](double s) { return curve.at(s); }, grid, 1e-8);
    return {std::exp2(kappa) * best.value, best.x};
}

namespace {

KappaBranch resolve_branch(double kappa, KappaBranch branch) {
    if (branch != KappaBranch::automatic) return branch;
    if (std::fabs(kappa - 1.0) <= kKappaOneTolerance) return KappaBranch::one;
    return kappa < 1.0 ? KappaBranch::below_one : KappaBranch::above_one;
}

// I/(s(1-s)) * (s^m + (1-s)^m)^(1/m) with m = 1/(kappa-1), in log-sum-exp form.
double h_value(double I, double s, double kappa) {
    if (!(I > 0.0)) return 0.0;
    const double m = 1.0 / (kappa - 1.0);
    const double lse = log_add_exp(m * std::log(s), m * std::log1p(-s));
    return std::exp(std::log(I) - std::log(s) - std::log1p(-s) + (kappa - 1.0) * lse);
}

} // namespace

BoundValue alpha_bar_2(const LimitCurve& curve, double kappa, KappaBranch branch) {
    switch (resolve_branch(kappa, branch)) {
    case KappaBranch::one:
        return {2.0 * curve.at(0.5), 0.5};
    case KappaBranch::below_one: {
        // The s -> 0 and s -> 1 limits of h are the curve's endpoint values.
        std::vector<double> grid{0.0};
        grid.insert(grid.end(), curve.s_grid().begin(), curve.s_grid().end());
        grid.push_back(1.0);
        const auto h = [&curve, kappa](double s) {
            if (s <= 0.0) return curve.endpoint_left();
            if (s >= 1.0) return curve.endpoint_right();
            return h_value(curve.at(s), s, kappa);
        };
        const ScalarOptimum best = grid_then_golden_max(h, grid, 1e-8);
        return {best.value, best.x};
    }
    case KappaBranch::above_one:
    case KappaBranch::automatic: {
        const auto h = [&curve, kappa](double s) { return h_value(curve.at(s), s, kappa); };
        const ScalarOptimum best = grid_then_golden_min(h, curve.s_grid(), 1e-8);
        return {best.value, best.x};
    }
    }
    return {};
}

BoundsReport coincidence(const LimitCurve& curve, double kappa) {
    BoundsReport rep;
    rep.kappa = kappa;
    const BoundValue a1 = alpha_bar_1(curve, kappa);
    const BoundValue a2 = alpha_bar_2(curve, kappa);
    rep.alpha_bar_1 = a1.value;
    rep.s_witness_1 = a1.s_witness;
    rep.alpha_bar_2 = a2.value;
    rep.s_witness_2 = a2.s_witness;

    const double half = curve.at(0.5);
    const double sup = a1.value / std::exp2(kappa);
    const double mid_bound = std::exp2(kappa) * half;
    rep.condition_163_holds = std::fabs(sup - half) <= kCoincidenceTolerance * half;
    rep.alpha2_at_half_holds = std::fabs(mid_bound - a2.value) <= kCoincidenceTolerance * mid_bound;
    const bool kappa_le_one = resolve_branch(kappa, KappaBranch::automatic) != KappaBranch::above_one;
    rep.coincide = kappa_le_one ? rep.condition_163_holds
                                : rep.condition_163_holds && rep.alpha2_at_half_holds;
    rep.order_holds = rep.alpha_bar_1 >= rep.alpha_bar_2 - 1e-9;
    if (!rep.order_holds) rep.diagnostics.push_back("alpha_bar_1 < alpha_bar_2");
    if (const int k = curve.unstable_points(); k > 0)
        rep.diagnostics.push_back(std::to_string(k) + " limit-curve points did not extrapolate cleanly");
    return rep;
}

double duality_check(const std::function<double(double)>& f, double s) {
    if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("duality_check: s must lie in (0, 1)");
    std::vector<double> t_grid{1e-4, 1e-3};
    for (int i = 1; i < 200; ++i) t_grid.push_back(0.005 * i);
    for (double t : {1.0 - 1e-3, 1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6}) t_grid.push_back(t);

    double fmax = 0.0, slope = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        fmax = std::max(fmax, std::fabs(f(t_grid[i])));
        if (i > 0)
            slope = std::max(slope, std::fabs(f(t_grid[i]) - f(t_grid[i - 1])) /
                                        (t_grid[i] - t_grid[i - 1]));
    }

    const auto inner = [&](double x) {
        const auto g = [&](double t) { return ((s - t) * x + (1.0 - s) * f(t)) / (1.0 - t); };
        return grid_then_golden_max(g, t_grid, 1e-12).value;
    };
    const double x_hi = 2.0 * (fmax + slope) + 1.0;
    std::vector<double> x_grid;
    for (int i = 0; i <= 400; ++i) x_grid.push_back(x_hi * i / 400.0);
    return grid_then_golden_min(inner, x_grid, 1e-12).value;
}

double duality_check(std::span<const double> t_grid, std::span<const double> f_values, double s) {
    if (t_grid.size() != f_values.size() || t_grid.size() < 2)
        throw InvalidArgument("duality_check: need at least two samples of matching length");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0 && t_grid[i] < 1.0))
            throw InvalidArgument("duality_check: sample points must lie in (0, 1)");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw InvalidArgument("duality_check: sample points must be increasing");
    }
    const std::vector<double> ts(t_grid.begin(), t_grid.end());
    const std::vector<double> fs(f_values.begin(), f_values.end());
    const auto interp = [&ts, &fs](double t) {
        std::size_t k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
        k = std::clamp<std::size_t>(k, 1, ts.size() - 1);
        const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
        return fs[k - 1] + w * (fs[k] - fs[k - 1]);
    };
    return duality_check(interp, s);
}

} // namespace ldlab
