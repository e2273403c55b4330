#include "ldlab/divergence.hpp"

#include "ldlab/errors.hpp"
#include "ldlab/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace ldlab {

namespace {

// w*expm1(d) - expm1(w*d) for d <= 0 and w in [0, 1]; nonnegative.
double deficit_kernel(double d, double w) {
    if (d == 0.0) return 0.0;
    if (std::fabs(d) < 0.1) {
        // sum_{k>=2} (w - w^k) d^k / k!
        double sum = 0.0;
        double dk = d;
        double wk = w;
        double fact = 1.0;
        for (int k = 2; k <= 14; ++k) {
            dk *= d;
            wk *= w;
            fact *= k;
            sum += (w - wk) * dk / fact;
        }
        return sum;
    }
    return w * std::expm1(d) - std::expm1(w * d);
}

struct Overlap {
    double lo, hi;
    double outside_p, outside_q;
    bool empty;
};

Overlap overlap(const DensityModel& model, double theta1, double theta2) {
    const auto& sup = model.support();
    const double t_hi = std::max(theta1, theta2);
    const double t_lo = std::min(theta1, theta2);
    Overlap o{};
    o.lo = sup.lower + t_hi;
    o.hi = sup.upper + t_lo;
    o.empty = !(o.lo < o.hi);
    // Mass of each density outside the overlap; standardized coordinates.
    o.outside_p = model.cdf(o.lo - theta1) + model.sf(o.hi - theta1);
    o.outside_q = model.cdf(o.lo - theta2) + model.sf(o.hi - theta2);
    return o;
}

} // namespace

double renyi_divergence(const DensityModel& model, double theta1, double theta2, double s,
                        const QuadratureConfig& quad) {
    if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("renyi_divergence: s must lie in (0, 1)");
    if (theta1 == theta2) return 0.0;
    const Overlap o = overlap(model, theta1, theta2);
    if (o.empty) return kInf;

    // s p + (1-s) q - p^s q^(1-s) written around a base density b with the
    // other one equal to b e^d; w is the exponent carried by the other one.
    const auto deficit_at = [](double lb, double d, double w) {
        if (d == -kInf) return lb == -kInf ? 0.0 : std::exp(lb) * (1.0 - w);
        if (d <= 0.0) return std::exp(lb) * deficit_kernel(d, w);
        return std::exp(lb + d) * deficit_kernel(-d, 1.0 - w);
    };

    // Near a finite support end the integrand is written in terms of the
    // distance to that end, based on the density whose edge it is, so small
    // offsets are not lost to rounding.
    const auto& sup = model.support();
    const auto& edge = model.edge();
    const double t_hi = std::max(theta1, theta2);
    const double t_lo = std::min(theta1, theta2);
    const double shift = t_hi - t_lo;
    const bool p_is_high = theta1 == t_hi;
    const double w_low_end = p_is_high ? 1.0 - s : s;
    const double w_high_end = p_is_high ? s : 1.0 - s;
    const auto from_lower = [&](double y) {
        return deficit_at(model.logpdf_above_lower(y), model.log_ratio_above_lower(y, shift),
                          w_low_end);
    };
    const auto from_upper = [&](double z) {
        return deficit_at(model.logpdf_below_upper(z), model.log_ratio_below_upper(z, shift),
                          w_high_end);
    };

    std::vector<double> cuts;
    for (double b : model.breakpoints()) {
        cuts.push_back(b + theta1);
        cuts.push_back(b + theta2);
    }
    const auto cuts_in = [&cuts](double lo, double hi, auto map) {
        std::vector<double> out;
        for (double c : cuts)
            if (c > lo && c < hi) out.push_back(map(c));
        std::sort(out.begin(), out.end());
        return out;
    };

    // Accuracy is judged against the whole deficit, which includes the mass
    // outside the overlap.
    QuadratureConfig qc = quad;
    qc.abs_tol = std::max(quad.abs_tol,
                          quad.rel_tol * (s * o.outside_p + (1.0 - s) * o.outside_q));

    double value = 0.0;
    if (sup.lower_finite() && sup.upper_finite()) {
        const double mid = 0.5 * (o.lo + o.hi);
        const auto lc = cuts_in(o.lo, mid, [&](double c) { return c - o.lo; });
        const auto rc = cuts_in(mid, o.hi, [&](double c) { return o.hi - c; });
        value = integrate(from_lower, 0.0, mid - o.lo, qc,
                          {substitution_power(edge.kappa1, quad), 1.0}, lc).value +
                integrate(from_upper, 0.0, o.hi - mid, qc,
                          {substitution_power(edge.kappa2, quad), 1.0}, rc).value;
    } else if (sup.lower_finite()) {
        const auto lc = cuts_in(o.lo, kInf, [&](double c) { return c - o.lo; });
        value = integrate(from_lower, 0.0, kInf, qc,
                          {substitution_power(edge.kappa1, quad), 1.0}, lc).value;
    } else if (sup.upper_finite()) {
        const auto rc = cuts_in(-kInf, o.hi, [&](double c) { return o.hi - c; });
        value = integrate(from_upper, 0.0, kInf, qc,
                          {substitution_power(edge.kappa2, quad), 1.0}, rc).value;
    } else {
        const auto integrand = [&](double x) {
            return deficit_at(model.logpdf(x - theta2), model.log_ratio(x - theta2, theta2 - theta1), s);
        };
        std::sort(cuts.begin(), cuts.end());
        value = integrate(integrand, o.lo, o.hi, qc, {}, cuts).value;
    }
    const double deficit = s * o.outside_p + (1.0 - s) * o.outside_q + value;
    if (deficit >= 1.0) return kInf;
    return -std::log1p(-deficit);
}

RenyiEndpoints renyi_endpoints(const DensityModel& model, double theta1, double theta2) {
    if (theta1 == theta2) return {0.0, 0.0};
    const Overlap o = overlap(model, theta1, theta2);
    if (o.empty) return {kInf, kInf};
    // q-mass on supp p equals q-mass on the overlap, and vice versa.
    const auto neg_log_mass = [](double outside) {
        return outside >= 1.0 ? kInf : -std::log1p(-outside);
    };
    return {neg_log_mass(o.outside_q), neg_log_mass(o.outside_p)};
}

RenyiCurve::RenyiCurve(ModelPtr model, double theta1, double theta2, std::vector<double> s_grid,
                       const QuadratureConfig& quad)
    : model_(std::move(model)), theta1_(theta1), theta2_(theta2), quad_(quad),
      s_grid_(std::move(s_grid)) {
    if (!model_) throw InvalidArgument("renyi_curve: null model");
    for (std::size_t i = 0; i < s_grid_.size(); ++i) {
        if (!(s_grid_[i] > 0.0 && s_grid_[i] < 1.0))
            throw InvalidArgument("renyi_curve: grid points must lie in (0, 1)");
        if (i > 0 && !(s_grid_[i] > s_grid_[i - 1]))
            throw InvalidArgument("renyi_curve: grid must be strictly increasing");
    }
    values_.reserve(s_grid_.size());
    for (double s : s_grid_) values_.push_back(renyi_divergence(*model_, theta1_, theta2_, s, quad_));
    endpoints_ = renyi_endpoints(*model_, theta1_, theta2_);
}

double RenyiCurve::at(double s) const {
    if (s <= 0.0) return endpoints_.left;
    if (s >= 1.0) return endpoints_.right;
    return renyi_divergence(*model_, theta1_, theta2_, s, quad_);
}

RenyiCurve renyi_curve(ModelPtr model, double theta1, double theta2,
                       std::span<const double> s_grid, const QuadratureConfig& quad) {
    return RenyiCurve(std::move(model), theta1, theta2,
                      std::vector<double>(s_grid.begin(), s_grid.end()), quad);
}

std::vector<double> default_s_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
    return g;
}

ChernoffResult chernoff_exponent(const RenyiCurve& curve) {
    if (curve.theta1() == curve.theta2()) return {0.0, 0.5};
    std::vector<double> grid{0.0};
    std::vector<double> vals{curve.endpoint_left()};
    for (std::size_t i = 0; i < curve.s_grid().size(); ++i) {
        grid.push_back(curve.s_grid()[i]);
        vals.push_back(curve.values()[i]);
    }
    grid.push_back(1.0);
    vals.push_back(curve.endpoint_right());

    std::size_t best = 0;
    for (std::size_t i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[best]) best = i;
    ChernoffResult out{vals[best], grid[best]};
    if (std::isinf(out.value)) return out;

    const double lo = grid[best == 0 ? 0 : best - 1];
    const double hi = grid[best + 1 == grid.size() ? best : best + 1];
    const ScalarOptimum refined =
        golden_section_max([&curve](double s) { return curve.at(s); }, lo, hi, 1e-9);
    if (refined.value > out.value) out = {refined.value, refined.x};
    return out;
}

double hoeffding_exponent(const RenyiCurve& curve, double r) {
    if (!(r >= 0.0)) throw InvalidArgument("hoeffding_exponent: r must be nonnegative");
    const double c1 = curve.endpoint_right();
    const double tie_tol = 1e-12 * std::max(1.0, r);
    if (c1 > r + tie_tol) return kInf;

    const auto h = [&curve, r](double s) { return (curve.at(s) - s * r) / (1.0 - s); };

    // (I^s - s r)/(1 - s) is unimodal in s because I^s is concave.
    std::vector<double> grid{0.0};
    for (double s : curve.s_grid()) grid.push_back(s);
    for (double s : {0.99, 0.999, 1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6})
        if (s > grid.back()) grid.push_back(s);
    double best = grid_then_golden_max(h, grid, 1e-10).value;

    if (std::fabs(c1 - r) <= tie_tol) {
        // Supremum approached as s -> 1; extrapolate h(1 - d) linearly in d.
        const double d1 = 1e-4;
        const double d2 = 1e-5;
        const double limit = (10.0 * h(1.0 - d2) - h(1.0 - d1)) / 9.0;
        best = std::max(best, limit);
    }
    return best;
}

} // namespace ldlab
