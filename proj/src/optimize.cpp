#include "ldlab/optimize.hpp"

#include "ldlab/errors.hpp"

#include <cmath>
#include <limits>

namespace ldlab {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;

double sanitize(double v) {
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

} // namespace

ScalarOptimum golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 double x_tol, int max_iter) {
    if (!(lo <= hi)) throw InvalidArgument("golden_section_max: empty bracket");
    double a = lo;
    double b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = sanitize(f(c));
    double fd = sanitize(f(d));
    int it = 0;
    while (b - a > x_tol && it < max_iter) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = sanitize(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = sanitize(f(d));
        }
        ++it;
    }
    ScalarOptimum best{c, fc, it};
    if (fd > best.value) best = {d, fd, it};
    // The bracket ends are legitimate candidates for monotone objectives.
    for (double x : {lo, hi}) {
        const double v = sanitize(f(x));
        if (v > best.value) best = {x, v, it};
    }
    return best;
}

ScalarOptimum grid_then_golden_max(const std::function<double(double)>& f,
                                   std::span<const double> grid, double x_tol) {
    if (grid.empty()) throw InvalidArgument("grid_then_golden_max: empty grid");
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = sanitize(f(grid[i]));
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    ScalarOptimum out{grid[best], best_value, 0};
    if (grid.size() < 2) return out;
    const double lo = grid[best == 0 ? 0 : best - 1];
    const double hi = grid[best + 1 == grid.size() ? best : best + 1];
    ScalarOptimum refined = golden_section_max(f, lo, hi, x_tol);
    if (refined.value > out.value) out = refined;
    return out;
}

ScalarOptimum grid_then_golden_min(const std::function<double(double)>& f,
                                   std::span<const double> grid, double x_tol) {
    auto neg = [&f](double x) {
        const double v = f(x);
        return std::isnan(v) ? -std::numeric_limits<double>::infinity() : -v;
    };
    ScalarOptimum r = grid_then_golden_max(neg, grid, x_tol);
    r.value = -r.value;
    return r;
}

double bisect_boundary(const std::function<bool(double)>& pred, double lo, double hi,
                       double x_tol, int max_iter) {
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi) || hi - lo <= x_tol) break;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace ldlab
