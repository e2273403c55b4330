#pragma once

#include <functional>
#include <span>

namespace ldlab {

struct ScalarOptimum {
    double x = 0.0;
    double value = 0.0;
    int iterations = 0;
};

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
ScalarOptimum golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 double x_tol = 1e-10, int max_iter = 200);

/// Scan `grid` (strictly increasing), then refine the best grid point by
/// golden section between its neighbours. Suitable for concave or unimodal
/// objectives. Infinite or NaN objective values are treated as -inf.
ScalarOptimum grid_then_golden_max(const std::function<double(double)>& f,
                                   std::span<const double> grid, double x_tol = 1e-10);

/// Same, for a minimum.
ScalarOptimum grid_then_golden_min(const std::function<double(double)>& f,
                                   std::span<const double> grid, double x_tol = 1e-10);

/// Bisection for the boundary of a monotone predicate: given pred(lo) == false
/// and pred(hi) == true, returns a point within x_tol of the switch.
double bisect_boundary(const std::function<bool(double)>& pred, double lo, double hi,
                       double x_tol = 0.0, int max_iter = 200);

} // namespace ldlab
