#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ldlab {

struct QuadratureConfig {
    double abs_tol = 1e-30;
    double rel_tol = 1e-12;
    int max_subdivisions = 4000;
    // Power used for x = a + u^(1/k) at singular finite endpoints. 0 means
    // "derive k from the integrand" (callers pass the edge exponent); any
    // positive value forces that power at every singular end.
    double edge_power = 0.0;
};

/// Substitution powers at the two ends of an integration range. A power
/// k < 1 maps x = a + u^(1/k), which turns an (x-a)^(k-1) singularity into a
/// bounded integrand. k >= 1 leaves the end untouched.
struct EndpointPowers {
    double left = 1.0;
    double right = 1.0;
};

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    int subdivisions = 0;
};

using Integrand = std::function<double(double)>;

/// Adaptive 21-point Gauss-Kronrod quadrature over [lo, hi]; either end may
/// be infinite. Interior breakpoints (kinks of the integrand) may be passed
/// and are honoured as subinterval boundaries. Throws ConvergenceError when
/// the requested tolerance is not met within cfg.max_subdivisions.
QuadResult integrate(const Integrand& f, double lo, double hi,
                     const QuadratureConfig& cfg = {},
                     EndpointPowers powers = {},
                     std::span<const double> breakpoints = {});

/// Resolve the substitution power for an edge with density exponent kappa,
/// taking cfg.edge_power into account.
double substitution_power(double kappa, const QuadratureConfig& cfg);

} // namespace ldlab
