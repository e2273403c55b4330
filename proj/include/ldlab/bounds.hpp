#pragma once

#include "ldlab/family.hpp"
#include "ldlab/quadrature.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ldlab {

/// Order of the divergence under a small shift: I^s(f_{theta-eps/2} || f_{theta+eps/2})
/// behaves like g(eps) with g(eps) = eps^kappa_hat, or a user-supplied table.
struct ScalingLaw {
    double kappa_hat = 1.0;
    double intercept = 0.0;
    std::vector<double> eps_grid;
    /// log I^s at each grid point, as used by the fit.
    std::vector<double> log_values;
    double r_squared = 1.0;
    double source_s = 0.5;
    /// Set when r^2 < 0.99.
    bool poor_fit = false;
    /// Optional tabulated g; when present it replaces eps^kappa_hat.
    std::vector<double> table_eps;
    std::vector<double> table_g;

    double g(double eps) const;
};

/// Geometric grid from 1e-3 down to 1e-5, five points.
std::vector<double> default_eps_grid();

/// Least-squares slope of log I^s against log eps over eps_grid (>= 5 points,
/// geometric, small enough for the shifted supports to overlap).
ScalingLaw fit_order(const ModelPtr& model, double theta, std::span<const double> eps_grid,
                     const QuadratureConfig& quad = {}, double s = 0.5);

/// Law built from a tabulated g (eps strictly positive, g strictly increasing).
/// kappa_hat is the log-log slope of the table.
ScalingLaw tabulated_law(std::span<const double> eps, std::span<const double> g);

struct Extrapolation {
    double value = 0.0;
    /// Difference between the last two extrapolated values.
    double change = 0.0;
    bool converged = false;
    /// Sequence was not monotone; value is the smallest-eps raw value.
    bool fallback = false;
};

/// Limit of values[j] as eps[j] -> 0 (eps decreasing) assuming an error term
/// of order eps^p. Near-constant sequences count as converged.
Extrapolation richardson_limit(std::span<const double> eps, std::span<const double> values,
                               double p, double tol = 1e-3);

/// s -> I^s_g on [0, 1]. Values between grid points are obtained from the
/// evaluator when one is attached.
class LimitCurve {
public:
    LimitCurve() = default;
    LimitCurve(std::vector<double> s_grid, std::vector<double> values,
               std::vector<Extrapolation> diagnostics, double endpoint_left,
               double endpoint_right, double kappa,
               std::function<double(double)> evaluator = {});

    /// Curve given by an exact function on [0, 1].
    static LimitCurve from_function(std::span<const double> s_grid,
                                    const std::function<double(double)>& f, double kappa);

    double at(double s) const;
    bool has_evaluator() const { return static_cast<bool>(evaluator_); }

    const std::vector<double>& s_grid() const { return s_grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<Extrapolation>& diagnostics() const { return diagnostics_; }
    double endpoint_left() const { return endpoint_left_; }
    double endpoint_right() const { return endpoint_right_; }
    double kappa() const { return kappa_; }
    /// Number of grid points whose extrapolation did not converge or fell back.
    int unstable_points() const;

private:
    std::vector<double> s_grid_;
    std::vector<double> values_;
    std::vector<Extrapolation> diagnostics_;
    double endpoint_left_ = 0.0;
    double endpoint_right_ = 0.0;
    double kappa_ = 1.0;
    std::function<double(double)> evaluator_;
};

/// I^s(f_{theta-eps/2} || f_{theta+eps/2}) / g(eps) extrapolated to eps -> 0
/// for each s, over the law's eps grid. The correction order is min(kappa_hat, 1).
LimitCurve limit_curve(const ModelPtr& model, double theta, const ScalingLaw& law,
                       std::span<const double> s_grid, const QuadratureConfig& quad = {});

struct BoundValue {
    double value = 0.0;
    double s_witness = 0.5;
};

/// 2^kappa sup_{s in [0,1]} I^s_g.
BoundValue alpha_bar_1(const LimitCurve& curve, double kappa);

enum class KappaBranch { automatic, below_one, one, above_one };

/// |kappa - 1| below this selects the kappa = 1 branch automatically.
inline constexpr double kKappaOneTolerance = 1e-2;

/// kappa < 1: sup_s h(s); kappa = 1: 2 I^{1/2}_g; kappa > 1: inf_s h(s), with
///   h(s) = I^s_g / (s(1-s)) * (s^{1/(kappa-1)} + (1-s)^{1/(kappa-1)})^{kappa-1}.
BoundValue alpha_bar_2(const LimitCurve& curve, double kappa,
                       KappaBranch branch = KappaBranch::automatic);

struct BoundsReport {
    double alpha_bar_1 = 0.0;
    double alpha_bar_2 = 0.0;
    double s_witness_1 = 0.5;
    double s_witness_2 = 0.5;
    double kappa = 1.0;
    bool coincide = false;
    bool condition_163_holds = false;
    bool alpha2_at_half_holds = false;
    bool order_holds = true;
    std::vector<std::string> diagnostics;
};

/// Relative tolerance of the coincidence conditions.
inline constexpr double kCoincidenceTolerance = 1e-2;

BoundsReport coincidence(const LimitCurve& curve, double kappa);

/// inf_{x>0} sup_{0<t<1} [(s-t)x + (1-s)f(t)]/(1-t) for a concave f >= 0.
double duality_check(const std::function<double(double)>& f, double s);

/// Same for f sampled at increasing points t_grid in (0, 1), interpolated
/// piecewise linearly and extended linearly beyond the sampled range.
double duality_check(std::span<const double> t_grid, std::span<const double> f_values, double s);

} // namespace ldlab
