#pragma once

#include "ldlab/family.hpp"
#include "ldlab/quadrature.hpp"

#include <span>
#include <vector>

namespace ldlab {

/// Relative Renyi entropy I^s(f_theta1 || f_theta2) = -log int p^s q^(1-s),
/// for 0 < s < 1. Returns +inf when the shifted supports are disjoint.
///
/// The integral is evaluated through its deficit from one,
///   1 - int p^s q^(1-s) = s P(outside) + (1-s) Q(outside)
///                         + int_overlap [s p + (1-s) q - p^s q^(1-s)],
/// whose integrand is nonnegative, so small divergences keep full relative
/// precision.
double renyi_divergence(const DensityModel& model, double theta1, double theta2, double s,
                        const QuadratureConfig& quad = {});

/// Limits of I^s as s -> 0 and s -> 1:
///   left  = -log int_{supp p} q,   right = -log int_{supp q} p.
struct RenyiEndpoints {
    double left = 0.0;
    double right = 0.0;
};
RenyiEndpoints renyi_endpoints(const DensityModel& model, double theta1, double theta2);

/// Sampled s -> I^s(f_theta1 || f_theta2) together with the pair it belongs
/// to, so that further points can be evaluated on demand.
class RenyiCurve {
public:
    RenyiCurve() = default;
    RenyiCurve(ModelPtr model, double theta1, double theta2, std::vector<double> s_grid,
               const QuadratureConfig& quad);

    /// I^s on the closed interval [0, 1]; the ends use the overlap-mass limits.
    double at(double s) const;

    const std::vector<double>& s_grid() const { return s_grid_; }
    const std::vector<double>& values() const { return values_; }
    double endpoint_left() const { return endpoints_.left; }
    double endpoint_right() const { return endpoints_.right; }
    double theta1() const { return theta1_; }
    double theta2() const { return theta2_; }
    const ModelPtr& model() const { return model_; }

private:
    ModelPtr model_;
    double theta1_ = 0.0;
    double theta2_ = 0.0;
    QuadratureConfig quad_;
    std::vector<double> s_grid_;
    std::vector<double> values_;
    RenyiEndpoints endpoints_;
};

/// Grid strictly increasing inside (0, 1).
RenyiCurve renyi_curve(ModelPtr model, double theta1, double theta2,
                       std::span<const double> s_grid, const QuadratureConfig& quad = {});

/// 0.05, 0.10, ..., 0.95.
std::vector<double> default_s_grid();

struct ChernoffResult {
    double value = 0.0;
    double s_star = 0.5;
};

/// sup over s in [0, 1] of I^s: grid maximum refined by golden section.
ChernoffResult chernoff_exponent(const RenyiCurve& curve);

/// Hoeffding exponent sup_{0<s<1} (I^s - s r)/(1 - s). Returns +inf when the
/// s -> 1 limit I^1 exceeds r.
double hoeffding_exponent(const RenyiCurve& curve, double r);

} // namespace ldlab
