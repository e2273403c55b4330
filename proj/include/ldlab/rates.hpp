#pragma once

#include "ldlab/bounds.hpp"
#include "ldlab/estimators.hpp"
#include "ldlab/family.hpp"
#include "ldlab/quadrature.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ldlab {

enum class RateMethod { closed_form, quadrature_opt, chernoff_equiv };
std::string method_name(RateMethod method);

/// Exponential rates of P(T_n > theta + eps) and P(T_n < theta - eps).
struct RatePair {
    double beta_plus = 0.0;
    double beta_minus = 0.0;
    RateMethod method = RateMethod::closed_form;
    double epsilon = 0.0;
    double theta = 0.0;

    double beta() const { return beta_plus < beta_minus ? beta_plus : beta_minus; }
};

/// Rates for estimators with closed forms or a one-dimensional Chernoff
/// optimization. lr and shifted_min use their own epsilon as the estimator
/// parameter; lr requires it to equal eps.
RatePair exact_rate(const EstimatorSpec& spec, const DensityModel& model, double theta, double eps,
                    const QuadratureConfig& quad = {});

/// The tail integrals exactly as printed for min_shift, max_shift, cc and
/// shifted_min (upper and lower limits exchanged relative to exact_rate).
/// Other estimators return exact_rate unchanged.
RatePair literal_rate(const EstimatorSpec& spec, const DensityModel& model, double theta, double eps,
                      const QuadratureConfig& quad = {});

/// The four integral forms of the MLE rate, each maximized over t >= 0.
struct MleRateDetail {
    double beta_plus = 0.0;   // lower-shift form
    double beta_plus_alt = 0.0;
    double beta_minus = 0.0;
    double beta_minus_alt = 0.0;
    double t_plus = 0.0;
    double t_minus = 0.0;
};
MleRateDetail mle_rate_detail(const DensityModel& model, double eps, const QuadratureConfig& quad = {});

/// sup_s I^s(f_theta || f_{theta+eps}) and sup_s I^s(f_{theta-eps} || f_theta).
struct MleLowerBound {
    double lower_plus = 0.0;
    double lower_minus = 0.0;
};
MleLowerBound mle_rate_lower_bound(const DensityModel& model, double theta, double eps,
                                   const QuadratureConfig& quad = {});

enum class Side { plus, minus, both };
std::string side_name(Side side);
Side parse_side(const std::string& name);

/// Finite-n probability of the event on `side` for min_shift, max_shift,
/// shifted_min (closed form) and cc (one-dimensional integral of the joint
/// density of the sample minimum and maximum).
double exact_tail(const EstimatorSpec& spec, const DensityModel& model, double eps, Side side,
                  std::size_t n, const QuadratureConfig& quad = {});

struct McConfig {
    /// 0 picks the hardware concurrency.
    unsigned workers = 0;
    std::size_t chunk = 2048;
    double confidence = 0.99;
};

/// One grid point of a Monte Carlo rate fit.
struct RateCell {
    std::size_t n = 0;
    std::uint64_t exceedances = 0;
    double p_hat = 0.0;
    double band_low = 0.0;
    double band_high = 0.0;
};

struct RateEstimate {
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    /// No usable exceedances: value is only a lower bound ("rate >= value").
    bool lower_bound_only = false;
    std::vector<RateCell> cells;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::string note;
};

/// Negative slope of log P(event) against n from exceedance counts, by
/// weighted least squares on cells with at least one exceedance. Confidence
/// bands are Clopper-Pearson; empty cells only tighten ci_low. When
/// `log_n_correction` is nonzero, log p + c log n is regressed instead.
RateEstimate fit_rate(std::span<const std::size_t> n_grid, std::span<const std::uint64_t> counts,
                      std::size_t reps, double confidence = 0.99, double log_n_correction = 0.0);

/// Monte Carlo exponential rate of the estimator's error event. Replicate r
/// at grid index j draws from derive_key(seed, j, r), so the result does not
/// depend on the number of workers.
RateEstimate mc_rate(const EstimatorSpec& spec, const ModelPtr& model, double theta, double eps,
                     Side side, std::span<const std::size_t> n_grid, std::size_t reps,
                     std::uint64_t seed, const McConfig& cfg = {});

struct EdgeCheck {
    std::string name;
    double expected = 0.0;
    double measured = 0.0;
    bool holds = false;
};

struct SlopeComparison {
    double alpha_bar_1 = 0.0;
    double alpha_bar_2 = 0.0;
    bool attains_1 = false;
    bool attains_2 = false;
    bool below_alpha_bar_1 = true;
};

struct SlopeReport {
    EstimatorSpec estimator;
    double slope = 0.0;
    Extrapolation extrapolation;
    std::vector<double> eps_grid;
    std::vector<RatePair> rates;
    /// min(beta+, beta-) / g(eps) per grid point.
    std::vector<double> normalized;
    SlopeComparison comparison;
    std::optional<EdgeCheck> edge_check;
    std::vector<std::string> diagnostics;
};

/// Relative tolerance for attainment and for the slope bound.
inline constexpr double kSlopeTolerance = 2e-2;

/// Limit of beta(eps)/g(eps) over eps_grid (decreasing or increasing). For lr
/// and shifted_min the estimator parameter follows the grid.
SlopeReport slope_report(const EstimatorSpec& spec, const DensityModel& model, double theta,
                         std::span<const double> eps_grid, const ScalingLaw& law,
                         const BoundsReport& bounds, const QuadratureConfig& quad = {});

struct TestError {
    std::vector<std::size_t> n_grid;
    std::vector<double> e1_hat;
    std::vector<double> e2_hat;
    RateEstimate e1_star;
    RateEstimate e2_star;
    /// Exponent of e1 + e2.
    RateEstimate combined;
    double target = 0.0;
    bool bahadur_rao = false;
};

/// Simulates the likelihood test that accepts f_theta1 when
/// prod f(x_i - theta1) >= prod f(x_i - theta2) and fits error exponents.
/// The combined exponent is fitted with an n^(-1/2) prefactor when the
/// per-observation log ratio is continuous.
TestError test_exponents(const ModelPtr& model, double theta1, double theta2,
                         std::span<const std::size_t> n_grid, std::size_t reps, std::uint64_t seed,
                         const McConfig& cfg = {});

} // namespace ldlab
