#pragma once

#include "ldlab/family.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>

namespace ldlab {

enum class EstimatorKind { min_shift, max_shift, cc, mle, lr, shifted_min };

/// An estimator of the location. cc carries lambda in (0, 1); lr and
/// shifted_min carry epsilon > 0; the others carry neither.
struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::min_shift;
    std::optional<double> lambda;
    std::optional<double> epsilon;

    static EstimatorSpec min_shift() { return {EstimatorKind::min_shift, {}, {}}; }
    static EstimatorSpec max_shift() { return {EstimatorKind::max_shift, {}, {}}; }
    static EstimatorSpec cc(double lambda) { return {EstimatorKind::cc, lambda, {}}; }
    static EstimatorSpec mle() { return {EstimatorKind::mle, {}, {}}; }
    static EstimatorSpec lr(double eps) { return {EstimatorKind::lr, {}, eps}; }
    static EstimatorSpec shifted_min(double eps) { return {EstimatorKind::shifted_min, {}, eps}; }

    /// Throws InvalidArgument unless the parameters match the kind.
    void validate() const;
    /// "min_shift", "cc(0.5)", "lr(0.1)", ...
    std::string label() const;

    bool operator==(const EstimatorSpec&) const = default;
};

std::string kind_name(EstimatorKind kind);
EstimatorKind parse_kind(const std::string& name);
/// Inverse of EstimatorSpec::label().
EstimatorSpec parse_estimator(const std::string& text);

struct EstimateDiagnostics {
    int ml_iterations = 0;
    /// (sup {z : k(z) < 0}, inf {z : k(z) > 0}) for lr.
    std::optional<std::pair<double, double>> lr_bracket;
    std::string note;
};

struct Estimate {
    double value = 0.0;
    EstimateDiagnostics diagnostics;
};

/// Throws HypothesisGate when the estimator is not defined for the model:
/// min_shift and shifted_min need a finite lower end, max_shift a finite
/// upper end, cc both; mle needs a log-concave or monotone decreasing
/// density; lr needs a log-concave one.
void check_applicable(const EstimatorSpec& spec, const DensityModel& model);

Estimate point_estimate(const EstimatorSpec& spec, const DensityModel& model,
                        const SampleBatch& sample);
Estimate point_estimate(const EstimatorSpec& spec, const DensityModel& model,
                        std::span<const double> sample);

/// lambda_0 = A1^(1/kappa) / (A1^(1/kappa) + A2^(1/kappa)) for equal edge
/// exponents and positive coefficients.
double optimal_lambda(const EdgeProfile& edge);

} // namespace ldlab
