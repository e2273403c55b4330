#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ldlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Open support interval (lower, upper) of the standardized density.
struct SupportSpec {
    double lower = -kInf;
    double upper = kInf;

    bool contains(double x) const { return x > lower && x < upper; }
    bool lower_finite() const { return lower > -kInf; }
    bool upper_finite() const { return upper < kInf; }
};

/// Power-law behaviour at the support ends:
///   f(x) ~ A1 (x - a)^(kappa1 - 1) as x -> a+,  f(x) ~ A2 (b - x)^(kappa2 - 1) as x -> b-.
/// A coefficient of zero marks an end without such behaviour (half line or no edge).
struct EdgeProfile {
    double kappa1 = 1.0;
    double A1 = 0.0;
    double kappa2 = 1.0;
    double A2 = 0.0;
};

struct StructuralFlags {
    bool log_concave = false;
    bool monotone_decreasing = false;
    bool regular = false;
};

/// JSON-addressable family description: {"name": ..., "params": {...}}.
struct FamilySpec {
    std::string name;
    std::map<std::string, double> params;

    bool operator==(const FamilySpec&) const = default;
};

enum class EvalKind { pdf, logpdf, cdf, quantile, score };

/// A location-shift density f(x - theta). The virtual interface describes the
/// standardized density (theta = 0); shifted evaluation goes through evaluate().
/// Instances are immutable and safe to share between threads.
class DensityModel {
public:
    virtual ~DensityModel() = default;

    virtual double pdf(double x) const = 0;
    /// -inf outside the support.
    virtual double logpdf(double x) const = 0;
    /// d/dx log f(x) on the support interior.
    virtual double dlogpdf(double x) const = 0;
    virtual double cdf(double x) const = 0;
    /// Survival function 1 - F(x), accurate in the upper tail.
    virtual double sf(double x) const = 0;
    virtual double quantile(double u) const = 0;
    /// log f(a + y) and log f(b - z) for small offsets from finite support
    /// ends, without the rounding of forming a + y or b - z first.
    virtual double logpdf_above_lower(double y) const { return logpdf(support_.lower + y); }
    virtual double logpdf_below_upper(double z) const { return logpdf(support_.upper - z); }
    /// log f(x + delta) - log f(x), without the cancellation of subtracting
    /// two nearly equal logs when delta is small.
    virtual double log_ratio(double x, double delta) const { return logpdf(x + delta) - logpdf(x); }
    /// The same in edge offsets: log f(a + y + delta) - log f(a + y) and
    /// log f(b - z - delta) - log f(b - z).
    virtual double log_ratio_above_lower(double y, double delta) const {
        return log_ratio(support_.lower + y, delta);
    }
    virtual double log_ratio_below_upper(double z, double delta) const {
        return log_ratio(support_.upper - z, -delta);
    }
    /// A point where log f is maximal.
    virtual double mode() const = 0;
    /// Interior points where f is not smooth.
    virtual std::vector<double> breakpoints() const { return {}; }

    const SupportSpec& support() const { return support_; }
    const EdgeProfile& edge() const { return edge_; }
    const StructuralFlags& flags() const { return flags_; }
    const FamilySpec& spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }
    /// Human-readable label such as "beta(2,3)".
    std::string label() const;

    /// Mass of the standardized density below x, -log F(x), computed without
    /// cancellation when F(x) is close to one.
    double neg_log_cdf(double x) const;
    /// -log(1 - F(x)).
    double neg_log_sf(double x) const;

protected:
    DensityModel(FamilySpec spec, SupportSpec support, EdgeProfile edge, StructuralFlags flags)
        : spec_(std::move(spec)), support_(support), edge_(edge), flags_(flags) {}

private:
    FamilySpec spec_;
    SupportSpec support_;
    EdgeProfile edge_;
    StructuralFlags flags_;
};

using ModelPtr = std::shared_ptr<const DensityModel>;

/// Builtin catalog: uniform{a,b}, exponential{rate}, beta{alpha,beta},
/// gaussian{sigma}, triangular{a,b,mode}. Missing parameters take the
/// defaults uniform(0,1), exponential(1), gaussian(1), triangular(0,1,0.5);
/// beta requires both shape parameters.
ModelPtr build_family(const FamilySpec& spec);
ModelPtr build_family(const std::string& name, const std::map<std::string, double>& params = {});

/// Evaluate the theta-shifted density. pdf is 0 and logpdf is -inf outside
/// the shifted support; quantile expects x in (0, 1); score is
/// d/dtheta log f(x - theta) = -f'(x - theta)/f(x - theta).
double evaluate(const DensityModel& model, EvalKind kind, double x, double theta);

/// Fisher information of the location parameter, computed as the integral of
/// the squared score. Only meaningful for regular models.
double fisher_information(const DensityModel& model);

struct SampleBatch {
    double theta_true = 0.0;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::size_t n = 0;
};

/// n i.i.d. draws theta + F^{-1}(u_i) with u_i from a counter-based stream
/// keyed by seed. Deterministic in (seed, n, theta); every draw lies strictly
/// inside the shifted support.
SampleBatch sample(const DensityModel& model, double theta, std::size_t n, std::uint64_t seed);

/// Fill `out` with draws of index [0, out.size()) from the stream keyed by
/// seed, without allocating. Same draws as sample().
void sample_into(const DensityModel& model, double theta, std::uint64_t seed,
                 std::span<double> out);

} // namespace ldlab
