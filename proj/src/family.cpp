#include "ldlab/family.hpp"

#include "ldlab/errors.hpp"
#include "ldlab/quadrature.hpp"
#include "ldlab/rng.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

namespace ldlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class Uniform final : public DensityModel {
public:
    Uniform(FamilySpec spec, double a, double b)
        : DensityModel(std::move(spec), {a, b}, {1.0, 1.0 / (b - a), 1.0, 1.0 / (b - a)},
                       {.log_concave = true, .monotone_decreasing = true, .regular = false}),
          a_(a), b_(b), log_height_(-std::log(b - a)) {}

    double pdf(double x) const override { return support().contains(x) ? 1.0 / (b_ - a_) : 0.0; }
    double logpdf(double x) const override { return support().contains(x) ? log_height_ : kNegInf; }
    double dlogpdf(double) const override { return 0.0; }
    double log_ratio(double x, double delta) const override {
        if (!support().contains(x + delta)) return kNegInf;
        return support().contains(x) ? 0.0 : kInf;
    }
    double cdf(double x) const override {
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        return (x - a_) / (b_ - a_);
    }
    double sf(double x) const override {
        if (x <= a_) return 1.0;
        if (x >= b_) return 0.0;
        return (b_ - x) / (b_ - a_);
    }
    double quantile(double u) const override { return a_ + u * (b_ - a_); }
    double mode() const override { return 0.5 * (a_ + b_); }

private:
    double a_, b_, log_height_;
};

class Exponential final : public DensityModel {
public:
    Exponential(FamilySpec spec, double rate)
        : DensityModel(std::move(spec), {0.0, kInf}, {1.0, rate, 1.0, 0.0},
                       {.log_concave = true, .monotone_decreasing = true, .regular = false}),
          rate_(rate), log_rate_(std::log(rate)) {}

    double pdf(double x) const override { return x > 0.0 ? rate_ * std::exp(-rate_ * x) : 0.0; }
    double logpdf(double x) const override { return x > 0.0 ? log_rate_ - rate_ * x : kNegInf; }
    double dlogpdf(double) const override { return -rate_; }
    double log_ratio(double x, double delta) const override {
        if (!(x + delta > 0.0)) return kNegInf;
        return x > 0.0 ? -rate_ * delta : kInf;
    }
    double cdf(double x) const override { return x > 0.0 ? -std::expm1(-rate_ * x) : 0.0; }
    double sf(double x) const override { return x > 0.0 ? std::exp(-rate_ * x) : 1.0; }
    double quantile(double u) const override { return -std::log1p(-u) / rate_; }
    double mode() const override { return 0.0; }

private:
    double rate_, log_rate_;
};

class Beta final : public DensityModel {
public:
    Beta(FamilySpec spec, double alpha, double beta)
        : DensityModel(std::move(spec), {0.0, 1.0}, edge_for(alpha, beta),
                       {.log_concave = alpha >= 1.0 && beta >= 1.0,
                        .monotone_decreasing = alpha <= 1.0 && beta >= 1.0,
                        .regular = alpha > 2.0 && beta > 2.0}),
          alpha_(alpha), beta_(beta), log_norm_(log_beta(alpha, beta)) {}

    double pdf(double x) const override {
        const double lp = logpdf(x);
        return lp == kNegInf ? 0.0 : std::exp(lp);
    }
    double logpdf(double x) const override {
        if (!(x > 0.0 && x < 1.0)) return kNegInf;
        return (alpha_ - 1.0) * std::log(x) + (beta_ - 1.0) * std::log1p(-x) - log_norm_;
    }
    double dlogpdf(double x) const override {
        return (alpha_ - 1.0) / x - (beta_ - 1.0) / (1.0 - x);
    }
    double logpdf_above_lower(double y) const override { return logpdf(y); }
    double logpdf_below_upper(double z) const override {
        if (!(z > 0.0 && z < 1.0)) return kNegInf;
        return (alpha_ - 1.0) * std::log1p(-z) + (beta_ - 1.0) * std::log(z) - log_norm_;
    }
    double log_ratio(double x, double delta) const override {
        return ratio_from_lower(x, delta, alpha_, beta_);
    }
    double log_ratio_below_upper(double z, double delta) const override {
        return ratio_from_lower(z, delta, beta_, alpha_);
    }
    double cdf(double x) const override {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        return boost::math::ibeta(alpha_, beta_, x);
    }
    double sf(double x) const override {
        if (x <= 0.0) return 1.0;
        if (x >= 1.0) return 0.0;
        return boost::math::ibetac(alpha_, beta_, x);
    }
    double quantile(double u) const override {
        if (!(u > 0.0)) return 0.0;
        if (!(u < 1.0)) return 1.0;
        std::call_once(table_once_, [this] {
            table_.front() = 0.0;
            table_.back() = 1.0;
            for (std::size_t k = 1; k < kCells; ++k)
                table_[k] = boost::math::ibeta_inv(alpha_, beta_, static_cast<double>(k) / kCells);
        });
        // Starting point from the table (power-law edges in the end cells),
        // then safeguarded Newton on the incomplete beta function. The upper
        // half works with the complement so 1 - u keeps its precision.
        const double pos = u * kCells;
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), kCells - 1);
        double x;
        if (k == 0)
            x = table_[1] * std::pow(pos, 1.0 / alpha_);
        else if (k == kCells - 1)
            x = 1.0 - (1.0 - table_[kCells - 1]) * std::pow((1.0 - u) * kCells, 1.0 / beta_);
        else
            x = table_[k] + (pos - k) * (table_[k + 1] - table_[k]);
        double lo = k == 0 ? 0.0 : table_[k - 1];
        double hi = k + 2 > kCells ? 1.0 : table_[k + 2];
        x = std::clamp(x, std::nextafter(lo, 1.0), std::nextafter(hi, 0.0));
        const bool upper = u > 0.5;
        const double target = upper ? 1.0 - u : u;
        for (int i = 0; i < 100; ++i) {
            const double r = upper ? target - boost::math::ibetac(alpha_, beta_, x)
                                   : boost::math::ibeta(alpha_, beta_, x) - target;
            if (r == 0.0) break;
            (r > 0.0 ? hi : lo) = x;
            const double step = r / pdf(x);
            const double next = x - step;
            const bool newton = next > lo && next < hi;
            if (std::fabs(step) <= std::max(4e-16 * std::min(x, 1.0 - x), 2.5e-16 * x)) {
                if (newton) x = next;
                break;
            }
            x = newton ? next : 0.5 * (lo + hi);
        }
        return x;
    }
    double mode() const override {
        if (alpha_ > 1.0 && beta_ > 1.0) return (alpha_ - 1.0) / (alpha_ + beta_ - 2.0);
        if (alpha_ <= 1.0 && beta_ > 1.0) return 0.0;
        if (alpha_ > 1.0 && beta_ <= 1.0) return 1.0;
        return 0.5;
    }

private:
    // log f(u + d) - log f(u) for the density u^(p-1) (1-u)^(q-1).
    static double ratio_from_lower(double u, double d, double p, double q) {
        const double v = u + d;
        if (!(v > 0.0 && v < 1.0)) return kNegInf;
        if (!(u > 0.0 && u < 1.0)) return kInf;
        const double near = std::fabs(d) < 0.5 * u ? std::log1p(d / u) : std::log(v) - std::log(u);
        return (p - 1.0) * near + (q - 1.0) * std::log1p(-d / (1.0 - u));
    }
    static constexpr std::size_t kCells = 256;
    mutable std::once_flag table_once_;
    mutable std::array<double, kCells + 1> table_{};

    static double log_beta(double a, double b) {
        return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    }
    static EdgeProfile edge_for(double a, double b) {
        const double c = std::exp(-log_beta(a, b));
        return {a, c, b, c};
    }

    double alpha_, beta_, log_norm_;
};

class Gaussian final : public DensityModel {
public:
    Gaussian(FamilySpec spec, double sigma)
        : DensityModel(std::move(spec), {-kInf, kInf}, {1.0, 0.0, 1.0, 0.0},
                       {.log_concave = true, .monotone_decreasing = false, .regular = true}),
          sigma_(sigma),
          log_norm_(std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi)) {}

    double pdf(double x) const override { return std::exp(logpdf(x)); }
    double logpdf(double x) const override {
        const double z = x / sigma_;
        return -0.5 * z * z - log_norm_;
    }
    double dlogpdf(double x) const override { return -x / (sigma_ * sigma_); }
    double log_ratio(double x, double delta) const override {
        return -delta * (2.0 * x + delta) / (2.0 * sigma_ * sigma_);
    }
    double cdf(double x) const override {
        return 0.5 * std::erfc(-x / (sigma_ * std::numbers::sqrt2));
    }
    double sf(double x) const override {
        return 0.5 * std::erfc(x / (sigma_ * std::numbers::sqrt2));
    }
    double quantile(double u) const override {
        return -sigma_ * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
    }
    double mode() const override { return 0.0; }

private:
    double sigma_, log_norm_;
};

class Triangular final : public DensityModel {
public:
    Triangular(FamilySpec spec, double a, double b, double c)
        : DensityModel(std::move(spec), {a, b},
                       {2.0, 2.0 / ((b - a) * (c - a)), 2.0, 2.0 / ((b - a) * (b - c))},
                       {.log_concave = true, .monotone_decreasing = false, .regular = false}),
          a_(a), b_(b), c_(c) {}

    double pdf(double x) const override {
        if (!(x > a_ && x < b_)) return 0.0;
        if (x < c_) return 2.0 * (x - a_) / ((b_ - a_) * (c_ - a_));
        return 2.0 * (b_ - x) / ((b_ - a_) * (b_ - c_));
    }
    double logpdf(double x) const override {
        const double p = pdf(x);
        return p > 0.0 ? std::log(p) : kNegInf;
    }
    double dlogpdf(double x) const override {
        if (x < c_) return 1.0 / (x - a_);
        if (x > c_) return -1.0 / (b_ - x);
        return 0.0;
    }
    double logpdf_above_lower(double y) const override {
        if (!(y > 0.0)) return kNegInf;
        if (a_ + y < c_) return std::log(2.0 * y / ((b_ - a_) * (c_ - a_)));
        return logpdf(a_ + y);
    }
    double logpdf_below_upper(double z) const override {
        if (!(z > 0.0)) return kNegInf;
        if (b_ - z > c_) return std::log(2.0 * z / ((b_ - a_) * (b_ - c_)));
        return logpdf(b_ - z);
    }
    double log_ratio(double x, double delta) const override {
        return log_ratio_above_lower(x - a_, delta);
    }
    double log_ratio_above_lower(double y, double delta) const override {
        if (!(y + delta > 0.0)) return kNegInf;
        if (!(y > 0.0)) return kInf;
        if (a_ + y < c_ && a_ + y + delta < c_) return std::log1p(delta / y);
        // Across the mode: f = f(c) - k1 u on the left, f(c) - k2 v on the right.
        return across_mode((c_ - a_) - y, delta, 2.0 / ((b_ - a_) * (c_ - a_)),
                           2.0 / ((b_ - a_) * (b_ - c_)));
    }
    double log_ratio_below_upper(double z, double delta) const override {
        if (!(z + delta > 0.0)) return kNegInf;
        if (!(z > 0.0)) return kInf;
        if (b_ - z > c_ && b_ - z - delta > c_) return std::log1p(delta / z);
        return across_mode((b_ - c_) - z, delta, 2.0 / ((b_ - a_) * (b_ - c_)),
                           2.0 / ((b_ - a_) * (c_ - a_)));
    }
    double cdf(double x) const override {
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        if (x <= c_) return (x - a_) * (x - a_) / ((b_ - a_) * (c_ - a_));
        return 1.0 - (b_ - x) * (b_ - x) / ((b_ - a_) * (b_ - c_));
    }
    double sf(double x) const override {
        if (x <= a_) return 1.0;
        if (x >= b_) return 0.0;
        if (x >= c_) return (b_ - x) * (b_ - x) / ((b_ - a_) * (b_ - c_));
        return 1.0 - (x - a_) * (x - a_) / ((b_ - a_) * (c_ - a_));
    }
    double quantile(double u) const override {
        const double split = (c_ - a_) / (b_ - a_);
        if (u < split) return a_ + std::sqrt(u * (b_ - a_) * (c_ - a_));
        return b_ - std::sqrt((1.0 - u) * (b_ - a_) * (b_ - c_));
    }
    double mode() const override { return c_; }
    std::vector<double> breakpoints() const override { return {c_}; }

private:
    // log f(x + delta) - log f(x) where x lies u before the mode (u may be
    // negative) along a side of slope k_in, continuing on the other side with
    // slope k_out.
    double across_mode(double u, double delta, double k_in, double k_out) const {
        const double peak = 2.0 / (b_ - a_);
        const double v = delta - u;
        const double base = u >= 0.0 ? peak - k_in * u : peak + k_out * u;
        const double target = v <= 0.0 ? peak + k_in * v : peak - k_out * v;
        if (!(target > 0.0)) return kNegInf;
        if (!(base > 0.0)) return kInf;
        const double step = (u >= 0.0 ? k_in * u : -k_out * u) - (v <= 0.0 ? -k_in * v : k_out * v);
        return std::log1p(step / base);
    }

    double a_, b_, c_;
};

double param(const FamilySpec& spec, const std::string& key, double fallback, bool required) {
    auto it = spec.params.find(key);
    if (it == spec.params.end()) {
        if (required)
            throw InvalidArgument("family '" + spec.name + "' requires parameter '" + key + "'");
        return fallback;
    }
    if (!std::isfinite(it->second))
        throw InvalidArgument("family '" + spec.name + "': parameter '" + key + "' must be finite");
    return it->second;
}

void check_keys(const FamilySpec& spec, std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : spec.params)
        if (!ok.count(k))
            throw InvalidArgument("family '" + spec.name + "': unknown parameter '" + k + "'");
}

} // namespace

std::string DensityModel::label() const {
    std::ostringstream os;
    os << spec_.name << '(';
    bool first = true;
    for (const auto& [k, v] : spec_.params) {
        if (!first) os << ',';
        os << k << '=' << v;
        first = false;
    }
    os << ')';
    return os.str();
}

double DensityModel::neg_log_cdf(double x) const {
    const double F = cdf(x);
    if (F > 0.5) return -std::log1p(-sf(x));
    return -std::log(F);
}

double DensityModel::neg_log_sf(double x) const {
    const double S = sf(x);
    if (S > 0.5) return -std::log1p(-cdf(x));
    return -std::log(S);
}

ModelPtr build_family(const FamilySpec& spec) {
    const std::string& n = spec.name;
    if (n == "uniform") {
        check_keys(spec, {"a", "b"});
        const double a = param(spec, "a", 0.0, false);
        const double b = param(spec, "b", 1.0, false);
        if (!(a < b)) throw InvalidArgument("uniform: requires a < b");
        return std::make_shared<Uniform>(spec, a, b);
    }
    if (n == "exponential") {
        check_keys(spec, {"rate"});
        const double rate = param(spec, "rate", 1.0, false);
        if (!(rate > 0.0)) throw InvalidArgument("exponential: rate must be positive");
        return std::make_shared<Exponential>(spec, rate);
    }
    if (n == "beta") {
        check_keys(spec, {"alpha", "beta"});
        const double a = param(spec, "alpha", 0.0, true);
        const double b = param(spec, "beta", 0.0, true);
        if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("beta: alpha and beta must be positive");
        return std::make_shared<Beta>(spec, a, b);
    }
    if (n == "gaussian") {
        check_keys(spec, {"sigma"});
        const double sigma = param(spec, "sigma", 1.0, false);
        if (!(sigma > 0.0)) throw InvalidArgument("gaussian: sigma must be positive");
        return std::make_shared<Gaussian>(spec, sigma);
    }
    if (n == "triangular") {
        check_keys(spec, {"a", "b", "mode"});
        const double a = param(spec, "a", 0.0, false);
        const double b = param(spec, "b", 1.0, false);
        const double c = param(spec, "mode", 0.5 * (a + b), false);
        if (!(a < c && c < b)) throw InvalidArgument("triangular: requires a < mode < b");
        return std::make_shared<Triangular>(spec, a, b, c);
    }
    throw InvalidArgument("unknown family '" + n + "'");
}

ModelPtr build_family(const std::string& name, const std::map<std::string, double>& params) {
    return build_family(FamilySpec{name, params});
}

double evaluate(const DensityModel& model, EvalKind kind, double x, double theta) {
    switch (kind) {
    case EvalKind::pdf:
        return model.pdf(x - theta);
    case EvalKind::logpdf:
        return model.logpdf(x - theta);
    case EvalKind::cdf:
        return model.cdf(x - theta);
    case EvalKind::quantile:
        if (!(x > 0.0 && x < 1.0))
            throw InvalidArgument("quantile argument must lie in (0, 1)");
        return theta + model.quantile(x);
    case EvalKind::score: {
        const double y = x - theta;
        if (!model.support().contains(y))
            throw InvalidArgument("score requested outside the support");
        return -model.dlogpdf(y);
    }
    }
    throw InvalidArgument("unknown evaluator kind");
}

double fisher_information(const DensityModel& model) {
    const auto& sup = model.support();
    const auto integrand = [&model](double x) {
        const double d = model.dlogpdf(x);
        return d * d * model.pdf(x);
    };
    const auto bps = model.breakpoints();
    return integrate(integrand, sup.lower, sup.upper, {}, {}, bps).value;
}

void sample_into(const DensityModel& model, double theta, std::uint64_t seed,
                 std::span<double> out) {
    const CounterStream stream(seed);
    const double lo = model.support().lower + theta;
    const double hi = model.support().upper + theta;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = theta + model.quantile(stream.uniform(i));
        if (!(v > lo)) v = std::nextafter(lo, kInf);
        if (!(v < hi)) v = std::nextafter(hi, -kInf);
        out[i] = v;
    }
}

SampleBatch sample(const DensityModel& model, double theta, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("sample: n must be at least 1");
    SampleBatch batch{theta, std::vector<double>(n), seed, n};
    sample_into(model, theta, seed, batch.values);
    return batch;
}

} // namespace ldlab
