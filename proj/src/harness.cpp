#include "ldlab/harness.hpp"

#include "ldlab/bounds.hpp"
#include "ldlab/divergence.hpp"
#include "ldlab/estimators.hpp"
#include "ldlab/rates.hpp"
#include "ldlab/rng.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#ifndef LDLAB_VERSION
#define LDLAB_VERSION "0.0.0"
#endif

namespace ldlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

ConfigError::ConfigError(const std::string& message, int line)
    : InvalidArgument(line > 0 ? "config line " + std::to_string(line) + ": " + message
                               : "config: " + message),
      line_(line) {}

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {

json num(double v) {
    if (!std::isfinite(v)) return format_value(v);
    return std::strtod(format_value(v).c_str(), nullptr);
}

std::vector<FamilySpec> builtin_suite() {
    return {{"uniform", {}},
            {"exponential", {}},
            {"gaussian", {}},
            {"beta", {{"alpha", 2.0}, {"beta", 2.0}}},
            {"beta", {{"alpha", 2.0}, {"beta", 3.0}}},
            {"beta", {{"alpha", 0.5}, {"beta", 0.5}}},
            {"triangular", {}}};
}

json family_json(const FamilySpec& f) {
    json params = json::object();
    for (const auto& [k, v] : f.params) params[k] = v;
    return json{{"name", f.name}, {"params", params}};
}

// ---- config parsing -------------------------------------------------------

class ConfigReader {
public:
    explicit ConfigReader(const std::string& text) : text_(text) {}

    int line_of(const std::string& key, std::size_t from = 0) const {
        const auto pos = text_.find("\"" + key + "\"", from);
        if (pos == std::string::npos) return 0;
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + pos, '\n'));
    }
    std::size_t offset_of(const std::string& key) const {
        const auto pos = text_.find("\"" + key + "\"");
        return pos == std::string::npos ? 0 : pos;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& message, std::size_t from = 0) const {
        throw ConfigError("'" + key + "': " + message, line_of(key, from));
    }

    double number(const json& j, const std::string& key) const {
        if (!j.is_number()) fail(key, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(key, "expected a finite number");
        return v;
    }
    std::uint64_t unsigned_int(const json& j, const std::string& key) const {
        if (j.is_number_unsigned()) return j.get<std::uint64_t>();
        if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
        if (j.is_number_float()) {
            const double v = j.get<double>();
            if (v >= 0.0 && v == std::floor(v) && v < 1.8e19) return static_cast<std::uint64_t>(v);
        }
        fail(key, "expected a nonnegative integer");
    }
    std::vector<double> numbers(const json& j, const std::string& key) const {
        if (!j.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& v : j) out.push_back(number(v, key));
        return out;
    }
    std::string string(const json& j, const std::string& key) const {
        if (!j.is_string()) fail(key, "expected a string");
        return j.get<std::string>();
    }
    FamilySpec family(const json& j, const std::string& key, std::size_t from = 0) const {
        FamilySpec f;
        if (j.is_string()) {
            f.name = j.get<std::string>();
        } else if (j.is_object()) {
            for (const auto& [k, v] : j.items()) {
                if (k == "name")
                    f.name = string(v, key);
                else if (k == "params") {
                    if (!v.is_object()) fail(key, "params must be an object", from);
                    for (const auto& [pk, pv] : v.items()) f.params[pk] = number(pv, key);
                } else {
                    fail(k, "unknown key in family", from);
                }
            }
        } else {
            fail(key, "expected a family name or {\"name\", \"params\"}", from);
        }
        try {
            build_family(f);
        } catch (const InvalidArgument& e) {
            fail(key, e.what(), from);
        }
        return f;
    }

private:
    const std::string& text_;
};

bool estimator_label_ok(const std::string& label) {
    if (label == "lr" || label == "shifted_min" || label == "cc") return true;
    try {
        parse_estimator(label);
        return true;
    } catch (const InvalidArgument&) {
        return false;
    }
}

void validate_with(const ExperimentConfig& c, const std::function<int(const std::string&)>& line_of) {
    const auto fail = [&](const std::string& key, const std::string& msg) {
        throw ConfigError("'" + key + "': " + msg, line_of(key));
    };
    const auto positive_grid = [&](const std::vector<double>& g, const std::string& key) {
        if (g.empty()) fail(key, "must not be empty");
        for (double v : g)
            if (!(v > 0.0) || !std::isfinite(v)) fail(key, "values must be positive");
    };
    try {
        build_family(c.family);
    } catch (const InvalidArgument& e) {
        fail("family", e.what());
    }
    if (!std::isfinite(c.theta)) fail("theta", "must be finite");
    positive_grid(c.eps_grid, "eps_grid");
    if (c.eps_grid.size() < 5) fail("eps_grid", "needs at least five values");
    positive_grid(c.rate_eps, "rate_eps");
    if (c.s_grid.empty()) fail("s_grid", "must not be empty");
    for (std::size_t i = 0; i < c.s_grid.size(); ++i) {
        if (!(c.s_grid[i] > 0.0 && c.s_grid[i] < 1.0)) fail("s_grid", "values must lie in (0, 1)");
        if (i > 0 && !(c.s_grid[i] > c.s_grid[i - 1])) fail("s_grid", "must be strictly increasing");
    }
    if (c.n_grid.size() < 4) fail("n_grid", "needs at least four values");
    for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
        if (c.n_grid[i] == 0) fail("n_grid", "values must be positive");
        if (i > 0 && !(c.n_grid[i] > c.n_grid[i - 1])) fail("n_grid", "must be strictly increasing");
    }
    if (c.reps < 1) fail("reps", "must be at least 1");
    if (c.chunk < 1) fail("chunk", "must be at least 1");
    if (c.estimators.empty()) fail("estimators", "must not be empty");
    for (const auto& e : c.estimators)
        if (!estimator_label_ok(e)) fail("estimators", "unknown or malformed estimator '" + e + "'");
    const Tolerances& t = c.tolerances;
    for (double v : {t.sandwich, t.concavity, t.order, t.duality, t.mle_forms, t.mle_domination, t.slope, t.chernoff})
        if (!(v >= 0.0) || !std::isfinite(v)) fail("tolerances", "values must be finite and nonnegative");
    for (const auto& f : c.verify_families) {
        try {
            build_family(f);
        } catch (const InvalidArgument& e) {
            fail("verify_families", e.what());
        }
    }
    for (const auto& p : c.chernoff_pairs) {
        try {
            build_family(p.family);
        } catch (const InvalidArgument& e) {
            fail("chernoff_pairs", e.what());
        }
        if (!std::isfinite(p.theta1) || !std::isfinite(p.theta2)) fail("chernoff_pairs", "shifts must be finite");
    }
}

// ---- files ------------------------------------------------------------------

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    return out + "\n";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class RunWriter {
public:
    RunWriter(std::string command, const ExperimentConfig& config)
        : RunWriter(std::move(command), resolve_output_dir(config), sha256_hex(serialize_config(config))) {}

    RunWriter(std::string command, fs::path dir, std::string config_hash) {
        manifest_.command = std::move(command);
        manifest_.config_sha256 = std::move(config_hash);
        manifest_.tool_version = tool_version();
        manifest_.started = now_utc();
        manifest_.directory = std::move(dir);
        std::error_code ec;
        fs::create_directories(manifest_.directory, ec);
        if (ec || !fs::is_directory(manifest_.directory))
            throw ConfigError("output_dir '" + manifest_.directory.string() + "' is not writable");
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path path = manifest_.directory / name;
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) throw ConfigError("cannot write '" + path.string() + "'");
            out << content;
            if (!out) throw ConfigError("cannot write '" + path.string() + "'");
        }
        manifest_.files.push_back({name, sha256_hex(content), content.size()});
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void warn(std::string w) {
        if (std::find(manifest_.warnings.begin(), manifest_.warnings.end(), w) == manifest_.warnings.end())
            manifest_.warnings.push_back(std::move(w));
    }

    RunManifest finish(int failures = 0) {
        manifest_.failures = failures;
        manifest_.finished = now_utc();
        write_manifest(manifest_);
        return manifest_;
    }

private:
    RunManifest manifest_;
};

McConfig mc_config(const ExperimentConfig& c) { return {c.workers, c.chunk, 0.99}; }

// ---- shared computations ----------------------------------------------------

struct BoundsBundle {
    ScalingLaw law;
    LimitCurve curve;
    BoundsReport bounds;
};

BoundsBundle compute_bounds(const ModelPtr& model, double theta, const ExperimentConfig& c) {
    BoundsBundle b;
    b.law = fit_order(model, theta, c.eps_grid);
    b.curve = limit_curve(model, theta, b.law, c.s_grid);
    b.bounds = coincidence(b.curve, b.law.kappa_hat);
    return b;
}

void bounds_warnings(const BoundsBundle& b, const std::string& who, RunWriter& w) {
    if (b.law.poor_fit)
        w.warn(who + ": scaling-law fit is poor (r^2 = " + format_value(b.law.r_squared) + ")");
    // Fallbacks whose last step moved the value by less than 0.1% are routine
    // (the fitted order is never exactly the true one) and stay out of the warnings.
    int unstable = 0;
    for (std::size_t i = 0; i < b.curve.values().size(); ++i)
        if (std::fabs(b.curve.diagnostics()[i].change) > 1e-3 * std::fabs(b.curve.values()[i])) ++unstable;
    if (unstable > 0)
        w.warn(who + ": " + std::to_string(unstable) + " limit-curve points moved by more than 0.1% in the last extrapolation step");
    for (const auto& d : b.bounds.diagnostics)
        if (d.find("extrapolate cleanly") == std::string::npos) w.warn(who + ": " + d);
}

// Resolves a configured label for one model and deviation; bare "lr" and
// "shifted_min" follow eps, bare "cc" takes the optimal lambda.
EstimatorSpec resolve_estimator(const std::string& label, const DensityModel& model, double eps) {
    if (label == "lr") return EstimatorSpec::lr(eps);
    if (label == "shifted_min") return EstimatorSpec::shifted_min(eps);
    if (label == "cc") {
        check_applicable(EstimatorSpec::cc(0.5), model);
        return EstimatorSpec::cc(optimal_lambda(model.edge()));
    }
    return parse_estimator(label);
}

bool differs(double a, double b) {
    if (a == b) return false;
    if (!std::isfinite(a) || !std::isfinite(b)) return true;
    return std::fabs(a - b) > 1e-12 * std::max(std::fabs(a), std::fabs(b));
}

bool has_literal_form(EstimatorKind k) {
    return k == EstimatorKind::min_shift || k == EstimatorKind::max_shift || k == EstimatorKind::cc ||
           k == EstimatorKind::shifted_min;
}

json slope_json(const SlopeReport& r) {
    json normalized = json::array(), rates = json::array(), eps = json::array();
    for (std::size_t i = 0; i < r.eps_grid.size(); ++i) {
        eps.push_back(num(r.eps_grid[i]));
        normalized.push_back(num(r.normalized[i]));
        rates.push_back(json{{"beta_plus", num(r.rates[i].beta_plus)},
                             {"beta_minus", num(r.rates[i].beta_minus)},
                             {"method", method_name(r.rates[i].method)}});
    }
    json out{{"estimator", r.estimator.label()},
             {"slope", num(r.slope)},
             {"extrapolation",
              {{"value", num(r.extrapolation.value)},
               {"change", num(r.extrapolation.change)},
               {"converged", r.extrapolation.converged},
               {"fallback", r.extrapolation.fallback}}},
             {"eps_grid", eps},
             {"normalized", normalized},
             {"rates", rates},
             {"comparison",
              {{"alpha_bar_1", num(r.comparison.alpha_bar_1)},
               {"alpha_bar_2", num(r.comparison.alpha_bar_2)},
               {"attains_1", r.comparison.attains_1},
               {"attains_2", r.comparison.attains_2},
               {"below_alpha_bar_1", r.comparison.below_alpha_bar_1}}}};
    if (r.edge_check)
        out["edge_check"] = {{"name", r.edge_check->name},
                             {"expected", num(r.edge_check->expected)},
                             {"measured", num(r.edge_check->measured)},
                             {"holds", r.edge_check->holds}};
    out["diagnostics"] = r.diagnostics;
    return out;
}

json slopes_document(const ExperimentConfig& c, const ModelPtr& model, const BoundsBundle& b, RunWriter& w) {
    json list = json::array();
    for (const auto& label : c.estimators) {
        try {
            const EstimatorSpec spec = resolve_estimator(label, *model, c.eps_grid.front());
            const SlopeReport r = slope_report(spec, *model, c.theta, b.law.eps_grid, b.law, b.bounds);
            if (!r.comparison.below_alpha_bar_1)
                w.warn(spec.label() + ": slope " + format_value(r.slope) + " exceeds alpha_bar_1");
            if (std::fabs(r.extrapolation.change) > std::max(1e-3 * std::fabs(r.slope), 1e-4))
                w.warn(spec.label() + ": slope extrapolation moved by " + format_value(r.extrapolation.change) +
                       " in its last step");
            list.push_back(slope_json(r));
        } catch (const HypothesisGate& e) {
            list.push_back(json{{"estimator", label}, {"refused", e.what()}});
        } catch (const InvalidArgument& e) {
            list.push_back(json{{"estimator", label}, {"refused", e.what()}});
        }
    }
    return json{{"family", model->label()},
                {"theta", num(c.theta)},
                {"kappa_hat", num(b.law.kappa_hat)},
                {"alpha_bar_1", num(b.bounds.alpha_bar_1)},
                {"alpha_bar_2", num(b.bounds.alpha_bar_2)},
                {"slope_tolerance", num(kSlopeTolerance)},
                {"estimators", list}};
}

// ---- verify -----------------------------------------------------------------

struct Check {
    std::string name;
    std::string family;
    std::string status;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string note;
};

Check judged(std::string name, std::string family, double measured, double tolerance, std::string note = {}) {
    const bool ok = measured <= tolerance;
    return {std::move(name), std::move(family), ok ? "pass" : "fail", measured, tolerance, std::move(note)};
}

Check skipped(std::string name, std::string family, std::string note) {
    return {std::move(name), std::move(family), "skipped", 0.0, 0.0, std::move(note)};
}

std::vector<double> sandwich_eps() { return {0.01, 0.1, 0.4}; }

void verify_curves(const ModelPtr& m, const ExperimentConfig& c, std::vector<Check>& out) {
    const std::string who = m->label();
    double sandwich = 0.0, concavity = 0.0;
    int points = 0;
    for (double eps : sandwich_eps()) {
        const RenyiCurve curve = renyi_curve(m, c.theta, c.theta + eps, c.s_grid);
        const double half = renyi_divergence(*m, c.theta, c.theta + eps, 0.5);
        const auto& s = c.s_grid;
        const auto& v = curve.values();
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double lo = 2.0 * std::min(s[i], 1.0 - s[i]) * half;
            const double hi = 2.0 * std::max(s[i], 1.0 - s[i]) * half;
            // I^s(p||q) = I^(1-s)(q||p), checked against the reversed pair.
            const double mirrored = renyi_divergence(*m, c.theta + eps, c.theta, 1.0 - s[i]);
            sandwich = std::max({sandwich, lo - v[i], v[i] - hi, std::fabs(v[i] - mirrored)});
            ++points;
        }
        // Concavity on the grid including the closed-form ends.
        std::vector<double> xs{0.0}, ys{curve.endpoint_left()};
        for (std::size_t i = 0; i < s.size(); ++i) {
            xs.push_back(s[i]);
            ys.push_back(v[i]);
        }
        xs.push_back(1.0);
        ys.push_back(curve.endpoint_right());
        for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
            if (!std::isfinite(ys[i - 1]) || !std::isfinite(ys[i + 1])) continue;
            const double w = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            const double chord = (1.0 - w) * ys[i - 1] + w * ys[i + 1];
            concavity = std::max(concavity, chord - ys[i]);
        }
    }
    out.push_back(judged("sandwich", who, sandwich, c.tolerances.sandwich,
                         std::to_string(points) + " curve points, bounds and skew symmetry"));
    out.push_back(judged("concavity", who, concavity, c.tolerances.concavity, "largest chord excess"));
}

void verify_mle(const ModelPtr& m, const ExperimentConfig& c, std::vector<Check>& out) {
    const std::string who = m->label();
    if (!m->flags().log_concave) {
        out.push_back(skipped("mle_forms", who, "density is not log-concave"));
        out.push_back(skipped("mle_domination", who, "density is not log-concave"));
        return;
    }
    double forms = 0.0, domination = 0.0;
    for (double eps : c.rate_eps) {
        const MleRateDetail d = mle_rate_detail(*m, eps);
        const auto rel = [](double a, double b) {
            if (a == b) return 0.0;
            return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b));
        };
        forms = std::max({forms, rel(d.beta_plus, d.beta_plus_alt), rel(d.beta_minus, d.beta_minus_alt)});
        const RatePair r = exact_rate(EstimatorSpec::mle(), *m, c.theta, eps);
        const MleLowerBound lb = mle_rate_lower_bound(*m, c.theta, eps);
        domination = std::max({domination, lb.lower_plus - r.beta_plus, lb.lower_minus - r.beta_minus});
    }
    out.push_back(judged("mle_forms", who, forms, c.tolerances.mle_forms, "relative gap between the two integral forms"));
    out.push_back(judged("mle_domination", who, std::max(domination, 0.0), c.tolerances.mle_domination,
                         "largest shortfall below the Renyi lower bound"));
    if (m->flags().monotone_decreasing) {
        double gap = 0.0;
        for (double eps : c.rate_eps) {
            const RatePair via_mle = exact_rate(EstimatorSpec::mle(), *m, c.theta, eps);
            const RatePair via_min = exact_rate(EstimatorSpec::min_shift(), *m, c.theta, eps);
            const MleRateDetail d = mle_rate_detail(*m, eps);
            gap = std::max({gap, via_mle.beta_plus == via_min.beta_plus ? 0.0 : kInf,
                            std::fabs(d.beta_plus - via_min.beta_plus)});
        }
        out.push_back(judged("mle_equivalence", who, gap, 1e-4,
                             "mle rate against the min-shift rate on a monotone density"));
    }
}

bool mc_family(const DensityModel& m) { return m.name() == "uniform" || m.name() == "exponential"; }

void verify_mc(const ModelPtr& m, const ExperimentConfig& c, std::size_t family_index, std::vector<Check>& out) {
    const std::string who = m->label();
    if (!mc_family(*m)) return;
    if (c.reps < 10000) {
        out.push_back(skipped("exact_vs_mc_rate", who, "needs reps >= 10000"));
        return;
    }
    const McConfig mc = mc_config(c);
    std::size_t cell = 0;
    for (std::size_t k = 0; k < c.rate_eps.size(); ++k) {
        const double eps = c.rate_eps[k];
        for (const EstimatorSpec& spec : {EstimatorSpec::min_shift(), EstimatorSpec::max_shift(), EstimatorSpec::cc(0.5),
                                          EstimatorSpec::shifted_min(eps)}) {
            try {
                check_applicable(spec, *m);
            } catch (const HypothesisGate&) {
                continue;
            }
            const std::uint64_t seed = derive_key(c.master_seed, 100 + family_index, cell++);
            const RatePair exact = exact_rate(spec, *m, c.theta, eps);
            const RatePair literal = literal_rate(spec, *m, c.theta, eps);
            const Side side = exact.beta_plus <= exact.beta_minus ? Side::plus : Side::minus;
            const double target = exact.beta();
            const double lit = side == Side::plus ? literal.beta_plus : literal.beta_minus;
            const RateEstimate est = mc_rate(spec, m, c.theta, eps, side, c.n_grid, c.reps, seed, mc);
            const std::string label = spec.label() + " eps=" + format_value(eps) + " side " + side_name(side);

            const bool covered = est.ci_low <= target && (est.lower_bound_only || target <= est.ci_high);
            const double miss = covered ? 0.0 : std::max(est.ci_low - target, target - est.ci_high);
            Check rate{"exact_vs_mc_rate", who, covered ? "pass" : "fail", miss, 0.0,
                       label + ": exact " + format_value(target) + ", mc " + format_value(est.value) + " [" +
                           format_value(est.ci_low) + ", " + format_value(est.ci_high) + "]" +
                           (differs(lit, target) ? ", literal form gives " + format_value(lit) : "")};
            out.push_back(rate);

            // Cell by cell: exact finite-n tail inside Bonferroni-adjusted bands.
            std::vector<std::uint64_t> counts;
            for (const auto& cl : est.cells) counts.push_back(cl.exceedances);
            const double conf = 1.0 - (1.0 - mc.confidence) / static_cast<double>(c.n_grid.size());
            const RateEstimate banded = fit_rate(c.n_grid, counts, c.reps, conf);
            double worst = 0.0;
            for (std::size_t j = 0; j < c.n_grid.size(); ++j) {
                const double p = exact_tail(spec, *m, eps, side, c.n_grid[j]);
                const auto& b = banded.cells[j];
                const double lo = b.band_low, hi = b.band_high;
                if (p < lo) worst = std::max(worst, std::log(lo / p));
                if (p > hi) worst = std::max(worst, std::log(p / hi));
            }
            out.push_back(Check{"exact_vs_mc_tail", who, worst == 0.0 ? "pass" : "fail", worst, 0.0,
                                label + ": log distance of exact tails outside the bands"});
        }
    }
}

void verify_slopes(const ModelPtr& m, const ExperimentConfig& c, const BoundsBundle& b, std::vector<Check>& out) {
    const std::string who = m->label();
    const double tol = c.tolerances.slope;
    double worst = -kInf;
    std::string worst_label;
    for (const EstimatorSpec& spec : {EstimatorSpec::min_shift(), EstimatorSpec::max_shift(), EstimatorSpec::cc(0.5),
                                      EstimatorSpec::mle(), EstimatorSpec::lr(0.1), EstimatorSpec::shifted_min(0.1)}) {
        try {
            check_applicable(spec, *m);
        } catch (const HypothesisGate&) {
            continue;
        }
        const SlopeReport r = slope_report(spec, *m, c.theta, b.law.eps_grid, b.law, b.bounds);
        const double excess = r.slope / b.bounds.alpha_bar_1 - 1.0;
        if (excess > worst) {
            worst = excess;
            worst_label = spec.label();
        }
    }
    out.push_back(judged("slope_bound", who, std::max(worst, 0.0), tol,
                         "largest relative excess over alpha_bar_1 (" + worst_label + ")"));

    const auto attain = [&](const EstimatorSpec& spec) {
        const SlopeReport r = slope_report(spec, *m, c.theta, b.law.eps_grid, b.law, b.bounds);
        const double gap = std::fabs(r.slope / b.bounds.alpha_bar_1 - 1.0);
        out.push_back(judged("slope_attainment", who, gap, tol,
                             spec.label() + " slope " + format_value(r.slope) + " against alpha_bar_1 " +
                                 format_value(b.bounds.alpha_bar_1)));
    };
    bool any = false;
    if (m->flags().log_concave) {
        attain(EstimatorSpec::lr(0.1));
        any = true;
    }
    if (m->flags().monotone_decreasing && m->support().lower_finite()) {
        attain(EstimatorSpec::shifted_min(0.1));
        any = true;
    }
    if (!any) out.push_back(skipped("slope_attainment", who, "neither log-concave nor monotone"));
}

void verify_duality(const ExperimentConfig& c, std::vector<Check>& out) {
    const std::vector<std::pair<std::string, std::function<double(double)>>> fns{
        {"t(1-t)", [](double t) { return t * (1.0 - t); }},
        {"min(t,1-t)", [](double t) { return std::min(t, 1.0 - t); }},
        {"constant 0.7", [](double) { return 0.7; }}};
    for (const auto& [name, f] : fns) {
        double worst = 0.0;
        for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) worst = std::max(worst, std::fabs(duality_check(f, s) - f(s)));
        out.push_back(judged("duality", "-", worst, c.tolerances.duality, name + " at five s values"));
    }
}

void verify_chernoff(const ExperimentConfig& c, std::vector<Check>& out) {
    const std::vector<std::size_t> n_grid{10, 20, 30, 40, 50, 60};
    for (std::size_t i = 0; i < c.chernoff_pairs.size(); ++i) {
        const ChernoffPair& p = c.chernoff_pairs[i];
        const ModelPtr m = build_family(p.family);
        const std::string who = m->label();
        if (c.reps < 1000) {
            out.push_back(skipped("chernoff_attainment", who, "needs reps >= 1000"));
            continue;
        }
        const TestError t = test_exponents(m, p.theta1, p.theta2, n_grid, c.reps,
                                           derive_key(c.master_seed, 200, i), mc_config(c));
        const double v = t.combined.value;
        const double gap = t.target > 0.0 ? std::fabs(v - t.target) / t.target : std::fabs(v);
        out.push_back(judged("chernoff_attainment", who, gap, c.tolerances.chernoff,
                             "shift " + format_value(p.theta1) + " -> " + format_value(p.theta2) + ": simulated " +
                                 format_value(v) + ", Chernoff " + format_value(t.target) +
                                 (t.target > 0.0 ? " (relative gap)" : " (absolute)")));
    }
}

json checks_json(const std::vector<Check>& checks) {
    json list = json::array();
    for (const auto& k : checks)
        list.push_back(json{{"name", k.name},
                            {"family", k.family},
                            {"status", k.status},
                            {"measured", num(k.measured)},
                            {"tolerance", num(k.tolerance)},
                            {"note", k.note}});
    return list;
}

// ---- report -------------------------------------------------------------------

struct SummaryRow {
    std::string run, command, family, quantity, estimator, epsilon, value, ci_low, ci_high, status;
};

void collect_rows(const RunManifest& man, const std::string& run, const std::set<std::string>& bad,
                  std::vector<SummaryRow>& rows) {
    const auto usable = [&](const std::string& name) {
        return !bad.count(name) && std::any_of(man.files.begin(), man.files.end(),
                                               [&](const ManifestFile& f) { return f.path == name; });
    };
    const auto text = [](const json& j) {
        if (j.is_string()) return j.get<std::string>();
        if (j.is_boolean()) return std::string(j.get<bool>() ? "true" : "false");
        if (j.is_number()) return format_value(j.get<double>());
        return j.dump();
    };
    const fs::path dir = man.directory;
    if (usable("bounds_report.json")) {
        const json b = json::parse(read_file(dir / "bounds_report.json"));
        for (const char* q : {"alpha_bar_1", "alpha_bar_2", "kappa", "coincide"})
            rows.push_back({run, man.command, b.value("family", ""), q, "", "", text(b[q]), "", "", ""});
    }
    if (usable("slopes.json")) {
        const json s = json::parse(read_file(dir / "slopes.json"));
        for (const auto& e : s["estimators"]) {
            if (e.contains("refused")) {
                rows.push_back({run, man.command, s.value("family", ""), "slope", text(e["estimator"]), "", "", "",
                                "", "refused"});
                continue;
            }
            const auto& cmp = e["comparison"];
            const std::string status = cmp["attains_1"].get<bool>()   ? "attains_1"
                                       : cmp["attains_2"].get<bool>() ? "attains_2"
                                                                      : "";
            rows.push_back({run, man.command, s.value("family", ""), "slope", text(e["estimator"]), "",
                            text(e["slope"]), "", "", status});
        }
    }
    if (usable("rates.csv")) {
        const auto table = parse_csv(read_file(dir / "rates.csv"));
        for (std::size_t i = 1; i < table.size(); ++i) {
            const auto& r = table[i];
            if (r.size() < 13) continue;
            // estimator,family,theta,epsilon,side,n,exceedances,reps,beta_hat,ci_low,ci_high,method,note
            if (!r[5].empty()) continue;
            rows.push_back({run, man.command, r[1], "rate_" + r[4], r[0], r[3], r[8], r[9], r[10], r[11]});
        }
    }
    if (usable("verify.json")) {
        const json v = json::parse(read_file(dir / "verify.json"));
        for (const auto& k : v["checks"])
            rows.push_back({run, man.command, text(k["family"]), "verify:" + text(k["name"]), "", "",
                            text(k["measured"]), "", text(k["tolerance"]), text(k["status"])});
    }
}

} // namespace

// ---- public API ---------------------------------------------------------------

ExperimentConfig::ExperimentConfig()
    : eps_grid(default_eps_grid()),
      s_grid(default_s_grid()),
      verify_families(builtin_suite()),
      chernoff_pairs{{{"uniform", {}}, 0.0, 0.2}, {{"gaussian", {}}, 0.0, 1.0}} {}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte > 0 ? byte - 1 : 0), '\n'));
        std::string msg = e.what();
        if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw ConfigError(msg, line);
    }
    if (!root.is_object()) throw ConfigError("top level must be a JSON object", 1);

    const ConfigReader rd(text);
    ExperimentConfig c;
    for (const auto& [key, v] : root.items()) {
        if (key == "family") {
            c.family = rd.family(v, key);
        } else if (key == "theta") {
            c.theta = rd.number(v, key);
        } else if (key == "eps_grid") {
            c.eps_grid = rd.numbers(v, key);
        } else if (key == "rate_eps") {
            c.rate_eps = rd.numbers(v, key);
        } else if (key == "s_grid") {
            c.s_grid = rd.numbers(v, key);
        } else if (key == "n_grid") {
            if (!v.is_array()) rd.fail(key, "expected an array of integers");
            c.n_grid.clear();
            for (const auto& x : v) c.n_grid.push_back(rd.unsigned_int(x, key));
        } else if (key == "reps") {
            c.reps = rd.unsigned_int(v, key);
        } else if (key == "master_seed") {
            c.master_seed = rd.unsigned_int(v, key);
        } else if (key == "estimators") {
            if (!v.is_array()) rd.fail(key, "expected an array of estimator labels");
            c.estimators.clear();
            for (const auto& x : v) c.estimators.push_back(rd.string(x, key));
        } else if (key == "monte_carlo") {
            if (!v.is_boolean()) rd.fail(key, "expected true or false");
            c.monte_carlo = v.get<bool>();
        } else if (key == "output_dir") {
            c.output_dir = rd.string(v, key);
        } else if (key == "workers") {
            c.workers = static_cast<unsigned>(rd.unsigned_int(v, key));
        } else if (key == "chunk") {
            c.chunk = rd.unsigned_int(v, key);
        } else if (key == "tolerances") {
            if (!v.is_object()) rd.fail(key, "expected an object");
            const std::size_t from = rd.offset_of(key);
            Tolerances& t = c.tolerances;
            for (const auto& [tk, tv] : v.items()) {
                double* slot = tk == "sandwich"         ? &t.sandwich
                               : tk == "concavity"      ? &t.concavity
                               : tk == "order"          ? &t.order
                               : tk == "duality"        ? &t.duality
                               : tk == "mle_forms"      ? &t.mle_forms
                               : tk == "mle_domination" ? &t.mle_domination
                               : tk == "slope"          ? &t.slope
                               : tk == "chernoff"       ? &t.chernoff
                                                        : nullptr;
                if (!slot) rd.fail(tk, "unknown tolerance", from);
                if (!tv.is_number()) rd.fail(tk, "expected a number", from);
                *slot = tv.get<double>();
            }
        } else if (key == "verify_families") {
            if (!v.is_array()) rd.fail(key, "expected an array of families");
            c.verify_families.clear();
            for (const auto& x : v) c.verify_families.push_back(rd.family(x, key, rd.offset_of(key)));
        } else if (key == "chernoff_pairs") {
            if (!v.is_array()) rd.fail(key, "expected an array");
            const std::size_t from = rd.offset_of(key);
            c.chernoff_pairs.clear();
            for (const auto& x : v) {
                if (!x.is_object()) rd.fail(key, "entries must be objects");
                ChernoffPair p;
                for (const auto& [pk, pv] : x.items()) {
                    if (pk == "family")
                        p.family = rd.family(pv, pk, from);
                    else if (pk == "theta1")
                        p.theta1 = rd.number(pv, pk);
                    else if (pk == "theta2")
                        p.theta2 = rd.number(pv, pk);
                    else
                        rd.fail(pk, "unknown key in chernoff pair", from);
                }
                c.chernoff_pairs.push_back(std::move(p));
            }
        } else {
            rd.fail(key, "unknown key");
        }
    }
    validate_with(c, [&](const std::string& key) { return rd.line_of(key); });
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    json families = json::array(), pairs = json::array();
    for (const auto& f : c.verify_families) families.push_back(family_json(f));
    for (const auto& p : c.chernoff_pairs)
        pairs.push_back(json{{"family", family_json(p.family)}, {"theta1", p.theta1}, {"theta2", p.theta2}});
    const Tolerances& t = c.tolerances;
    const json j{{"family", family_json(c.family)},
                 {"theta", c.theta},
                 {"eps_grid", c.eps_grid},
                 {"rate_eps", c.rate_eps},
                 {"s_grid", c.s_grid},
                 {"n_grid", c.n_grid},
                 {"reps", c.reps},
                 {"master_seed", c.master_seed},
                 {"estimators", c.estimators},
                 {"monte_carlo", c.monte_carlo},
                 {"output_dir", c.output_dir},
                 {"workers", c.workers},
                 {"chunk", c.chunk},
                 {"tolerances",
                  {{"sandwich", t.sandwich},
                   {"concavity", t.concavity},
                   {"order", t.order},
                   {"duality", t.duality},
                   {"mle_forms", t.mle_forms},
                   {"mle_domination", t.mle_domination},
                   {"slope", t.slope},
                   {"chernoff", t.chernoff}}},
                 {"verify_families", families},
                 {"chernoff_pairs", pairs}};
    return j.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& config) {
    validate_with(config, [](const std::string&) { return 0; });
}

fs::path resolve_output_dir(const ExperimentConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv("LDLAB_OUTPUT_DIR"); env && *env) return env;
    return "ldlab_out";
}

std::string tool_version() { return LDLAB_VERSION; }

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_manifest(const RunManifest& m) {
    json files = json::array();
    for (const auto& f : m.files) files.push_back(json{{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    const json j{{"command", m.command},
                 {"config_sha256", m.config_sha256},
                 {"tool_version", m.tool_version},
                 {"started", m.started},
                 {"finished", m.finished},
                 {"failures", m.failures},
                 {"files", files},
                 {"warnings", m.warnings}};
    const fs::path path = m.directory / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
}

RunManifest read_manifest(const fs::path& path) {
    const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
    json j;
    try {
        j = json::parse(read_file(file));
    } catch (const json::exception& e) {
        throw ConfigError("manifest '" + file.string() + "' is not valid JSON: " + e.what());
    }
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.config_sha256 = j.at("config_sha256").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.started = j.at("started").get<std::string>();
        m.finished = j.at("finished").get<std::string>();
        m.failures = j.value("failures", 0);
        for (const auto& f : j.at("files"))
            m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                               f.at("bytes").get<std::uintmax_t>()});
        m.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ConfigError("manifest '" + file.string() + "' is malformed: " + e.what());
    }
    m.directory = file.parent_path();
    return m;
}

std::vector<ManifestCheck> check_manifest(const RunManifest& m) {
    std::vector<ManifestCheck> out;
    for (const auto& f : m.files) {
        ManifestCheck c{f.path, false, {}};
        const fs::path p = m.directory / f.path;
        if (!fs::exists(p)) {
            c.reason = "missing";
        } else {
            const std::string content = read_file(p);
            if (content.size() != f.bytes)
                c.reason = "size changed";
            else if (sha256_hex(content) != f.sha256)
                c.reason = "checksum mismatch";
            else
                c.ok = true;
        }
        out.push_back(std::move(c));
    }
    return out;
}

RunManifest run_bounds(const ExperimentConfig& config) {
    validate_config(config);
    RunWriter w("bounds", config);
    const ModelPtr model = build_family(config.family);
    const std::string who = model->label();
    const BoundsBundle b = compute_bounds(model, config.theta, config);
    bounds_warnings(b, who, w);

    std::string renyi = csv_row({"family", "theta", "epsilon", "s", "renyi"});
    for (double eps : config.rate_eps) {
        const RenyiCurve curve = renyi_curve(model, config.theta, config.theta + eps, config.s_grid);
        const auto row = [&](double s, double v) {
            renyi += csv_row({who, format_value(config.theta), format_value(eps), format_value(s), format_value(v)});
        };
        row(0.0, curve.endpoint_left());
        for (std::size_t i = 0; i < config.s_grid.size(); ++i) row(config.s_grid[i], curve.values()[i]);
        row(1.0, curve.endpoint_right());
    }
    w.write("renyi_curve.csv", renyi);

    json log_values = json::array();
    for (double v : b.law.log_values) log_values.push_back(num(v));
    json eps = json::array();
    for (double v : b.law.eps_grid) eps.push_back(num(v));
    w.write_json("scaling_law.json", json{{"family", who},
                                          {"theta", num(config.theta)},
                                          {"kappa_hat", num(b.law.kappa_hat)},
                                          {"intercept", num(b.law.intercept)},
                                          {"r_squared", num(b.law.r_squared)},
                                          {"poor_fit", b.law.poor_fit},
                                          {"source_s", num(b.law.source_s)},
                                          {"eps_grid", eps},
                                          {"log_values", log_values}});

    std::string limit = csv_row({"family", "s", "value", "converged", "fallback", "change"});
    limit += csv_row({who, "0", format_value(b.curve.endpoint_left()), "true", "false", "0"});
    for (std::size_t i = 0; i < b.curve.s_grid().size(); ++i) {
        const Extrapolation& d = b.curve.diagnostics()[i];
        limit += csv_row({who, format_value(b.curve.s_grid()[i]), format_value(b.curve.values()[i]),
                          d.converged ? "true" : "false", d.fallback ? "true" : "false", format_value(d.change)});
    }
    limit += csv_row({who, "1", format_value(b.curve.endpoint_right()), "true", "false", "0"});
    w.write("limit_curve.csv", limit);

    const BoundsReport& r = b.bounds;
    w.write_json("bounds_report.json", json{{"family", who},
                                            {"theta", num(config.theta)},
                                            {"kappa", num(r.kappa)},
                                            {"alpha_bar_1", num(r.alpha_bar_1)},
                                            {"alpha_bar_2", num(r.alpha_bar_2)},
                                            {"s_witness_1", num(r.s_witness_1)},
                                            {"s_witness_2", num(r.s_witness_2)},
                                            {"coincide", r.coincide},
                                            {"condition_163_holds", r.condition_163_holds},
                                            {"alpha2_at_half_holds", r.alpha2_at_half_holds},
                                            {"order_holds", r.order_holds},
                                            {"coincidence_tolerance", num(kCoincidenceTolerance)},
                                            {"diagnostics", r.diagnostics}});
    return w.finish();
}

RunManifest run_rates(const ExperimentConfig& config) {
    validate_config(config);
    RunWriter w("rates", config);
    const ModelPtr model = build_family(config.family);
    const std::string who = model->label();
    const McConfig mc = mc_config(config);

    std::string csv = csv_row({"estimator", "family", "theta", "epsilon", "side", "n", "exceedances", "reps",
                               "beta_hat", "ci_low", "ci_high", "method", "note"});
    const auto row = [&](const std::string& est, double eps, const std::string& side, const std::string& n,
                         const std::string& k, const std::string& reps, double beta, double lo, double hi,
                         const std::string& method, const std::string& note) {
        csv += csv_row({est, who, format_value(config.theta), format_value(eps), side, n, k, reps, format_value(beta),
                        format_value(lo), format_value(hi), method, note});
    };
    const auto refused = [&](const std::string& est, double eps, const std::string& reason) {
        csv += csv_row({est, who, format_value(config.theta), format_value(eps), "", "", "", "", "", "", "",
                        "refused", reason});
    };

    for (std::size_t i = 0; i < config.estimators.size(); ++i) {
        const std::string& label = config.estimators[i];
        for (std::size_t k = 0; k < config.rate_eps.size(); ++k) {
            const double eps = config.rate_eps[k];
            EstimatorSpec spec;
            RatePair exact;
            try {
                spec = resolve_estimator(label, *model, eps);
                exact = exact_rate(spec, *model, config.theta, eps);
            } catch (const HypothesisGate& e) {
                refused(label, eps, e.what());
                continue;
            } catch (const InvalidArgument& e) {
                refused(label, eps, e.what());
                continue;
            }
            const std::string name = spec.label();
            const std::string method = method_name(exact.method);
            if (has_literal_form(spec.kind)) {
                const RatePair lit = literal_rate(spec, *model, config.theta, eps);
                const bool dp = differs(lit.beta_plus, exact.beta_plus);
                const bool dm = differs(lit.beta_minus, exact.beta_minus);
                row(name, eps, "plus", "", "", "", exact.beta_plus, exact.beta_plus, exact.beta_plus, method,
                    dp ? "literal form gives " + format_value(lit.beta_plus) : "");
                row(name, eps, "minus", "", "", "", exact.beta_minus, exact.beta_minus, exact.beta_minus, method,
                    dm ? "literal form gives " + format_value(lit.beta_minus) : "");
                if (dp || dm)
                    w.warn(kind_name(spec.kind) + ": corrected integral limits differ from the literal tail formula");
            } else {
                row(name, eps, "plus", "", "", "", exact.beta_plus, exact.beta_plus, exact.beta_plus, method, "");
                row(name, eps, "minus", "", "", "", exact.beta_minus, exact.beta_minus, exact.beta_minus, method, "");
            }

            if (!config.monte_carlo) continue;
            RateEstimate est;
            try {
                est = mc_rate(spec, model, config.theta, eps, Side::both, config.n_grid, config.reps,
                              derive_key(config.master_seed, i, k), mc);
            } catch (const InvalidArgument& e) {
                refused(name, eps, e.what());
                continue;
            }
            const std::string reps = std::to_string(config.reps);
            std::uint64_t total = 0;
            for (const RateCell& cell : est.cells) {
                const double n = static_cast<double>(cell.n);
                total += cell.exceedances;
                row(name, eps, "both", std::to_string(cell.n), std::to_string(cell.exceedances), reps,
                    -std::log(cell.p_hat) / n, -std::log(cell.band_high) / n, -std::log(cell.band_low) / n,
                    "monte_carlo_cell", "");
            }
            row(name, eps, "both", "", std::to_string(total), reps, est.value, est.ci_low, est.ci_high, "monte_carlo",
                est.note);
            if (est.lower_bound_only) w.warn(name + " eps=" + format_value(eps) + ": " + est.note);
        }
    }
    w.write("rates.csv", csv);

    const BoundsBundle b = compute_bounds(model, config.theta, config);
    bounds_warnings(b, who, w);
    w.write_json("slopes.json", slopes_document(config, model, b, w));
    return w.finish();
}

RunManifest run_slopes(const ExperimentConfig& config) {
    validate_config(config);
    RunWriter w("slopes", config);
    const ModelPtr model = build_family(config.family);
    const BoundsBundle b = compute_bounds(model, config.theta, config);
    bounds_warnings(b, model->label(), w);
    w.write_json("slopes.json", slopes_document(config, model, b, w));
    return w.finish();
}

RunManifest run_verify(const ExperimentConfig& config) {
    validate_config(config);
    RunWriter w("verify", config);
    std::vector<Check> checks;
    for (std::size_t i = 0; i < config.verify_families.size(); ++i) {
        const ModelPtr m = build_family(config.verify_families[i]);
        const std::string who = m->label();
        verify_curves(m, config, checks);
        const BoundsBundle b = compute_bounds(m, config.theta, config);
        bounds_warnings(b, who, w);
        const double excess = (b.bounds.alpha_bar_2 - b.bounds.alpha_bar_1) / b.bounds.alpha_bar_1;
        checks.push_back(judged("bounds_order", who, std::max(excess, 0.0), config.tolerances.order,
                                "alpha_bar_1 " + format_value(b.bounds.alpha_bar_1) + ", alpha_bar_2 " +
                                    format_value(b.bounds.alpha_bar_2)));
        verify_mle(m, config, checks);
        verify_slopes(m, config, b, checks);
        verify_mc(m, config, i, checks);
    }
    verify_duality(config, checks);
    verify_chernoff(config, checks);

    int failures = 0;
    for (const auto& k : checks)
        if (k.status == "fail") ++failures;
    w.write_json("verify.json", json{{"failures", failures}, {"checks", checks_json(checks)}});
    return w.finish(failures);
}

ReportResult run_report(const std::vector<fs::path>& manifests, const fs::path& out_dir) {
    if (manifests.empty()) throw ConfigError("report: no manifests given");
    std::vector<RunManifest> runs;
    std::string hashes;
    for (const auto& p : manifests) {
        runs.push_back(read_manifest(p));
        hashes += runs.back().config_sha256;
    }
    RunWriter w("report", out_dir, sha256_hex(hashes));
    ReportResult result;
    std::vector<SummaryRow> rows;
    json run_list = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const RunManifest& m = runs[i];
        const std::string run = m.directory.filename().string().empty() ? std::to_string(i)
                                                                        : m.directory.filename().string();
        std::set<std::string> bad;
        json tampered = json::array();
        for (const auto& c : check_manifest(m)) {
            if (c.ok) continue;
            bad.insert(c.path);
            tampered.push_back(json{{"path", c.path}, {"reason", c.reason}});
            w.warn(run + "/" + c.path + ": " + c.reason);
            result.tampered.push_back({(m.directory / c.path).string(), false, c.reason});
        }
        collect_rows(m, run, bad, rows);
        run_list.push_back(json{{"run", run},
                                {"directory", m.directory.string()},
                                {"command", m.command},
                                {"config_sha256", m.config_sha256},
                                {"failures", m.failures},
                                {"warnings", m.warnings},
                                {"tampered", tampered}});
    }
    std::string csv = csv_row({"run", "command", "family", "quantity", "estimator", "epsilon", "value", "ci_low",
                               "ci_high", "status"});
    json row_list = json::array();
    for (const auto& r : rows) {
        csv += csv_row({r.run, r.command, r.family, r.quantity, r.estimator, r.epsilon, r.value, r.ci_low, r.ci_high,
                        r.status});
        row_list.push_back(json{{"run", r.run},
                                {"command", r.command},
                                {"family", r.family},
                                {"quantity", r.quantity},
                                {"estimator", r.estimator},
                                {"epsilon", r.epsilon},
                                {"value", r.value},
                                {"ci_low", r.ci_low},
                                {"ci_high", r.ci_high},
                                {"status", r.status}});
    }
    w.write("summary.csv", csv);
    w.write_json("summary.json", json{{"runs", run_list}, {"rows", row_list}});
    result.manifest = w.finish(static_cast<int>(result.tampered.size()));
    return result;
}

} // namespace ldlab
