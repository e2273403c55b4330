#include "ldlab/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace ldlab;

struct Overrides {
    std::string config_path;
    std::string family;
    std::vector<std::string> params;
    std::optional<double> theta;
    std::vector<double> eps_grid;
    std::vector<double> rate_eps;
    std::vector<double> s_grid;
    std::vector<std::size_t> n_grid;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> estimators;
    bool no_mc = false;
    std::string out;
    std::optional<unsigned> workers;
    std::optional<std::size_t> chunk;
    std::vector<std::string> tolerances;
    std::string suite;
    std::vector<std::string> chernoff_pairs;
};

std::pair<std::string, double> key_value(const std::string& text, const std::string& flag) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(flag + " expects key=value, got '" + text + "'");
    const std::string value = text.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw ConfigError(flag + ": '" + value + "' is not a number");
    return {text.substr(0, eq), v};
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void set_tolerance(Tolerances& t, const std::string& key, double v) {
    if (key == "all") {
        t = {v, v, v, v, v, v, v, v};
        return;
    }
    double* slot = key == "sandwich"         ? &t.sandwich
                   : key == "concavity"      ? &t.concavity
                   : key == "order"          ? &t.order
                   : key == "duality"        ? &t.duality
                   : key == "mle_forms"      ? &t.mle_forms
                   : key == "mle_domination" ? &t.mle_domination
                   : key == "slope"          ? &t.slope
                   : key == "chernoff"       ? &t.chernoff
                                             : nullptr;
    if (!slot) throw ConfigError("--tolerance: unknown tolerance '" + key + "'");
    *slot = v;
}

// Defaults, then the config file, then flags.
ExperimentConfig build_config(const Overrides& o) {
    ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (!o.family.empty()) {
        c.family = {o.family, {}};
        for (const auto& p : o.params) c.family.params.insert(key_value(p, "--param"));
    } else if (!o.params.empty()) {
        for (const auto& p : o.params) c.family.params[key_value(p, "--param").first] = key_value(p, "--param").second;
    }
    if (o.theta) c.theta = *o.theta;
    if (!o.eps_grid.empty()) c.eps_grid = o.eps_grid;
    if (!o.rate_eps.empty()) c.rate_eps = o.rate_eps;
    if (!o.s_grid.empty()) c.s_grid = o.s_grid;
    if (!o.n_grid.empty()) c.n_grid = o.n_grid;
    if (o.reps) c.reps = *o.reps;
    if (o.seed) c.master_seed = *o.seed;
    if (!o.estimators.empty()) c.estimators = o.estimators;
    if (o.no_mc) c.monte_carlo = false;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.workers) c.workers = *o.workers;
    if (o.chunk) c.chunk = *o.chunk;
    for (const auto& t : o.tolerances) {
        const auto [k, v] = key_value(t, "--tolerance");
        set_tolerance(c.tolerances, k, v);
    }
    if (!o.suite.empty() && o.suite != "builtin") {
        c.verify_families.clear();
        for (const auto& name : split(o.suite, ',')) c.verify_families.push_back({name, {}});
    }
    if (!o.chernoff_pairs.empty()) {
        c.chernoff_pairs.clear();
        for (const auto& text : o.chernoff_pairs) {
            const auto parts = split(text, ':');
            if (parts.size() != 3) throw ConfigError("--chernoff-pair expects family:theta1:theta2");
            c.chernoff_pairs.push_back({{parts[0], {}},
                                        key_value("theta1=" + parts[1], "--chernoff-pair").second,
                                        key_value("theta2=" + parts[2], "--chernoff-pair").second});
        }
    }
    validate_config(c);
    return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    cmd->add_option("--family", o.family, "Family name (uniform, exponential, gaussian, beta, triangular)");
    cmd->add_option("--param", o.params, "Family parameter key=value (repeatable)");
    cmd->add_option("--theta", o.theta, "True location");
    cmd->add_option("--eps-grid", o.eps_grid, "Scaling-law epsilon grid")->delimiter(',');
    cmd->add_option("--rate-eps", o.rate_eps, "Deviations for rate tables")->delimiter(',');
    cmd->add_option("--s-grid", o.s_grid, "Renyi order grid")->delimiter(',');
    cmd->add_option("--n-grid", o.n_grid, "Sample sizes for Monte Carlo")->delimiter(',');
    cmd->add_option("--reps", o.reps, "Monte Carlo replicates per sample size");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--estimators", o.estimators, "Estimator labels, e.g. min_shift,cc(0.3),lr")->delimiter(',');
    cmd->add_option("-o,--out", o.out, "Output directory (default $LDLAB_OUTPUT_DIR or ./ldlab_out)");
    cmd->add_option("--workers", o.workers, "Worker threads (0 = hardware concurrency)");
    cmd->add_option("--chunk", o.chunk, "Replicates per work item");
}

void print_manifest(const RunManifest& m) {
    std::cout << m.command << ": wrote " << m.files.size() << " files to " << m.directory.string() << "\n";
    for (const auto& f : m.files) std::cout << "  " << f.path << "  " << f.bytes << " bytes\n";
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-deviation rates and Renyi bounds for location-shift families"};
    app.set_version_flag("--version", ldlab::tool_version());
    app.require_subcommand(1);

    Overrides o;
    std::vector<std::string> manifests;
    std::string report_out = "ldlab_report";

    auto* bounds = app.add_subcommand("bounds", "Renyi curves, scaling law, limit curve and bounds");
    auto* rates = app.add_subcommand("rates", "Exact and Monte Carlo rates plus slopes");
    auto* slopes = app.add_subcommand("slopes", "Slopes against the scaling law");
    auto* verify = app.add_subcommand("verify", "Run the invariant suite");
    for (auto* cmd : {bounds, rates, slopes, verify}) add_common(cmd, o);
    rates->add_flag("--no-mc", o.no_mc, "Skip Monte Carlo rows");
    verify->add_option("--suite", o.suite, "builtin, or a comma-separated list of family names");
    verify->add_option("--tolerance", o.tolerances, "Tolerance override name=value (repeatable; name 'all' sets every one)");
    verify->add_option("--chernoff-pair", o.chernoff_pairs, "family:theta1:theta2 (repeatable)");
    auto* report = app.add_subcommand("report", "Merge run manifests into summary.csv and summary.json");
    report->add_option("manifests", manifests, "manifest.json files or run directories")->required();
    report->add_option("-o,--out", report_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*report) {
            const ReportResult r = run_report(std::vector<std::filesystem::path>(manifests.begin(), manifests.end()),
                                              report_out);
            print_manifest(r.manifest);
            for (const auto& t : r.tampered) std::cerr << "tampered: " << t.path << " (" << t.reason << ")\n";
            return r.tampered.empty() ? 0 : 1;
        }
        const ExperimentConfig config = build_config(o);
        if (*bounds) {
            print_manifest(run_bounds(config));
        } else if (*rates) {
            print_manifest(run_rates(config));
        } else if (*slopes) {
            print_manifest(run_slopes(config));
        } else if (*verify) {
            const RunManifest m = run_verify(config);
            print_manifest(m);
            std::cout << (m.failures == 0 ? "all invariants hold" : std::to_string(m.failures) + " invariant(s) failed")
                      << "\n";
            return m.failures == 0 ? 0 : 1;
        }
        return 0;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
