#pragma once

#include "ldlab/errors.hpp"
#include "ldlab/family.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ldlab {

/// Malformed or inconsistent configuration. `line` is 1-based, 0 if unknown.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& message, int line = 0);
    int line() const { return line_; }

private:
    int line_;
};

struct Tolerances {
    double sandwich = 1e-8;
    double concavity = 1e-8;
    /// Relative slack of alpha_bar_1 >= alpha_bar_2.
    double order = 1e-2;
    double duality = 1e-3;
    double mle_forms = 1e-8;
    double mle_domination = 1e-6;
    /// Relative tolerance of slope bound and attainment.
    double slope = 2e-2;
    /// Relative tolerance of the simulated testing exponent.
    double chernoff = 0.10;

    bool operator==(const Tolerances&) const = default;
};

struct ChernoffPair {
    FamilySpec family;
    double theta1 = 0.0;
    double theta2 = 0.0;

    bool operator==(const ChernoffPair&) const = default;
};

struct ExperimentConfig {
    FamilySpec family{"uniform", {}};
    double theta = 0.0;
    /// Grid for the scaling-law fit and the eps -> 0 limits.
    std::vector<double> eps_grid;
    /// Deviations at which rates are tabulated and simulated.
    std::vector<double> rate_eps{0.1, 0.25};
    std::vector<double> s_grid;
    std::vector<std::size_t> n_grid{5, 10, 20, 30, 40};
    std::size_t reps = 100000;
    std::uint64_t master_seed = 20240601;
    /// Labels such as "min_shift" or "cc(0.3)". Bare "lr" and "shifted_min"
    /// take the deviation of each row as parameter, bare "cc" the optimal lambda.
    std::vector<std::string> estimators{"min_shift", "max_shift", "cc", "mle", "lr", "shifted_min"};
    bool monte_carlo = true;
    std::string output_dir;
    unsigned workers = 0;
    std::size_t chunk = 2048;
    Tolerances tolerances;
    std::vector<FamilySpec> verify_families;
    std::vector<ChernoffPair> chernoff_pairs;

    ExperimentConfig();
    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses a JSON document; unknown keys and invalid values raise ConfigError
/// with the line of the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full-precision JSON; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);
/// Throws ConfigError for empty grids, reps == 0 and similar.
void validate_config(const ExperimentConfig& config);
/// output_dir, else $LDLAB_OUTPUT_DIR, else "ldlab_out".
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

struct ManifestFile {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string command;
    std::string config_sha256;
    std::string tool_version;
    std::string started;
    std::string finished;
    std::vector<ManifestFile> files;
    std::vector<std::string> warnings;
    /// Invariant failures (verify only).
    int failures = 0;
    std::filesystem::path directory;
};

std::string tool_version();
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes manifest.json into the manifest's directory.
void write_manifest(const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

struct ManifestCheck {
    std::string path;
    bool ok = false;
    std::string reason;
};
/// Recomputes every listed checksum.
std::vector<ManifestCheck> check_manifest(const RunManifest& manifest);

RunManifest run_bounds(const ExperimentConfig& config);
RunManifest run_rates(const ExperimentConfig& config);
RunManifest run_slopes(const ExperimentConfig& config);
RunManifest run_verify(const ExperimentConfig& config);

/// Merges the results behind several manifests into summary.csv and
/// summary.json in `out_dir`. Files whose checksum no longer matches are
/// reported and left out.
struct ReportResult {
    RunManifest manifest;
    std::vector<ManifestCheck> tampered;
};
ReportResult run_report(const std::vector<std::filesystem::path>& manifests,
                        const std::filesystem::path& out_dir);

/// 12 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_value(double v);

} // namespace ldlab
