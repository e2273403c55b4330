#include <doctest.h>

#include "ldlab/harness.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace ldlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "ldlab_unit" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

ExperimentConfig quick(const std::string& family, const std::string& dir) {
    ExperimentConfig c;
    c.family = {family, {}};
    c.output_dir = scratch(dir).string();
    c.reps = 10000;
    c.n_grid = {5, 10, 20, 30};
    c.rate_eps = {0.1};
    return c;
}

} // namespace

TEST_CASE("config round trip") {
    const ExperimentConfig def;
    CHECK(parse_config(serialize_config(def)) == def);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ExperimentConfig c;
        c.family = trial % 2 ? FamilySpec{"beta", {{"alpha", 1.0 + u(rng)}, {"beta", 0.3 + u(rng)}}}
                             : FamilySpec{"gaussian", {{"sigma", 0.5 + u(rng)}}};
        c.theta = u(rng) * 10.0 - 5.0;
        c.eps_grid = {1e-3 * u(rng) + 1e-3, 5e-4, 2.5e-4, 1.25e-4, 6.25e-5 * (1.0 + u(rng) * 1e-3)};
        c.rate_eps = {u(rng) * 0.3 + 1e-3};
        c.s_grid = {0.1 + 0.1 * u(rng), 0.5, 0.9};
        c.n_grid = {3, 7, 11, 13 + static_cast<std::size_t>(trial)};
        c.reps = 1 + trial * 997;
        c.master_seed = rng();
        c.estimators = {"min_shift", "cc(" + std::to_string(0.1 + 0.8 * u(rng)) + ")", "lr"};
        c.monte_carlo = trial % 3 != 0;
        c.output_dir = "out/" + std::to_string(trial);
        c.workers = trial % 5;
        c.chunk = 1 + trial;
        c.tolerances.sandwich = u(rng) * 1e-6;
        c.tolerances.chernoff = u(rng);
        c.verify_families = {{"uniform", {{"a", -u(rng)}, {"b", 1.0 + u(rng)}}}};
        c.chernoff_pairs = {{{"exponential", {{"rate", 1.0 + u(rng)}}}, u(rng), u(rng)}};
        const ExperimentConfig back = parse_config(serialize_config(c));
        CHECK(back == c);
    }
}

TEST_CASE("config errors carry the line of the offending key") {
    CHECK(error_line("{\n  \"family\": \"uniform\",\n  \"eps_grid\": []\n}") == 3);
    CHECK(error_line("{\n  \"theta\": 0,\n\n  \"colour\": 1\n}") == 4);
    CHECK(error_line("{\n  \"theta\": 0,,\n}") == 2);
    CHECK(error_line("{\n  \"family\": {\"name\": \"beta\"}\n}") == 2);
    CHECK(error_line("{\n  \"n_grid\": [5, 10, 2.5, 20]\n}") == 2);
    CHECK(error_line("{\n  \"reps\": 0\n}") == 2);
    CHECK(error_line("{\n  \"estimators\": [\"median\"]\n}") == 2);
    CHECK(error_line("{\n  \"tolerances\": {\n    \"sandwich\": 0,\n    \"sandwhich\": 1\n  }\n}") == 4);
    CHECK(error_line("[1, 2]") == 1);
    CHECK_NOTHROW(parse_config("{\"estimators\": [\"lr\", \"shifted_min\", \"cc\", \"cc(0.3)\", \"lr(0.2)\"]}"));
}

TEST_CASE("output directory resolution") {
    ExperimentConfig c;
    c.output_dir = "explicit";
    CHECK(resolve_output_dir(c) == fs::path("explicit"));
    c.output_dir.clear();
    ::setenv("LDLAB_OUTPUT_DIR", "from_env", 1);
    CHECK(resolve_output_dir(c) == fs::path("from_env"));
    ::unsetenv("LDLAB_OUTPUT_DIR");
    CHECK(resolve_output_dir(c) == fs::path("ldlab_out"));
}

TEST_CASE("value formatting") {
    CHECK(format_value(0.1053605156578263) == "0.105360515658");
    CHECK(format_value(kInf) == "inf");
    CHECK(format_value(-kInf) == "-inf");
    CHECK(format_value(-0.0) == "0");
    CHECK(format_value(2.0) == "2");
}

TEST_CASE("run_bounds reports") {
    ExperimentConfig c = quick("exponential", "bounds_exp");
    const RunManifest m = run_bounds(c);
    CHECK(m.files.size() == 4);
    const json b = load_json(fs::path(c.output_dir) / "bounds_report.json");
    CHECK(b["alpha_bar_1"].get<double>() == doctest::Approx(2.0).epsilon(0.02));
    CHECK(b["alpha_bar_2"].get<double>() == doctest::Approx(1.0).epsilon(0.02));
    CHECK_FALSE(b["coincide"].get<bool>());
    CHECK(fs::exists(fs::path(c.output_dir) / "manifest.json"));

    c = quick("uniform", "bounds_uni");
    run_bounds(c);
    CHECK(load_json(fs::path(c.output_dir) / "bounds_report.json")["coincide"].get<bool>());

    c.eps_grid.clear();
    CHECK_THROWS_AS(run_bounds(c), ConfigError);
}

TEST_CASE("run_rates writes rates and slopes") {
    ExperimentConfig c = quick("uniform", "rates_uni");
    c.estimators = {"shifted_min", "min_shift"};
    run_rates(c);
    const std::string csv = slurp(fs::path(c.output_dir) / "rates.csv");
    CHECK(csv.rfind("estimator,family,theta,epsilon,side,n,exceedances,reps,beta_hat,ci_low,ci_high,method,note\n", 0) == 0);
    CHECK(csv.find("min_shift,uniform(),0,0.1,plus,,,,0.105360515658") != std::string::npos);
    CHECK(csv.find(",monte_carlo,") != std::string::npos);

    const json s = load_json(fs::path(c.output_dir) / "slopes.json");
    const json& sm = s["estimators"][0];
    CHECK(sm["slope"].get<double>() == doctest::Approx(2.0).epsilon(0.02));
    CHECK(sm["comparison"]["attains_1"].get<bool>());
}

TEST_CASE("gated estimators produce refused rows") {
    ExperimentConfig c = quick("beta", "rates_arcsine");
    c.family.params = {{"alpha", 0.5}, {"beta", 0.5}};
    c.estimators = {"mle"};
    c.monte_carlo = false;
    run_rates(c);
    const std::string csv = slurp(fs::path(c.output_dir) / "rates.csv");
    CHECK(csv.find(",refused,") != std::string::npos);
    CHECK(csv.find("log-concavity gate") != std::string::npos);
    const json s = load_json(fs::path(c.output_dir) / "slopes.json");
    CHECK(s["estimators"][0]["refused"].get<std::string>().find("log-concavity gate") != std::string::npos);
}

TEST_CASE("rates output does not depend on the worker count") {
    ExperimentConfig c = quick("uniform", "det_1");
    c.estimators = {"min_shift", "cc(0.5)", "lr"};
    c.chunk = 300;
    c.workers = 1;
    run_rates(c);
    const std::string one = slurp(fs::path(c.output_dir) / "rates.csv");
    c.output_dir = scratch("det_3").string();
    c.workers = 3;
    run_rates(c);
    CHECK(slurp(fs::path(c.output_dir) / "rates.csv") == one);
}

TEST_CASE("verify suite") {
    ExperimentConfig c = quick("uniform", "verify_ok");
    c.verify_families = {{"uniform", {}}, {"exponential", {}}};
    c.chernoff_pairs = {{{"uniform", {}}, 0.3, 0.3}};
    c.reps = 20000;
    RunManifest m = run_verify(c);
    CHECK(m.failures == 0);
    const json v = load_json(fs::path(c.output_dir) / "verify.json");
    bool saw_chernoff = false;
    for (const auto& k : v["checks"]) {
        CHECK(k["status"].get<std::string>() != "fail");
        if (k["name"] == "chernoff_attainment") {
            saw_chernoff = true;
            CHECK(k["status"] == "pass");
            CHECK(k["measured"].get<double>() == 0.0);
        }
    }
    CHECK(saw_chernoff);

    SUBCASE("zero tolerance forces sandwich failures") {
        c.output_dir = scratch("verify_zero").string();
        c.tolerances.sandwich = 0.0;
        c.chernoff_pairs.clear();
        m = run_verify(c);
        CHECK(m.failures > 0);
        const json z = load_json(fs::path(c.output_dir) / "verify.json");
        int sandwich_fail = 0;
        for (const auto& k : z["checks"])
            if (k["name"] == "sandwich" && k["status"] == "fail") ++sandwich_fail;
        CHECK(sandwich_fail > 0);
    }
}

TEST_CASE("manifests detect tampering and report merges runs") {
    ExperimentConfig c = quick("exponential", "rep_a");
    const RunManifest a = run_bounds(c);
    c = quick("uniform", "rep_b");
    c.estimators = {"min_shift"};
    const RunManifest b = run_rates(c);

    for (const auto& chk : check_manifest(read_manifest(a.directory))) CHECK(chk.ok);
    const RunManifest back = read_manifest(b.directory / "manifest.json");
    CHECK(back.config_sha256 == b.config_sha256);
    CHECK(back.files.size() == b.files.size());

    const fs::path out = scratch("rep_out");
    ReportResult r = run_report({a.directory, b.directory}, out);
    CHECK(r.tampered.empty());
    const std::string summary = slurp(out / "summary.csv");
    CHECK(summary.find("alpha_bar_1") != std::string::npos);
    CHECK(summary.find("rate_both") != std::string::npos);
    CHECK(summary.find("slope") != std::string::npos);

    {
        std::ofstream f(b.directory / "rates.csv", std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f << "E";
    }
    const auto checks = check_manifest(read_manifest(b.directory));
    bool flagged = false;
    for (const auto& chk : checks)
        if (chk.path == "rates.csv") flagged = !chk.ok && chk.reason == "checksum mismatch";
    CHECK(flagged);
    const fs::path out2 = scratch("rep_out2");
    r = run_report({a.directory, b.directory}, out2);
    REQUIRE(r.tampered.size() == 1);
    const std::string partial = slurp(out2 / "summary.csv");
    CHECK(partial.find("rate_both") == std::string::npos);
    CHECK(partial.find("alpha_bar_1") != std::string::npos);
}

TEST_CASE("sha256 known answer") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
