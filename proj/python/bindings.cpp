#include "ldlab/bounds.hpp"
#include "ldlab/divergence.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/estimators.hpp"
#include "ldlab/family.hpp"
#include "ldlab/harness.hpp"
#include "ldlab/rates.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace ldlab;

namespace {

py::dict manifest_dict(const RunManifest& m) {
    py::list files;
    for (const auto& f : m.files) {
        py::dict d;
        d["path"] = f.path;
        d["sha256"] = f.sha256;
        d["bytes"] = f.bytes;
        files.append(d);
    }
    py::dict d;
    d["command"] = m.command;
    d["config_sha256"] = m.config_sha256;
    d["tool_version"] = m.tool_version;
    d["started"] = m.started;
    d["finished"] = m.finished;
    d["files"] = files;
    d["warnings"] = m.warnings;
    d["failures"] = m.failures;
    d["directory"] = m.directory;
    return d;
}

// Runs with the GIL released; the library never calls back into Python here.
template <class F>
py::dict run_command(F f, const ExperimentConfig& c) {
    RunManifest m;
    {
        py::gil_scoped_release release;
        m = f(c);
    }
    return manifest_dict(m);
}

// Python sees families through a non-const holder; the library takes ModelPtr.
using FamilyPtr = std::shared_ptr<DensityModel>;

FamilyPtr wrap(ModelPtr p) { return std::const_pointer_cast<DensityModel>(std::move(p)); }

py::object evaluate_any(const DensityModel& f, EvalKind kind, const py::object& x, double theta) {
    if (py::isinstance<py::float_>(x) || py::isinstance<py::int_>(x))
        return py::float_(evaluate(f, kind, x.cast<double>(), theta));
    const auto in = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(x);
    if (!in) throw py::type_error("expected a number or an array of numbers");
    py::array_t<double> out(in.request().shape);
    const double* src = in.data();
    double* dst = out.mutable_data();
    for (py::ssize_t i = 0; i < in.size(); ++i) dst[i] = evaluate(f, kind, src[i], theta);
    return std::move(out);
}

std::vector<double> as_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Large-deviation rates and Renyi bounds for location-shift families";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<HypothesisGate>(m, "HypothesisGate", error.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", invalid.ptr());

    m.attr("__version__") = tool_version();
    m.attr("COINCIDENCE_TOLERANCE") = kCoincidenceTolerance;
    m.attr("SLOPE_TOLERANCE") = kSlopeTolerance;

    py::class_<QuadratureConfig>(m, "QuadratureConfig")
        .def(py::init<>())
        .def_readwrite("abs_tol", &QuadratureConfig::abs_tol)
        .def_readwrite("rel_tol", &QuadratureConfig::rel_tol)
        .def_readwrite("max_subdivisions", &QuadratureConfig::max_subdivisions)
        .def_readwrite("edge_power", &QuadratureConfig::edge_power);

    // Families

    py::class_<SupportSpec>(m, "Support")
        .def_readonly("lower", &SupportSpec::lower)
        .def_readonly("upper", &SupportSpec::upper)
        .def("__repr__", [](const SupportSpec& s) {
            return "Support(" + format_value(s.lower) + ", " + format_value(s.upper) + ")";
        });

    py::class_<EdgeProfile>(m, "EdgeProfile")
        .def_readonly("kappa1", &EdgeProfile::kappa1)
        .def_readonly("A1", &EdgeProfile::A1)
        .def_readonly("kappa2", &EdgeProfile::kappa2)
        .def_readonly("A2", &EdgeProfile::A2);

    py::class_<StructuralFlags>(m, "StructuralFlags")
        .def_readonly("log_concave", &StructuralFlags::log_concave)
        .def_readonly("monotone_decreasing", &StructuralFlags::monotone_decreasing)
        .def_readonly("regular", &StructuralFlags::regular);

    py::class_<FamilySpec>(m, "FamilySpec")
        .def(py::init<std::string, std::map<std::string, double>>(), py::arg("name"),
             py::arg("params") = std::map<std::string, double>{})
        .def_readwrite("name", &FamilySpec::name)
        .def_readwrite("params", &FamilySpec::params)
        .def(py::self == py::self)
        .def("__repr__", [](const FamilySpec& s) { return "FamilySpec('" + s.name + "')"; });

    py::class_<DensityModel, FamilyPtr>(m, "Family")
        .def_property_readonly("name", &DensityModel::name)
        .def_property_readonly("label", &DensityModel::label)
        .def_property_readonly("spec", &DensityModel::spec)
        .def_property_readonly("support", &DensityModel::support)
        .def_property_readonly("edge", &DensityModel::edge)
        .def_property_readonly("flags", &DensityModel::flags)
        .def_property_readonly("mode", &DensityModel::mode)
        .def("pdf", [](const DensityModel& f, const py::object& x, double theta) {
                 return evaluate_any(f, EvalKind::pdf, x, theta);
             }, py::arg("x"), py::arg("theta") = 0.0)
        .def("logpdf", [](const DensityModel& f, const py::object& x, double theta) {
                 return evaluate_any(f, EvalKind::logpdf, x, theta);
             }, py::arg("x"), py::arg("theta") = 0.0)
        .def("cdf", [](const DensityModel& f, const py::object& x, double theta) {
                 return evaluate_any(f, EvalKind::cdf, x, theta);
             }, py::arg("x"), py::arg("theta") = 0.0)
        .def("quantile", [](const DensityModel& f, const py::object& u, double theta) {
                 return evaluate_any(f, EvalKind::quantile, u, theta);
             }, py::arg("u"), py::arg("theta") = 0.0)
        .def("score", [](const DensityModel& f, const py::object& x, double theta) {
                 return evaluate_any(f, EvalKind::score, x, theta);
             }, py::arg("x"), py::arg("theta") = 0.0)
        .def("fisher_information", [](const DensityModel& f) { return fisher_information(f); })
        .def("sample", [](const DensityModel& f, std::size_t n, std::uint64_t seed, double theta) {
                 py::array_t<double> out(static_cast<py::ssize_t>(n));
                 sample_into(f, theta, seed, std::span<double>(out.mutable_data(), n));
                 return out;
             }, py::arg("n"), py::arg("seed"), py::arg("theta") = 0.0)
        .def("__repr__", [](const DensityModel& f) { return "<Family " + f.label() + ">"; });

    m.def("family", [](const std::string& name, const std::map<std::string, double>& params) {
              return wrap(build_family(name, params));
          }, py::arg("name"), py::arg("params") = std::map<std::string, double>{});
    m.def("family", [](const FamilySpec& spec) { return wrap(build_family(spec)); }, py::arg("spec"));

    // Divergences

    m.def("renyi_divergence", [](const FamilyPtr& f, double t1, double t2, double s,
                                 const QuadratureConfig& q) { return renyi_divergence(*f, t1, t2, s, q); },
          py::arg("family"), py::arg("theta1"), py::arg("theta2"), py::arg("s"),
          py::arg("quad") = QuadratureConfig{});
    m.def("renyi_endpoints", [](const FamilyPtr& f, double t1, double t2) {
              const RenyiEndpoints e = renyi_endpoints(*f, t1, t2);
              return py::make_tuple(e.left, e.right);
          }, py::arg("family"), py::arg("theta1"), py::arg("theta2"));

    py::class_<RenyiCurve>(m, "RenyiCurve")
        .def("at", py::vectorize(&RenyiCurve::at), py::arg("s"))
        .def_property_readonly("s_grid", &RenyiCurve::s_grid)
        .def_property_readonly("values", &RenyiCurve::values)
        .def_property_readonly("endpoint_left", &RenyiCurve::endpoint_left)
        .def_property_readonly("endpoint_right", &RenyiCurve::endpoint_right)
        .def_property_readonly("theta1", &RenyiCurve::theta1)
        .def_property_readonly("theta2", &RenyiCurve::theta2);

    m.def("renyi_curve", [](FamilyPtr f, double t1, double t2, std::optional<std::vector<double>> s_grid,
                            const QuadratureConfig& q) {
              const std::vector<double> grid = s_grid ? *s_grid : default_s_grid();
              return renyi_curve(std::move(f), t1, t2, grid, q);
          }, py::arg("family"), py::arg("theta1"), py::arg("theta2"), py::arg("s_grid") = py::none(),
          py::arg("quad") = QuadratureConfig{});
    m.def("default_s_grid", &default_s_grid);
    m.def("chernoff_exponent", [](const RenyiCurve& c) {
              const ChernoffResult r = chernoff_exponent(c);
              return py::make_tuple(r.value, r.s_star);
          }, py::arg("curve"), "Returns (value, s_star).");
    m.def("hoeffding_exponent", &hoeffding_exponent, py::arg("curve"), py::arg("r"));

    // Bounds

    py::class_<ScalingLaw>(m, "ScalingLaw")
        .def_readonly("kappa_hat", &ScalingLaw::kappa_hat)
        .def_readonly("intercept", &ScalingLaw::intercept)
        .def_readonly("eps_grid", &ScalingLaw::eps_grid)
        .def_readonly("log_values", &ScalingLaw::log_values)
        .def_readonly("r_squared", &ScalingLaw::r_squared)
        .def_readonly("poor_fit", &ScalingLaw::poor_fit)
        .def("g", py::vectorize(&ScalingLaw::g), py::arg("eps"));

    m.def("default_eps_grid", &default_eps_grid);
    m.def("fit_order", [](const FamilyPtr& f, double theta, std::optional<std::vector<double>> eps_grid,
                          const QuadratureConfig& q, double s) {
              const std::vector<double> grid = eps_grid ? *eps_grid : default_eps_grid();
              return fit_order(f, theta, grid, q, s);
          }, py::arg("family"), py::arg("theta") = 0.0, py::arg("eps_grid") = py::none(),
          py::arg("quad") = QuadratureConfig{}, py::arg("s") = 0.5);
    m.def("tabulated_law", [](const py::array_t<double>& eps, const py::array_t<double>& g) {
              const auto e = as_vector(eps);
              const auto v = as_vector(g);
              return tabulated_law(e, v);
          }, py::arg("eps"), py::arg("g"));

    py::class_<Extrapolation>(m, "Extrapolation")
        .def_readonly("value", &Extrapolation::value)
        .def_readonly("change", &Extrapolation::change)
        .def_readonly("converged", &Extrapolation::converged)
        .def_readonly("fallback", &Extrapolation::fallback);

    m.def("richardson_limit", [](const py::array_t<double>& eps, const py::array_t<double>& values, double p,
                                 double tol) {
              const auto e = as_vector(eps);
              const auto v = as_vector(values);
              return richardson_limit(e, v, p, tol);
          }, py::arg("eps"), py::arg("values"), py::arg("p"), py::arg("tol") = 1e-3);

    py::class_<LimitCurve>(m, "LimitCurve")
        .def("at", py::vectorize(&LimitCurve::at), py::arg("s"))
        .def_property_readonly("s_grid", &LimitCurve::s_grid)
        .def_property_readonly("values", &LimitCurve::values)
        .def_property_readonly("diagnostics", &LimitCurve::diagnostics)
        .def_property_readonly("endpoint_left", &LimitCurve::endpoint_left)
        .def_property_readonly("endpoint_right", &LimitCurve::endpoint_right)
        .def_property_readonly("kappa", &LimitCurve::kappa)
        .def_property_readonly("unstable_points", &LimitCurve::unstable_points)
        .def_static("from_function", [](const std::vector<double>& s_grid, const std::function<double(double)>& f,
                                        double kappa) { return LimitCurve::from_function(s_grid, f, kappa); },
                    py::arg("s_grid"), py::arg("f"), py::arg("kappa"));

    m.def("limit_curve", [](const FamilyPtr& f, double theta, const ScalingLaw& law,
                            std::optional<std::vector<double>> s_grid, const QuadratureConfig& q) {
              const std::vector<double> grid = s_grid ? *s_grid : default_s_grid();
              return limit_curve(f, theta, law, grid, q);
          }, py::arg("family"), py::arg("theta"), py::arg("law"), py::arg("s_grid") = py::none(),
          py::arg("quad") = QuadratureConfig{});

    py::class_<BoundValue>(m, "BoundValue")
        .def_readonly("value", &BoundValue::value)
        .def_readonly("s_witness", &BoundValue::s_witness);

    py::enum_<KappaBranch>(m, "KappaBranch")
        .value("automatic", KappaBranch::automatic)
        .value("below_one", KappaBranch::below_one)
        .value("one", KappaBranch::one)
        .value("above_one", KappaBranch::above_one);

    m.def("alpha_bar_1", &alpha_bar_1, py::arg("curve"), py::arg("kappa"));
    m.def("alpha_bar_2", &alpha_bar_2, py::arg("curve"), py::arg("kappa"),
          py::arg("branch") = KappaBranch::automatic);

    py::class_<BoundsReport>(m, "BoundsReport")
        .def_readonly("alpha_bar_1", &BoundsReport::alpha_bar_1)
        .def_readonly("alpha_bar_2", &BoundsReport::alpha_bar_2)
        .def_readonly("s_witness_1", &BoundsReport::s_witness_1)
        .def_readonly("s_witness_2", &BoundsReport::s_witness_2)
        .def_readonly("kappa", &BoundsReport::kappa)
        .def_readonly("coincide", &BoundsReport::coincide)
        .def_readonly("order_holds", &BoundsReport::order_holds)
        .def_readonly("diagnostics", &BoundsReport::diagnostics);

    m.def("coincidence", &coincidence, py::arg("curve"), py::arg("kappa"));
    m.def("duality_check", py::overload_cast<const std::function<double(double)>&, double>(&duality_check),
          py::arg("f"), py::arg("s"));

    // Estimators and rates

    py::enum_<EstimatorKind>(m, "EstimatorKind")
        .value("min_shift", EstimatorKind::min_shift)
        .value("max_shift", EstimatorKind::max_shift)
        .value("cc", EstimatorKind::cc)
        .value("mle", EstimatorKind::mle)
        .value("lr", EstimatorKind::lr)
        .value("shifted_min", EstimatorKind::shifted_min);

    py::class_<EstimatorSpec>(m, "Estimator")
        .def(py::init([](const std::string& label) { return parse_estimator(label); }), py::arg("label"))
        .def_readonly("kind", &EstimatorSpec::kind)
        .def_readonly("lam", &EstimatorSpec::lambda)
        .def_readonly("epsilon", &EstimatorSpec::epsilon)
        .def_property_readonly("label", &EstimatorSpec::label)
        .def(py::self == py::self)
        .def("__repr__", [](const EstimatorSpec& e) { return "Estimator('" + e.label() + "')"; });

    m.def("check_applicable", [](const EstimatorSpec& e, const FamilyPtr& f) { check_applicable(e, *f); },
          py::arg("estimator"), py::arg("family"));
    m.def("point_estimate", [](const EstimatorSpec& e, const FamilyPtr& f, const py::array_t<double>& x) {
              const auto v = as_vector(x);
              return point_estimate(e, *f, std::span<const double>(v)).value;
          }, py::arg("estimator"), py::arg("family"), py::arg("sample"));
    m.def("optimal_lambda", [](const FamilyPtr& f) { return optimal_lambda(f->edge()); }, py::arg("family"));

    py::enum_<RateMethod>(m, "RateMethod")
        .value("closed_form", RateMethod::closed_form)
        .value("quadrature_opt", RateMethod::quadrature_opt)
        .value("chernoff_equiv", RateMethod::chernoff_equiv);

    py::class_<RatePair>(m, "RatePair")
        .def_readonly("beta_plus", &RatePair::beta_plus)
        .def_readonly("beta_minus", &RatePair::beta_minus)
        .def_readonly("method", &RatePair::method)
        .def_readonly("epsilon", &RatePair::epsilon)
        .def_readonly("theta", &RatePair::theta)
        .def_property_readonly("beta", &RatePair::beta);

    m.def("exact_rate", [](const EstimatorSpec& e, const FamilyPtr& f, double theta, double eps,
                           const QuadratureConfig& q) { return exact_rate(e, *f, theta, eps, q); },
          py::arg("estimator"), py::arg("family"), py::arg("theta"), py::arg("eps"),
          py::arg("quad") = QuadratureConfig{});
    m.def("literal_rate", [](const EstimatorSpec& e, const FamilyPtr& f, double theta, double eps,
                             const QuadratureConfig& q) { return literal_rate(e, *f, theta, eps, q); },
          py::arg("estimator"), py::arg("family"), py::arg("theta"), py::arg("eps"),
          py::arg("quad") = QuadratureConfig{});
    m.def("mle_rate_lower_bound", [](const FamilyPtr& f, double theta, double eps) {
              const MleLowerBound b = mle_rate_lower_bound(*f, theta, eps);
              return py::make_tuple(b.lower_plus, b.lower_minus);
          }, py::arg("family"), py::arg("theta"), py::arg("eps"));
    m.def("exact_tail", [](const EstimatorSpec& e, const FamilyPtr& f, double eps, const std::string& side,
                           std::size_t n) { return exact_tail(e, *f, eps, parse_side(side), n); },
          py::arg("estimator"), py::arg("family"), py::arg("eps"), py::arg("side"), py::arg("n"));

    py::class_<RateCell>(m, "RateCell")
        .def_readonly("n", &RateCell::n)
        .def_readonly("exceedances", &RateCell::exceedances)
        .def_readonly("p_hat", &RateCell::p_hat)
        .def_readonly("band_low", &RateCell::band_low)
        .def_readonly("band_high", &RateCell::band_high);

    py::class_<RateEstimate>(m, "RateEstimate")
        .def_readonly("value", &RateEstimate::value)
        .def_readonly("ci_low", &RateEstimate::ci_low)
        .def_readonly("ci_high", &RateEstimate::ci_high)
        .def_readonly("lower_bound_only", &RateEstimate::lower_bound_only)
        .def_readonly("cells", &RateEstimate::cells)
        .def_readonly("reps", &RateEstimate::reps)
        .def_readonly("seed", &RateEstimate::seed)
        .def_readonly("note", &RateEstimate::note);

    m.def("fit_rate", [](const std::vector<std::size_t>& n_grid, const std::vector<std::uint64_t>& counts,
                         std::size_t reps, double confidence) {
              return fit_rate(n_grid, counts, reps, confidence);
          }, py::arg("n_grid"), py::arg("counts"), py::arg("reps"), py::arg("confidence") = 0.99);
    m.def("mc_rate", [](const EstimatorSpec& e, const FamilyPtr& f, double theta, double eps,
                        const std::string& side, const std::vector<std::size_t>& n_grid, std::size_t reps,
                        std::uint64_t seed, unsigned workers) {
              McConfig cfg;
              cfg.workers = workers;
              py::gil_scoped_release release;
              return mc_rate(e, f, theta, eps, parse_side(side), n_grid, reps, seed, cfg);
          }, py::arg("estimator"), py::arg("family"), py::arg("theta"), py::arg("eps"), py::arg("side"),
          py::arg("n_grid"), py::arg("reps"), py::arg("seed"), py::arg("workers") = 0);

    py::class_<SlopeComparison>(m, "SlopeComparison")
        .def_readonly("alpha_bar_1", &SlopeComparison::alpha_bar_1)
        .def_readonly("alpha_bar_2", &SlopeComparison::alpha_bar_2)
        .def_readonly("attains_1", &SlopeComparison::attains_1)
        .def_readonly("attains_2", &SlopeComparison::attains_2)
        .def_readonly("below_alpha_bar_1", &SlopeComparison::below_alpha_bar_1);

    py::class_<SlopeReport>(m, "SlopeReport")
        .def_readonly("estimator", &SlopeReport::estimator)
        .def_readonly("slope", &SlopeReport::slope)
        .def_readonly("extrapolation", &SlopeReport::extrapolation)
        .def_readonly("eps_grid", &SlopeReport::eps_grid)
        .def_readonly("rates", &SlopeReport::rates)
        .def_readonly("normalized", &SlopeReport::normalized)
        .def_readonly("comparison", &SlopeReport::comparison)
        .def_readonly("diagnostics", &SlopeReport::diagnostics);

    m.def("slope_report", [](const EstimatorSpec& e, const FamilyPtr& f, double theta,
                             const std::vector<double>& eps_grid, const ScalingLaw& law,
                             const BoundsReport& bounds) { return slope_report(e, *f, theta, eps_grid, law, bounds); },
          py::arg("estimator"), py::arg("family"), py::arg("theta"), py::arg("eps_grid"), py::arg("law"),
          py::arg("bounds"));

    py::class_<TestError>(m, "TestError")
        .def_readonly("n_grid", &TestError::n_grid)
        .def_readonly("e1_hat", &TestError::e1_hat)
        .def_readonly("e2_hat", &TestError::e2_hat)
        .def_readonly("e1_star", &TestError::e1_star)
        .def_readonly("e2_star", &TestError::e2_star)
        .def_readonly("combined", &TestError::combined)
        .def_readonly("target", &TestError::target)
        .def_readonly("bahadur_rao", &TestError::bahadur_rao);

    m.def("test_exponents", [](const FamilyPtr& f, double t1, double t2, const std::vector<std::size_t>& n_grid,
                               std::size_t reps, std::uint64_t seed, unsigned workers) {
              McConfig cfg;
              cfg.workers = workers;
              py::gil_scoped_release release;
              return test_exponents(f, t1, t2, n_grid, reps, seed, cfg);
          }, py::arg("family"), py::arg("theta1"), py::arg("theta2"), py::arg("n_grid"), py::arg("reps"),
          py::arg("seed"), py::arg("workers") = 0);

    // Experiment harness

    py::class_<Tolerances>(m, "Tolerances")
        .def(py::init<>())
        .def_readwrite("sandwich", &Tolerances::sandwich)
        .def_readwrite("concavity", &Tolerances::concavity)
        .def_readwrite("order", &Tolerances::order)
        .def_readwrite("duality", &Tolerances::duality)
        .def_readwrite("mle_forms", &Tolerances::mle_forms)
        .def_readwrite("mle_domination", &Tolerances::mle_domination)
        .def_readwrite("slope", &Tolerances::slope)
        .def_readwrite("chernoff", &Tolerances::chernoff);

    py::class_<ChernoffPair>(m, "ChernoffPair")
        .def(py::init<FamilySpec, double, double>(), py::arg("family"), py::arg("theta1"), py::arg("theta2"))
        .def_readwrite("family", &ChernoffPair::family)
        .def_readwrite("theta1", &ChernoffPair::theta1)
        .def_readwrite("theta2", &ChernoffPair::theta2);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("from_json", &parse_config, py::arg("text"))
        .def_static("load", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"))
        .def("to_json", &serialize_config)
        .def("validate", &validate_config)
        .def_readwrite("family", &ExperimentConfig::family)
        .def_readwrite("theta", &ExperimentConfig::theta)
        .def_readwrite("eps_grid", &ExperimentConfig::eps_grid)
        .def_readwrite("rate_eps", &ExperimentConfig::rate_eps)
        .def_readwrite("s_grid", &ExperimentConfig::s_grid)
        .def_readwrite("n_grid", &ExperimentConfig::n_grid)
        .def_readwrite("reps", &ExperimentConfig::reps)
        .def_readwrite("master_seed", &ExperimentConfig::master_seed)
        .def_readwrite("estimators", &ExperimentConfig::estimators)
        .def_readwrite("monte_carlo", &ExperimentConfig::monte_carlo)
        .def_readwrite("output_dir", &ExperimentConfig::output_dir)
        .def_readwrite("workers", &ExperimentConfig::workers)
        .def_readwrite("chunk", &ExperimentConfig::chunk)
        .def_readwrite("tolerances", &ExperimentConfig::tolerances)
        .def_readwrite("verify_families", &ExperimentConfig::verify_families)
        .def_readwrite("chernoff_pairs", &ExperimentConfig::chernoff_pairs)
        .def(py::self == py::self);

    m.def("run_bounds", [](const ExperimentConfig& c) { return run_command(run_bounds, c); }, py::arg("config"));
    m.def("run_rates", [](const ExperimentConfig& c) { return run_command(run_rates, c); }, py::arg("config"));
    m.def("run_slopes", [](const ExperimentConfig& c) { return run_command(run_slopes, c); }, py::arg("config"));
    m.def("run_verify", [](const ExperimentConfig& c) { return run_command(run_verify, c); }, py::arg("config"));
    m.def("run_report", [](const std::vector<std::filesystem::path>& manifests, const std::filesystem::path& out) {
              const ReportResult r = run_report(manifests, out);
              py::list tampered;
              for (const auto& t : r.tampered) tampered.append(py::make_tuple(t.path, t.reason));
              py::dict d = manifest_dict(r.manifest);
              d["tampered"] = tampered;
              return d;
          }, py::arg("manifests"), py::arg("out_dir"));
    m.def("sha256_file", &sha256_file, py::arg("path"));
}
