#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "grftail/asymptotics.hpp"
#include "grftail/cli.hpp"
#include "grftail/errors.hpp"
#include "grftail/fieldsim.hpp"
#include "grftail/kernel.hpp"
#include "grftail/lognormal.hpp"
#include "grftail/partition.hpp"

namespace py = pybind11;
using namespace grftail;

namespace {

Box make_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() != hi.size()) throw ConfigError("lo and hi must have the same length");
    return {lo, hi};
}

py::dict estimate_dict(const EstimateWithError& e) {
    py::dict d;
    d["estimate"] = e.estimate;
    d["std_error"] = e.std_error;
    d["n_samples"] = e.n_samples;
    d["ess"] = e.ess;
    d["warnings"] = e.warnings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_grftail, m) {
    m.doc() = "Tail approximations for integrals of exponentiated Gaussian random fields";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    py::class_<CovarianceModel>(m, "CovarianceModel")
        .def_static("squared_exponential", &CovarianceModel::squared_exponential, py::arg("scale"))
        .def_static("rational_quadratic", &CovarianceModel::rational_quadratic, py::arg("scale"), py::arg("alpha"))
        .def_property_readonly("dim", &CovarianceModel::dim)
        .def_property_readonly("scale", &CovarianceModel::scale)
        .def_property_readonly("alpha", &CovarianceModel::alpha)
        .def("is_standardized", &CovarianceModel::is_standardized, py::arg("tol") = kStandardizationTolerance)
        .def("__call__", &CovarianceModel::operator(), py::arg("t"));

    py::class_<SpectralMoments>(m, "SpectralMoments")
        .def_readonly("mu20", &SpectralMoments::mu20)
        .def_readonly("mu22", &SpectralMoments::mu22)
        .def_readonly("quartic_diag", &SpectralMoments::quartic_diag)
        .def_readonly("gamma", &SpectralMoments::gamma)
        .def_property_readonly("gamma_determinant", &SpectralMoments::gamma_determinant);
    m.def("spectral_moments", &spectral_moments, py::arg("model"));

    // (standardized model, sigma_half, measure_factor)
    m.def("standardize", [](const CovarianceModel& raw) {
        auto s = standardize(raw);
        return py::make_tuple(s.model, s.transform.sigma_half, s.transform.measure_factor);
    }, py::arg("raw"));

    m.def("solve_u", &solve_u, py::arg("b"), py::arg("sigma"), py::arg("d"));
    m.def("u_closed_form", &u_closed_form, py::arg("b"), py::arg("sigma"), py::arg("d"));
    m.def("minimum_log_b", &minimum_log_b, py::arg("sigma"), py::arg("d"));
    m.def("constant_H", &constant_H, py::arg("moments"), py::arg("sigma"));
    m.def("constant_H_quadrature", &constant_H_quadrature, py::arg("moments"), py::arg("sigma"));

    m.def("tail_approx", [](const CovarianceModel& model, double measure, double sigma, double b) {
        const auto a = model.is_standardized() ? tail_approx(model, measure, sigma, b)
                                               : tail_approx_raw(model, measure, sigma, b);
        py::dict d;
        d["b"] = a.b;
        d["u"] = a.u;
        d["u_tilde"] = a.u_tilde;
        d["H"] = a.H;
        d["domain_measure"] = a.domain_measure;
        d["probability"] = a.probability;
        d["log10_probability"] = a.log10_probability;
        d["out_of_range"] = a.out_of_range;
        d["warnings"] = a.warnings;
        return d;
    }, py::arg("model"), py::arg("domain_measure"), py::arg("sigma"), py::arg("b"));
    m.def("threshold_for_probability", &threshold_for_probability, py::arg("model"), py::arg("domain_measure"),
          py::arg("sigma"), py::arg("target_probability"));

    m.def("importance_sampling", [](const CovarianceModel& model, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                    int points_per_axis, double sigma, double b, long n, std::uint64_t seed, int workers) {
        const auto grid = FieldGrid::trapezoidal(make_box(lo, hi), points_per_axis);
        py::gil_scoped_release release;
        const auto e = importance_sampling_mc(model, grid, sigma, b, n, {seed, 0, workers});
        py::gil_scoped_acquire acquire;
        return estimate_dict(e);
    }, py::arg("model"), py::arg("lo"), py::arg("hi"), py::arg("points_per_axis"), py::arg("sigma"), py::arg("b"),
       py::arg("n"), py::arg("seed"), py::arg("workers") = 1);

    m.def("sample_field", [](const CovarianceModel& model, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                             int points_per_axis, std::uint64_t seed, std::uint64_t stream) {
        const auto grid = FieldGrid::trapezoidal(make_box(lo, hi), points_per_axis);
        Eigen::MatrixXd nodes(grid.size(), grid.dim());
        for (int i = 0; i < grid.size(); ++i) nodes.row(i) = grid.nodes[static_cast<std::size_t>(i)].transpose();
        return py::make_tuple(nodes, sample_field(model, grid, {seed, stream}).values);
    }, py::arg("model"), py::arg("lo"), py::arg("hi"), py::arg("points_per_axis"), py::arg("seed"),
       py::arg("stream") = 0);

    m.def("cover_counts", [](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double u, double kappa, double delta) {
        const auto c = build_cover(Domain::single(make_box(lo, hi)), u, kappa, delta);
        return py::make_tuple(c.epsilon, c.inner_indices.size(), c.outer_indices.size());
    }, py::arg("lo"), py::arg("hi"), py::arg("u"), py::arg("kappa") = 1.0, py::arg("delta") = 0.1);

    m.def("one_big_jump_approx", [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov, double b) {
        return one_big_jump_approx(LogNormalPortfolio(mu, cov), b);
    }, py::arg("mu"), py::arg("cov"), py::arg("b"));
    m.def("threshold_for_marginal_tail", &threshold_for_marginal_tail, py::arg("tail"), py::arg("mu") = 0.0,
          py::arg("variance") = 1.0);
    m.def("sum_tail_mc", [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov, double b, long n,
                            std::uint64_t seed, int workers) {
        const LogNormalPortfolio p(mu, cov);
        return estimate_dict(sum_tail_mc(p, b, n, {seed, 0, workers}));
    }, py::arg("mu"), py::arg("cov"), py::arg("b"), py::arg("n"), py::arg("seed"), py::arg("workers") = 1);

    // Same entry point as the executable; returns (exit code, stdout, stderr).
    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "grftail");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"));
}
