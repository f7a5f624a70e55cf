#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlus/bench.hpp"

namespace py = pybind11;
using namespace rlus;
using nlohmann::json;

namespace {

// Structured values cross the boundary as JSON text; the Python side wraps
// them with json.loads / json.dumps.
SolverOptions options_from(const std::string& text) {
    return text.empty() ? SolverOptions{} : solver_options_from_json(json::parse(text));
}

RLocalPermutation perm_from(const std::string& text) { return rlocal_from_json(json::parse(text)); }

py::dict instance_dict(const SensingInstance& inst) {
    py::dict d;
    d["config"] = to_json(inst.config).dump();
    d["B"] = inst.B;
    d["X_star"] = inst.X_star;
    d["Y"] = inst.Y;
    d["Y_clean"] = inst.Y_clean;
    d["pi_star"] = to_json(inst.pi_star).dump();
    d["sigma2"] = inst.sigma2;
    return d;
}

}  // namespace

PYBIND11_MODULE(_rlus, m) {
    m.doc() = "r-local unlabeled sensing core";

    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);

    m.def(
        "generate",
        [](const std::string& config) { return instance_dict(generate(config_from_json(json::parse(config)))); },
        py::arg("config"));
    m.def(
        "depermute",
        [](const Matrix& B, const Matrix& Y, Index r, const std::string& options) {
            const auto sol = [&] {
                py::gil_scoped_release release;
                return depermute(B, Y, r, options_from(options).pipeline);
            }();
            py::dict d;
            d["pi_hat"] = to_json(sol.pi_hat).dump();
            d["X_hat"] = sol.X_hat;
            d["Y_hat"] = sol.Y_hat;
            d["diagnostics"] = to_json(sol)["diagnostics"].dump();
            return d;
        },
        py::arg("B"), py::arg("Y"), py::arg("r"), py::arg("options") = "");
    m.def(
        "levsort",
        [](const Matrix& B, const Matrix& Y, Index r, const std::string& variant) {
            return to_json(rlocal_levsort(B, Y, r, levsort_variant_from_string(variant))).dump();
        },
        py::arg("B"), py::arg("Y"), py::arg("r"), py::arg("variant") = "score");
    m.def(
        "solve_for_permutation",
        [](const Matrix& B, const Matrix& Y, const std::string& pi) {
            return solve_for_permutation(B, Y, perm_from(pi));
        },
        py::arg("B"), py::arg("Y"), py::arg("pi"));
    m.def(
        "apply",
        [](const std::string& pi, const Matrix& M) { return apply(perm_from(pi), M); },
        py::arg("pi"), py::arg("M"));
    m.def(
        "fractional_hamming",
        [](const std::string& a, const std::string& b) {
            return fractional_hamming(perm_from(a), perm_from(b));
        },
        py::arg("a"), py::arg("b"));
    m.def("covariance_error", &covariance_error, py::arg("Y_hat"), py::arg("Y_star"));
    m.def("relative_error", &relative_error, py::arg("X_hat"), py::arg("X_star"));
    m.def(
        "gw_match",
        [](const Matrix& c_src, const Matrix& c_tgt, double epsilon, bool polish) {
            GwConfig cfg;
            cfg.epsilon = epsilon;
            cfg.polish = polish;
            const auto res = gw_match(c_src, c_tgt, cfg);
            const auto map = res.assignment.map();
            return py::make_tuple(std::vector<Index>(map.begin(), map.end()), res.cost,
                                  res.gw.coupling.gamma());
        },
        py::arg("c_src"), py::arg("c_tgt"), py::arg("epsilon") = GwConfig{}.epsilon,
        py::arg("polish") = true);
    m.def(
        "run_trial",
        [](const std::string& config, const std::string& method, const std::string& options) {
            const auto rec = [&] {
                py::gil_scoped_release release;
                return run_trial(config_from_json(json::parse(config)), method_from_string(method),
                                 options_from(options));
            }();
            py::dict d;
            d["method"] = std::string(to_string(rec.method));
            d["frac_hamming"] = rec.frac_hamming;
            d["cov_error"] = rec.cov_error;
            d["signal_error"] = rec.signal_error;
            d["wall_ms"] = rec.wall_ms;
            d["failed"] = rec.failed;
            d["error"] = rec.error;
            return d;
        },
        py::arg("config"), py::arg("method"), py::arg("options") = "");
    m.def(
        "default_options", [] { return to_json(SolverOptions{}).dump(); });
}
