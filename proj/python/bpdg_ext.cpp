#include "bpdg/band.hpp"
#include "bpdg/driver.hpp"
#include "bpdg/errors.hpp"
#include "bpdg/quadrature.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bpdg;

namespace {

BandModel make_band(const std::string& model, double m_eff, double alpha) {
    BandModel b{band_kind_from_string(model), m_eff, alpha};
    b.validate();
    return b;
}

py::dict step_bounds(const RunConfig& config) {
    Simulation sim(config);
    Field f = sim.initial_field();
    const auto pot = sim.potential_for(f);
    apply_limiter(f);
    const auto sc = sim.step_control(f, pot);
    py::dict d;
    d["alpha"] = sc.alpha;
    d["s"] = std::vector<double>{sc.s[0], sc.s[1], sc.s[2]};
    d["dt_transport_x"] = sc.dt_transport_x;
    d["dt_transport_p"] = sc.dt_transport_p;
    d["dt_transport_mu"] = sc.dt_transport_mu;
    d["dt_collision"] = sc.dt_collision;
    d["dt_accepted"] = sc.dt_accepted;
    return d;
}

} // namespace

PYBIND11_MODULE(_bpdg, m) {
    m.doc() = "Python bindings for the bpdg Boltzmann-Poisson DG solver";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<StallError>(m, "StallError", PyExc_RuntimeError);
    py::register_exception<PositivityError>(m, "PositivityError", PyExc_RuntimeError);

    m.def(
        "quad_rule",
        [](const std::string& kind, int order) {
            const auto r = quad_rule(quad_kind_from_string(kind), order);
            return py::make_tuple(r.nodes, r.weights);
        },
        py::arg("kind"), py::arg("order"), "Nodes and weights of a Gauss or Lobatto rule on [0, 1].");

    m.def(
        "energy", [](double p, const std::string& model, double m_eff, double alpha) {
            return energy(make_band(model, m_eff, alpha), p);
        },
        py::arg("p"), py::arg("model") = "parabolic", py::arg("m_eff") = 1.0, py::arg("alpha") = 0.0);
    m.def(
        "velocity", [](double p, const std::string& model, double m_eff, double alpha) {
            return velocity(make_band(model, m_eff, alpha), p);
        },
        py::arg("p"), py::arg("model") = "parabolic", py::arg("m_eff") = 1.0, py::arg("alpha") = 0.0);
    m.def(
        "momentum_of_energy", [](double eps, const std::string& model, double m_eff, double alpha) {
            return momentum_of_energy(make_band(model, m_eff, alpha), eps);
        },
        py::arg("eps"), py::arg("model") = "parabolic", py::arg("m_eff") = 1.0, py::arg("alpha") = 0.0);
    m.def(
        "maxwellian_normalization", [](double p_max, const std::string& model, double m_eff, double alpha) {
            return maxwellian_normalization(make_band(model, m_eff, alpha), p_max);
        },
        py::arg("p_max"), py::arg("model") = "parabolic", py::arg("m_eff") = 1.0, py::arg("alpha") = 0.0);

    m.def(
        "ssp_rk_scalar",
        [](double u, double dt, int order, const std::function<double(double)>& L) { return ssp_rk_scalar(u, dt, order, L); },
        py::arg("u"), py::arg("dt"), py::arg("order"), py::arg("rhs"));

    m.def(
        "check_config", [](const std::string& path) { return step_bounds(load_config(path)); }, py::arg("path"),
        "Validate a config file and return the step bounds at t = 0.");

    m.def(
        "run",
        [](const std::string& path, const std::string& out_dir, int threads) {
            const RunConfig config = load_config(path);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(config, threads, out_dir);
            }
            py::dict d;
            d["exit_code"] = r.exit_code;
            d["steps"] = r.steps;
            d["t"] = r.t;
            d["message"] = r.message;
            return d;
        },
        py::arg("path"), py::arg("out_dir") = "", py::arg("threads") = 1,
        "Run a simulation from a JSON config; returns exit_code, steps, t and message.");

    m.attr("DIAGNOSTICS_HEADER") = kDiagnosticsHeader;
}
