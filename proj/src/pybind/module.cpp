#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "implab/phase_portrait.hpp"
#include "implab/profile.hpp"
#include "implab/regimes.hpp"
#include "implab/simulator.hpp"
#include "implab/transforms.hpp"

namespace py = pybind11;
using namespace implab;

namespace {

// Python-facing wrapper bundling the profile table with its provenance.
struct PyProfile {
    ProfileTable table;

    static PyProfile compute(double gamma, int match_order, double tol) {
        auto shot = shoot_lambda(gamma, match_order, tol);
        return {reconstruct(shot, GasModel::make(gamma, 0.0, shot.lambda))};
    }
    static PyProfile load(const std::string& path) {
        return {load_profile(path)};
    }
};

py::dict report_dict(const PropertyReport& rep) {
    py::dict d;
    d["min_q_bar"] = rep.min_q_bar;
    d["decay_exp_q"] = rep.decay_exp_q;
    d["decay_exp_u"] = rep.decay_exp_u;
    d["decay_c_hat"] = rep.decay_c_hat;
    d["deriv_decay_exp"] = rep.deriv_decay_exp;
    d["radial_margin"] = rep.radial_margin;
    d["angular_margin"] = rep.angular_margin;
    d["farfield_margin"] = rep.farfield_margin;
    d["eta_tilde"] = rep.eta_tilde;
    return d;
}

double steady_drift_py(const PyProfile& p, std::size_t n_cells, double r_max,
                       double tau_end) {
    SimConfig cfg;
    cfg.model = p.table.model;
    cfg.frame = Frame::selfsim;
    cfg.n_cells = n_cells;
    cfg.r_max = r_max;
    cfg.viscous = false;
    cfg.time_end = tau_end;
    cfg.output_cadence = tau_end;
    cfg.cutoffs.r0 = 5.0;
    auto s0 = state_from_profile(p.table, Frame::selfsim, 0.0, n_cells + 1, r_max);
    auto init = s0;
    auto series = run(cfg, std::move(s0), &p.table);
    if (series.termination != "time-end")
        throw SimError("steady run ended early: " + series.termination);
    double drift = 0.0;
    for (std::size_t i = 0; i < series.final_state.size(); ++i)
        drift = std::max(drift, std::abs(series.final_state.field_a[i] -
                                         init.field_a[i]));
    return drift;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "self-similar implosion laboratory: core bindings";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ShootError>(m, "ShootError", PyExc_RuntimeError);
    py::register_exception<ProfileError>(m, "ProfileError", PyExc_RuntimeError);
    py::register_exception<SimError>(m, "SimError", PyExc_RuntimeError);

    m.def("alpha_of", &alpha_of, py::arg("gamma"));
    m.def("gamma_upper", &gamma_upper);
    m.def("lambda_star", &lambda_star, py::arg("gamma"));
    m.def("delta_star", &delta_star, py::arg("gamma"));
    m.def("molecule_model_threshold", &molecule_model_threshold, py::arg("b"));
    m.def(
        "dissipation_constants",
        [](double gamma, double delta, double lambda) {
            auto d = dissipation_constants(gamma, delta, lambda);
            return py::make_tuple(d.c_dis, d.delta_dis);
        },
        py::arg("gamma"), py::arg("delta"), py::arg("lambda_"),
        "Returns (c_dis, delta_dis).");
    m.def(
        "check_regime",
        [](double gamma, std::optional<double> delta,
           std::optional<double> lambda) {
            auto rep = check_regime(gamma, delta, lambda);
            py::dict d;
            d["gamma"] = rep.gamma;
            d["lambda_star"] = rep.lambda_star;
            d["delta_star"] = rep.delta_star;
            d["delta_dis"] = rep.delta_dis;
            d["condition_p1"] = rep.condition_p1;
            d["condition_p2"] = rep.condition_p2;
            d["exceptional_set"] = rep.exceptional_set;
            d["notes"] = rep.notes;
            return d;
        },
        py::arg("gamma"), py::arg("delta") = std::nullopt,
        py::arg("lambda_") = std::nullopt);
    m.def(
        "shoot",
        [](double gamma, int match_order, double tol) {
            auto s = shoot_lambda(gamma, match_order, tol);
            py::dict d;
            d["lambda_"] = s.lambda;
            d["mismatch"] = s.mismatch;
            d["match_order"] = s.achieved_match_order;
            d["sonic_q"] = s.sonic.location.q_hat;
            d["sonic_u"] = s.sonic.location.u_hat;
            return d;
        },
        py::arg("gamma"), py::arg("match_order") = 3, py::arg("tol") = 1e-10);

    py::class_<PyProfile>(m, "Profile")
        .def_static("compute", &PyProfile::compute, py::arg("gamma"),
                    py::arg("match_order") = 3, py::arg("tol") = 1e-10)
        .def_static("load", &PyProfile::load, py::arg("path"))
        .def("save",
             [](const PyProfile& p, const std::string& path) {
                 save_profile(p.table, path);
             })
        .def("verify",
             [](const PyProfile& p) { return report_dict(verify_properties(p.table)); })
        .def("steady_residual",
             [](const PyProfile& p) {
                 auto r = steady_residual(p.table);
                 return py::make_tuple(r.res_q, r.res_u);
             })
        .def("eval",
             [](const PyProfile& p, double r) {
                 auto s = eval_profile(p.table, r);
                 return py::make_tuple(s.q_bar, s.u_cal, s.dq_bar, s.du_cal);
             },
             py::arg("r"))
        .def_property_readonly(
            "gamma", [](const PyProfile& p) { return p.table.model.gamma; })
        .def_property_readonly(
            "lambda_", [](const PyProfile& p) { return p.table.model.lambda; })
        .def_property_readonly(
            "r_sonic", [](const PyProfile& p) { return p.table.r_sonic; })
        .def_property_readonly(
            "size", [](const PyProfile& p) { return p.table.size(); });

    m.def("steady_drift", &steady_drift_py, py::arg("profile"),
          py::arg("n_cells") = 256, py::arg("r_max") = 10.0,
          py::arg("tau_end") = 0.5,
          "Sup-norm drift of an inviscid self-similar run from the profile.");
}
