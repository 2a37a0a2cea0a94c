#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cavsim/coordination.hpp"
#include "cavsim/flow.hpp"
#include "cavsim/network.hpp"
#include "cavsim/routing.hpp"
#include "cavsim/sim.hpp"

namespace py = pybind11;
using namespace cavsim;

PYBIND11_MODULE(_cavsim, m) {
    m.doc() = "CAV network simulation: fundamental-diagram re-routing and "
              "signal-free intersection coordination";

    py::class_<FdParams>(m, "FdParams")
        .def(py::init([](double q_c, double k_c, double k_j) {
                 return FdParams{q_c, k_c, k_j};
             }),
             py::arg("q_c"), py::arg("k_c"), py::arg("k_j"))
        .def_readwrite("q_c", &FdParams::q_c)
        .def_readwrite("k_c", &FdParams::k_c)
        .def_readwrite("k_j", &FdParams::k_j);

    m.def("fd_flow", &fd_flow, py::arg("fd"), py::arg("k"));
    m.def("fd_speed", &fd_speed, py::arg("fd"), py::arg("k"));
    m.def("fd_travel_time", &fd_travel_time, py::arg("fd"), py::arg("k"),
          py::arg("length"));

    py::class_<RatePrediction>(m, "RatePrediction")
        .def_readonly("t_c_remaining", &RatePrediction::t_c_remaining)
        .def_readonly("r_used", &RatePrediction::r_used)
        .def_readonly("k_at_prediction", &RatePrediction::k_at_prediction);

    m.def(
        "predict_time_to_critical",
        [](double k, double rate, const FdParams& fd) {
            EdgeTrafficState st;
            st.k = k;
            st.rate = rate;
            return predict_time_to_critical(st, fd);
        },
        py::arg("k"), py::arg("rate"), py::arg("fd"));
    m.def(
        "prediction_error_magnitude",
        [](double eps, double r) -> py::object {
            auto v = prediction_error_magnitude(eps, r);
            if (!v) return py::none();
            return py::float_(*v);
        },
        py::arg("epsilon"), py::arg("r"));
    m.def(
        "t_c_bounds",
        [](double k0, double k_c, double t0, double r_min, double r_max) {
            auto b = t_c_bounds(k0, k_c, t0, RateBounds{r_min, r_max});
            return std::make_pair(b.t_c_lo, b.t_c_hi);
        },
        py::arg("k0"), py::arg("k_c"), py::arg("t0"), py::arg("r_min"), py::arg("r_max"));

    py::class_<Route>(m, "Route")
        .def_readonly("nodes", &Route::nodes)
        .def_readonly("edges", &Route::edges)
        .def_readonly("planned_cost", &Route::planned_cost);

    py::class_<Scenario>(m, "Scenario")
        .def_property_readonly("num_nodes",
                               [](const Scenario& s) { return s.graph.nodes.size(); })
        .def_property_readonly("num_edges",
                               [](const Scenario& s) { return s.graph.edges.size(); })
        .def("serialize", &serialize_scenario)
        .def("hash", &scenario_hash);

    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("parse_scenario", &parse_scenario, py::arg("json_text"));

    m.def(
        "shortest_path",
        [](const Scenario& s, const std::map<EdgeId, double>& weights, NodeId origin,
           NodeId destination) -> py::object {
            auto r = shortest_path(s.graph, weights, origin, destination);
            if (!r) return py::none();
            return py::cast(*r);
        },
        py::arg("scenario"), py::arg("weights"), py::arg("origin"), py::arg("destination"));
    m.def(
        "free_flow_shortest_path",
        [](const Scenario& s, NodeId origin, NodeId destination) -> py::object {
            auto r = shortest_path(s.graph, free_flow_weights(s.graph, s.routing.policy),
                                   origin, destination);
            if (!r) return py::none();
            return py::cast(*r);
        },
        py::arg("scenario"), py::arg("origin"), py::arg("destination"));

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("ttt", &MetricsReport::ttt)
        .def_readonly("total_delay", &MetricsReport::total_delay)
        .def_readonly("total_energy", &MetricsReport::total_energy)
        .def_readonly("time_above_critical", &MetricsReport::time_above_critical)
        .def_readonly("spawned", &MetricsReport::spawned)
        .def_readonly("completed", &MetricsReport::completed)
        .def_readonly("incomplete", &MetricsReport::incomplete)
        .def("to_json", [](const MetricsReport& r) { return metrics_to_json(r); });

    m.def(
        "run",
        [](const Scenario& s, const std::string& controller) {
            const auto kind = controller == "baseline" ? ControllerKind::Baseline
                                                       : ControllerKind::Proposed;
            return run(s, kind, s.sim);
        },
        py::arg("scenario"), py::arg("controller") = "proposed");
}
