#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dynwalk/dynamics.hpp"
#include "dynwalk/environment.hpp"
#include "dynwalk/experiment.hpp"
#include "dynwalk/walks.hpp"

namespace py = pybind11;
using namespace dynwalk;

namespace {

Params params_from_dict(const py::dict& d) {
  KeyValues kv;
  for (const auto& [k, v] : d) kv[py::str(k)] = py::str(v);
  return params_from_kv(kv);
}

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random walk on a dynamical random-cluster environment";

  static py::exception<Error> error(m, "DynwalkError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(e.what());
    }
  });

  py::class_<Graph>(m, "Graph")
      .def_property_readonly("n", &Graph::n)
      .def_property_readonly("d", &Graph::d)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def("edges", [](const Graph& g) {
        std::vector<std::pair<int, int>> out;
        for (const Edge& e : g.edges()) out.emplace_back(e.u, e.v);
        return out;
      })
      .def("neighbors", [](const Graph& g, Vertex v) {
        auto s = g.neighbors(v);
        return std::vector<Vertex>(s.begin(), s.end());
      })
      .def("__eq__", &Graph::operator==);

  m.def("generate_regular", [](int n, int d, std::uint64_t seed) { return generate_regular(n, d, seed); },
        py::arg("n"), py::arg("d"), py::arg("seed"));
  m.def("complete_graph_k4", &complete_graph_k4);
  m.def("load_graph", py::overload_cast<const std::string&>(&load_graph));
  m.def("save_graph", py::overload_cast<const Graph&, const std::string&>(&save_graph));
  m.def("cycle_counts", &cycle_counts);

  m.def("derive_constants", [](const py::dict& d) {
    const Params p = validate_params(with_defaults(params_from_dict(d)));
    return to_python(constants_json(derive_constants(p)));
  });
  m.def("open_prob_cut", &open_prob_cut);
  m.def("open_prob_noncut", &open_prob_noncut);

  m.def("tilde_omega", [](int d, int h, int i) { return py::int_(py::str(tilde_omega(d, h, i).str())); });
  m.def("omega", [](int d, int h, int i) { return py::int_(py::str(omega_bruteforce(d, h, i).str())); });

  m.def("kappa", [](const Graph& g, std::uint64_t index) { return kappa(g, EdgeConfig::from_index(g.num_edges(), index)); });
  m.def("exact_rc_distribution", [](const Graph& g, double p, double q) {
    const DistributionTable t = exact_rc_distribution(g, p, q);
    return std::make_pair(t.support, t.probs);
  });

  m.def("simulate_counters",
        [](const Graph& g, const py::dict& d, double horizon, std::uint64_t seed, Vertex x0) {
          const Params p = validate_params(with_defaults(params_from_dict(d)));
          const Trajectory t = simulate(g, p, {EdgeConfig(g.num_edges()), x0}, horizon, seed);
          const Counters& c = t.counters;
          py::dict out;
          out["walker_rings"] = c.walker_rings;
          out["walker_moves"] = c.walker_moves;
          out["edge_rings"] = c.edge_rings;
          out["edge_opens"] = c.edge_opens;
          out["final_x"] = t.final_state.x;
          return out;
        },
        py::arg("graph"), py::arg("params"), py::arg("horizon"), py::arg("seed"), py::arg("x0") = 0);

  m.def("run_experiment", [](const py::dict& config) {
    KeyValues kv;
    for (const auto& [k, v] : config) kv[py::str(k)] = py::str(v);
    const ExperimentOutput out = execute_experiment(experiment_config_from_kv(kv));
    py::dict result;
    result["summary"] = to_python(out.summary.to_json());
    result["detail_csv"] = out.detail_csv;
    return result;
  });

  m.def("verify", [](const std::string& level, std::uint64_t seed) {
    VerifyOptions o;
    o.level = level == "full" ? VerifyLevel::Full : VerifyLevel::Fast;
    o.seed = seed;
    const VerifyReport r = verify_suite(o);
    return to_python(r.record.to_json());
  }, py::arg("level") = "fast", py::arg("seed") = 1);
}
