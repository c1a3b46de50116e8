// Python bindings. Structured values cross the boundary as JSON text; the
// sdn_aaa package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdnaaa/controller.hpp"
#include "sdnaaa/error.hpp"
#include "sdnaaa/model.hpp"
#include "sdnaaa/model_json.hpp"
#include "sdnaaa/simnet.hpp"

namespace py = pybind11;
using namespace sdnaaa;

namespace {

Mode mode_arg(const std::string& text) {
  auto mode = mode_from_string(text);
  if (!mode) throw Error("BAD_ARGUMENT", "mode must be proactive or reactive");
  return *mode;
}

Security security_arg(const std::string& text) {
  if (text == "psk") return Security::kPsk;
  if (text == "tls") return Security::kTls;
  throw Error("BAD_ARGUMENT", "security must be psk or tls");
}

std::string violations_json(const std::vector<Violation>& violations) {
  Json out = Json::array();
  for (const auto& v : violations) out.push_back(to_json(v));
  return out.dump();
}

Json outcome_json(const MessageOutcome& o) {
  Json j = Json::object();
  j["msg_id"] = o.msg_id;
  j["origin"] = o.origin;
  j["injected_at"] = o.injected_at;
  j["completed_at"] = o.completed_at ? Json(*o.completed_at) : Json(nullptr);
  j["status"] = o.status.kind == MessageStatus::Kind::kError ? "error" : o.status.text();
  j["code"] = o.status.error_code.empty() ? Json(nullptr) : Json(o.status.error_code);
  j["trace"] = o.trace;
  return j;
}

std::string outcomes_json(const std::map<std::string, MessageOutcome>& outcomes) {
  Json out = Json::object();
  for (const auto& [id, o] : outcomes) out[id] = outcome_json(o);
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SDN-managed AAA routing: configuration model, controller and simulator";

  static py::exception<Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(error_type.ptr(), py::make_tuple(e.code(), e.what()).ptr());
    }
  });

  m.def("parse_nai", [](const std::string& text) {
    const Nai nai = parse_nai(text);
    return py::make_tuple(nai.user, nai.realm.text());
  });
  m.def("match_realm", [](const std::string& pattern, const std::string& realm) {
    return match_realm(RealmPattern::parse(pattern), Realm::parse(realm));
  });

  m.def("validate_document", [](const std::string& text) {
    return violations_json(validate_document(document_from_json(parse_json(text))));
  });
  m.def("canonical_document", [](const std::string& text) { return encode_document(decode_document(text)); });
  m.def("redact_document", [](const std::string& text) { return encode_document(redact(decode_document(text))); });

  m.def("normalize_scenario", [](const std::string& text) { return scenario_to_json(load_scenario(text)).dump(); });
  m.def("random_scenario",
        [](std::uint64_t seed, int n_nodes, double edge_prob, int requests, const std::string& mode,
           const std::string& security) {
          RandomScenarioOptions options;
          options.seed = seed;
          options.n_nodes = n_nodes;
          options.edge_prob = edge_prob;
          options.requests = requests;
          options.mode = mode_arg(mode);
          options.security = security_arg(security);
          return scenario_to_json(random_scenario(options)).dump();
        },
        py::arg("seed"), py::arg("n_nodes") = 8, py::arg("edge_prob") = 0.5, py::arg("requests") = 10,
        py::arg("mode") = "proactive", py::arg("security") = "psk");

  m.def("next_hops", [](const std::string& scenario_text, const std::string& target) {
    return compute_next_hops(load_scenario(scenario_text).topology, target);
  });

  m.def(
      "run",
      [](const std::string& text, std::optional<std::string> mode, std::optional<std::uint64_t> seed) {
        Scenario scenario = load_scenario(text);
        if (mode) scenario.mode = mode_arg(*mode);
        if (seed) scenario.seed = *seed;
        RunResult result;
        {
          py::gil_scoped_release release;
          result = run(scenario);
        }
        return py::make_tuple(result.metrics.to_json().dump(), result.transcript, outcomes_json(result.outcomes));
      },
      py::arg("scenario"), py::arg("mode") = std::nullopt, py::arg("seed") = std::nullopt);

  py::class_<Simulation>(m, "Simulation")
      .def(py::init([](const std::string& text) { return std::make_unique<Simulation>(load_scenario(text)); }))
      .def("start", &Simulation::start)
      .def("run_until", &Simulation::run_until)
      .def_property_readonly("now", &Simulation::now)
      .def("inject", &Simulation::inject)
      .def("node_down", &Simulation::node_down)
      .def("node_up", &Simulation::node_up)
      .def("get_config",
           [](Simulation& sim, const std::string& node) {
             Session* session = sim.hub().session_for(node);
             if (session == nullptr) throw Error("NO_SESSION", node);
             const Frame reply = sim.hub().get_config(*session);
             if (reply.type != FrameType::kConfig) throw Error(reply.error ? reply.error->code : "BAD_REPLY", node);
             return encode_document(*reply.doc);
           })
      .def("controller_snapshot", [](Simulation& sim) { return sim.controller().snapshot().dump(); })
      .def("metrics", [](const Simulation& sim) { return sim.metrics().to_json().dump(); })
      .def("transcript", [](Simulation& sim) { return sim.transcript().text(); })
      .def("outcomes", [](const Simulation& sim) { return outcomes_json(sim.outcomes()); })
      .def("established_channels", &Simulation::established_channels);
}
