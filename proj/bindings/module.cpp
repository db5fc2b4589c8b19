#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psps/baselines.hpp"
#include "psps/environment.hpp"
#include "psps/failure.hpp"
#include "psps/grid.hpp"
#include "psps/policy.hpp"
#include "psps/powerflow.hpp"
#include "psps/report.hpp"
#include "psps/topology.hpp"
#include "psps/trainer.hpp"

namespace py = pybind11;
using namespace psps;

namespace {

SwitchConfig config_from_ids(const Network& net, const std::vector<int>& closed_ids) {
  SwitchConfig cfg{Bitset(net.switchable_lines.size())};
  for (int id : closed_ids) {
    const int pos = net.switch_position(net.line_index(id));
    if (pos < 0) throw ConfigError(fmt::format("line {} is not switchable", id));
    cfg.closed.set(pos, true);
  }
  return cfg;
}

Bitset availability_from_failed(const Network& net, const std::vector<int>& failed_ids) {
  Bitset avail = full_availability(net);
  for (int id : failed_ids) avail.set(net.line_index(id), false);
  return avail;
}

py::dict pf_to_dict(const Network& net, const PfSolution& pf) {
  py::dict d;
  d["objective"] = pf.objective;
  d["f_p"] = pf.f_p;
  d["f_q"] = pf.f_q;
  d["v"] = pf.v;
  d["p_sub"] = pf.p_sub;
  d["q_sub"] = pf.q_sub;
  d["dp_plus"] = pf.dp_plus;
  d["dp_minus"] = pf.dp_minus;
  d["dq_plus"] = pf.dq_plus;
  d["dq_minus"] = pf.dq_minus;
  std::vector<int> line_ids;
  for (const Line& l : net.lines) line_ids.push_back(l.id);
  d["line_ids"] = line_ids;
  return d;
}

py::dict metrics_to_dict(const MetricsRecord& r) {
  py::dict d;
  d["policy"] = r.policy;
  d["scenario"] = r.scenario_name;
  d["fingerprint"] = r.fingerprint_hex;
  d["n_episodes"] = r.n_episodes;
  d["mean_cost"] = r.mean_cost();
  d["std_cost"] = r.std_cost();
  d["mean_switch_cost"] = r.mean_switch_cost();
  d["mean_failures"] = r.mean_failures();
  d["episode_costs"] = r.episode_costs;
  d["episode_failures"] = r.episode_failures;
  return d;
}

struct CachedScenario {
  Scenario scenario;
  std::vector<SwitchGroup> groups;
  SolutionCache cache;
  bool full_cache = false;

  void ensure_full_cache(int workers) {
    if (full_cache) return;
    cache.prepopulate(scenario.network, groups, workers);
    full_cache = true;
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "PSPS switching lab: grid model, dispatch LP, failure simulation, PPO trainer";

  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<StructuralError>(m, "StructuralError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<SolverError>(m, "SolverError");

  py::class_<Network>(m, "Network")
      .def_property_readonly("n_buses", &Network::n_buses)
      .def_property_readonly("n_lines", &Network::n_lines)
      .def_property_readonly("n_switchable", &Network::n_switchable)
      .def_property_readonly("horizon", [](const Network& n) { return n.horizon; })
      .def_property_readonly("switchable_line_ids",
                             [](const Network& n) {
                               std::vector<int> ids;
                               for (int l : n.switchable_lines) ids.push_back(n.lines[l].id);
                               return ids;
                             })
      .def_property_readonly("wildfire_line_ids",
                             [](const Network& n) {
                               std::vector<int> ids;
                               for (int l : n.wildfire_lines) ids.push_back(n.lines[l].id);
                               return ids;
                             })
      .def("__repr__", [](const Network& n) {
        return fmt::format("Network(buses={}, lines={}, switchable={})", n.n_buses(),
                           n.n_lines(), n.n_switchable());
      });

  m.def("load_network", &load_network, py::arg("path"));
  m.def("serialize_network",
        [](const Network& net) { return serialize_network(net).dump(2); });
  m.def(
      "risk_params_at",
      [](const Network& net, int hour) {
        const RiskParams rp = risk_params_at(net.risk, hour, net.horizon);
        return py::make_tuple(rp.gamma, rp.beta);
      },
      py::arg("network"), py::arg("hour"));

  m.def(
      "decompose_groups",
      [](const Network& net) {
        std::vector<std::vector<int>> out;
        for (const SwitchGroup& g : decompose_groups(net)) {
          std::vector<int> ids;
          for (int li : g.lines) ids.push_back(net.lines[li].id);
          out.push_back(ids);
        }
        return out;
      },
      py::arg("network"));
  m.def(
      "count_topologies",
      [](const Network& net) { return count_topologies(decompose_groups(net)); },
      py::arg("network"));
  m.def(
      "is_radial",
      [](const Network& net, const std::vector<int>& closed_ids,
         const std::vector<int>& failed_ids) {
        return is_radial(net, config_from_ids(net, closed_ids),
                         availability_from_failed(net, failed_ids));
      },
      py::arg("network"), py::arg("closed_ids"), py::arg("failed_ids") = std::vector<int>{});
  m.def(
      "map_action",
      [](const Network& net, const std::vector<double>& raw) {
        const auto groups = decompose_groups(net);
        Eigen::VectorXd vec(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) vec[i] = raw[i];
        return map_action(vec, groups);
      },
      py::arg("network"), py::arg("raw"));

  m.def(
      "solve_pf",
      [](const Network& net, const std::vector<int>& closed_ids,
         const std::vector<int>& failed_ids, int hour) {
        const auto lp = build_lp(net, config_from_ids(net, closed_ids),
                                 availability_from_failed(net, failed_ids), hour, 0.0);
        return pf_to_dict(net, solve_lp(lp));
      },
      py::arg("network"), py::arg("closed_ids"), py::arg("failed_ids"), py::arg("hour"));

  m.def(
      "failure_prob",
      [](const std::string& kind, double flow_abs, double f_max, double gamma, double beta,
         double tau) {
        FailureModel model;
        if (kind == "linear") {
          model = FailureModel::linear();
        } else if (kind == "step") {
          model.kind = FailureKind::kStep;
          model.tau = {tau};
        } else {
          throw ConfigError("kind must be 'linear' or 'step' (custom curves: use scenarios)");
        }
        return failure_prob(model, 0, flow_abs, f_max, gamma, beta);
      },
      py::arg("kind"), py::arg("flow_abs"), py::arg("f_max"), py::arg("gamma"), py::arg("beta"),
      py::arg("tau") = 1.0);

  m.def("static_presets", [] { return static_presets(); });

  py::class_<CachedScenario>(m, "Scenario")
      .def_property_readonly("name",
                             [](const CachedScenario& s) { return s.scenario.name; })
      .def_property_readonly("fingerprint",
                             [](const CachedScenario& s) {
                               return fmt::format("{:016x}", s.scenario.fingerprint);
                             })
      .def_property_readonly("eval_episodes",
                             [](const CachedScenario& s) { return s.scenario.eval_episodes; })
      .def_property_readonly("network",
                             [](const CachedScenario& s) { return s.scenario.network; })
      .def_property_readonly("n_groups",
                             [](const CachedScenario& s) { return s.groups.size(); })
      .def("__repr__", [](const CachedScenario& s) {
        return fmt::format("Scenario(name='{}', groups={})", s.scenario.name, s.groups.size());
      });

  m.def(
      "load_scenario",
      [](const std::string& path) {
        auto sc = std::make_unique<CachedScenario>();
        sc->scenario = load_scenario(path);
        sc->groups = decompose_groups(sc->scenario.network);
        return sc;
      },
      py::arg("path"));

  m.def(
      "evaluate_static",
      [](CachedScenario& sc, const std::vector<int>& closed_ids, int episodes,
         std::uint64_t seed, int workers) {
        const StaticPolicy policy =
            make_static(sc.scenario.network, sc.groups, "static", closed_ids);
        sc.cache.prepopulate_for(sc.scenario.network, {policy.config}, workers);
        PolicySource source;
        source.fixed = policy;
        const int n = episodes > 0 ? episodes : sc.scenario.eval_episodes;
        return metrics_to_dict(evaluate(sc.scenario, sc.groups, sc.cache, source, n,
                                        seed != 0 ? seed : sc.scenario.seed, workers));
      },
      py::arg("scenario"), py::arg("closed_ids"), py::arg("episodes") = 0,
      py::arg("seed") = 0, py::arg("workers") = 1);

  m.def(
      "train",
      [](CachedScenario& sc, int episodes, std::uint64_t seed, const std::string& checkpoint,
         int workers, int hidden) {
        sc.ensure_full_cache(workers);
        PpoConfig cfg;
        cfg.episodes = episodes;
        if (hidden > 0) cfg.hidden = hidden;
        const std::uint64_t s = seed != 0 ? seed : sc.scenario.seed;
        const TrainResult result = train(sc.scenario, sc.groups, sc.cache, cfg, s, nullptr);
        if (!checkpoint.empty()) {
          Checkpoint ck;
          ck.shape = result.net.shape();
          ck.params = result.net.params();
          ck.demand_scale = std::max(sc.scenario.network.max_demand(), 1e-12);
          ck.horizon = sc.scenario.network.horizon;
          ck.scenario_fingerprint = sc.scenario.fingerprint;
          ck.seed = s;
          ck.episodes_trained = episodes;
          save_checkpoint(checkpoint, ck);
        }
        py::dict out;
        out["episodes"] = episodes;
        out["final_raw_cost"] = result.log.empty() ? 0.0 : result.log.back().raw_cost;
        out["final_entropy"] = result.log.empty() ? 0.0 : result.log.back().loss.entropy;
        return out;
      },
      py::arg("scenario"), py::arg("episodes"), py::arg("seed") = 0,
      py::arg("checkpoint") = std::string{}, py::arg("workers") = 1, py::arg("hidden") = 0);

  m.def(
      "evaluate_checkpoint",
      [](CachedScenario& sc, const std::string& checkpoint_path, int episodes,
         std::uint64_t seed, int workers) {
        sc.ensure_full_cache(workers);
        PolicySource source;
        source.checkpoint = load_checkpoint(checkpoint_path);
        const int n = episodes > 0 ? episodes : sc.scenario.eval_episodes;
        return metrics_to_dict(evaluate(sc.scenario, sc.groups, sc.cache, source, n,
                                        seed != 0 ? seed : sc.scenario.seed, workers));
      },
      py::arg("scenario"), py::arg("checkpoint_path"), py::arg("episodes") = 0,
      py::arg("seed") = 0, py::arg("workers") = 1);

  m.def(
      "enumerate_static_oracle",
      [](CachedScenario& sc, int episodes_per_config, std::uint64_t seed, int workers,
         std::uint64_t max_topologies) {
        sc.ensure_full_cache(workers);
        py::list out;
        for (const OracleEntry& e :
             enumerate_static_oracle(sc.scenario, sc.groups, sc.cache, episodes_per_config,
                                     seed != 0 ? seed : sc.scenario.seed, max_topologies,
                                     workers)) {
          py::dict d;
          d["closed"] = e.closed_ids;
          d["mean_cost"] = e.mean_cost;
          d["std_cost"] = e.std_cost;
          d["mean_failures"] = e.mean_failures;
          out.append(d);
        }
        return out;
      },
      py::arg("scenario"), py::arg("episodes_per_config"), py::arg("seed") = 0,
      py::arg("workers") = 1, py::arg("max_topologies") = 500);
}
