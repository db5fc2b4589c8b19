#include "psps/environment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace psps {

using nlohmann::json;

namespace {

std::vector<double> broadcast_over_wildfire(const json& v, const Network& net,
                                            const std::vector<double>& fallback,
                                            const char* name) {
  std::vector<double> out = fallback;
  if (v.is_number()) {
    for (int l : net.wildfire_lines) out[l] = v.get<double>();
    return out;
  }
  if (!v.is_array() || v.size() != net.wildfire_lines.size())
    throw ParseError(fmt::format(
        "failure_model entry '{}' must be a number or an array over the {} wildfire lines",
        name, net.wildfire_lines.size()));
  for (std::size_t i = 0; i < net.wildfire_lines.size(); ++i)
    out[net.wildfire_lines[i]] = v[i].get<double>();
  return out;
}

FailureModel failure_model_from_json(const json& fm, Network& net) {
  const std::string kind = fm.value("kind", "step");
  FailureModel model;
  if (kind == "linear") {
    model = FailureModel::linear();
  } else if (kind == "step") {
    if (!fm.contains("tau")) throw ParseError("step failure model needs 'tau'");
    if (fm["tau"].is_number()) {
      model = FailureModel::step(net, fm["tau"].get<double>());
    } else {
      model.kind = FailureKind::kStep;
      model.tau = broadcast_over_wildfire(fm["tau"], net,
                                          std::vector<double>(net.lines.size(), 1.0), "tau");
      for (double t : model.tau)
        if (t < 0.0 || t > 1.0) throw ConfigError("step threshold tau outside [0, 1]");
    }
  } else if (kind == "custom") {
    if (!fm.contains("curve")) throw ParseError("custom failure model needs 'curve'");
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : fm["curve"]) {
      if (!k.is_array() || k.size() != 2)
        throw ParseError("custom curve knots must be [flow_fraction, probability] pairs");
      knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    model = FailureModel::custom(std::move(knots));
  } else {
    throw ParseError(fmt::format("unknown failure model kind '{}'", kind));
  }
  model.background_prob = fm.value("background_prob", 0.0);
  if (model.background_prob < 0.0 || model.background_prob > 1.0)
    throw ConfigError("background_prob outside [0, 1]");

  // Optional risk overrides; these adjust the network's schedule in place.
  if (fm.contains("gamma_peak"))
    net.risk.gamma_peak =
        broadcast_over_wildfire(fm["gamma_peak"], net, net.risk.gamma_peak, "gamma_peak");
  if (fm.contains("beta_peak"))
    net.risk.beta_peak =
        broadcast_over_wildfire(fm["beta_peak"], net, net.risk.beta_peak, "beta_peak");
  if (fm.contains("plateau_prob")) {
    // Choose beta so that gamma + beta * f_max equals the requested plateau.
    const double plateau = fm["plateau_prob"].get<double>();
    if (plateau < 0.0 || plateau > 1.0) throw ConfigError("plateau_prob outside [0, 1]");
    for (int l : net.wildfire_lines)
      net.risk.beta_peak[l] =
          std::max(0.0, (plateau - net.risk.gamma_peak[l]) / net.lines[l].f_max);
  }
  for (int l : net.wildfire_lines) {
    if (net.risk.gamma_peak[l] <= 0.0 || net.risk.gamma_peak[l] > 1.0)
      throw ConfigError(fmt::format("gamma_peak for line {} outside (0, 1]", net.lines[l].id));
    if (net.risk.beta_peak[l] < 0.0)
      throw ConfigError(fmt::format("beta_peak for line {} negative", net.lines[l].id));
  }
  return model;
}

}  // namespace

Scenario scenario_from_json(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ParseError("scenario document must be a JSON object");
  const int version = doc.value("schema_version", 1);
  if (version != kSchemaVersion)
    throw ParseError(fmt::format("unsupported scenario schema_version {}", version));
  if (!doc.contains("network")) throw ParseError("scenario needs a 'network' file reference");

  Scenario sc;
  sc.name = doc.value("name", "scenario");
  std::filesystem::path np = doc["network"].get<std::string>();
  if (np.is_relative() && !base_dir.empty()) np = std::filesystem::path(base_dir) / np;
  sc.network = load_network(np.string());

  if (doc.contains("horizon")) {
    const int h = doc["horizon"].get<int>();
    if (h < 1 || h > sc.network.horizon)
      throw ConfigError(fmt::format(
          "scenario horizon {} must lie in [1, {}] (the network's demand horizon)", h,
          sc.network.horizon));
    sc.network.horizon = h;
    for (auto& row : sc.network.demand_p) row.resize(h);
    for (auto& row : sc.network.demand_q) row.resize(h);
    std::erase_if(sc.network.risk.peak_hours, [h](int ph) { return ph > h; });
  }

  sc.failure_model = doc.contains("failure_model")
                         ? failure_model_from_json(doc["failure_model"], sc.network)
                         : FailureModel::linear();

  if (doc.contains("initial_topology")) {
    const json& it = doc["initial_topology"];
    if (!it.contains("closed"))
      throw ParseError("initial_topology needs a 'closed' line-id list");
    sc.initial_closed_ids = it["closed"].get<std::vector<int>>();
  }
  sc.demand_noise = doc.value("demand_noise", 0.0);
  if (sc.demand_noise < 0.0 || sc.demand_noise >= 1.0)
    throw ConfigError("demand_noise must lie in [0, 1)");
  sc.seed = doc.value("seed", std::uint64_t{1});
  if (doc.contains("evaluation")) sc.eval_episodes = doc["evaluation"].value("episodes", 200);
  if (sc.eval_episodes < 1) throw ConfigError("evaluation episodes must be positive");

  sc.fingerprint = scenario_fingerprint(sc);
  return sc;
}

nlohmann::json scenario_canonical(const Scenario& scenario) {
  json fm;
  switch (scenario.failure_model.kind) {
    case FailureKind::kLinear:
      fm["kind"] = "linear";
      break;
    case FailureKind::kStep:
      fm["kind"] = "step";
      fm["tau"] = scenario.failure_model.tau;
      break;
    case FailureKind::kCustomCurve: {
      fm["kind"] = "custom";
      json knots = json::array();
      for (auto [x, p] : scenario.failure_model.curve) knots.push_back({x, p});
      fm["curve"] = knots;
      break;
    }
  }
  fm["background_prob"] = scenario.failure_model.background_prob;
  return json{{"network", serialize_network(scenario.network)},
              {"failure_model", fm},
              {"initial_closed", scenario.initial_closed_ids},
              {"demand_noise", scenario.demand_noise}};
}

std::uint64_t scenario_fingerprint(const Scenario& scenario) {
  return fnv1a64(scenario_canonical(scenario).dump());
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open scenario file '{}'", path));
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("scenario file '{}': {}", path, e.what()));
  }
  Scenario sc = scenario_from_json(doc, std::filesystem::path(path).parent_path().string());
  if (sc.name == "scenario")
    sc.name = std::filesystem::path(path).stem().string();
  return sc;
}

Environment::Environment(const Scenario& scenario, std::vector<SwitchGroup> groups,
                         const SolutionCache* cache, std::uint64_t master_seed)
    : scenario_(&scenario),
      groups_(std::move(groups)),
      cache_(cache),
      master_seed_(master_seed) {
  const Network& net = scenario.network;
  demand_scale_ = net.max_demand();
  if (demand_scale_ <= 0.0) demand_scale_ = 1.0;

  initial_z_ = Bitset(net.switchable_lines.size());
  for (int id : scenario.initial_closed_ids) {
    const int li = net.line_index(id);
    const int pos = net.switch_position(li);
    if (pos < 0)
      throw ConfigError(fmt::format("initial topology closes non-switchable line {}", id));
    initial_z_.set(pos, true);
  }
  if (!is_radial(net, SwitchConfig{initial_z_}, full_availability(net)))
    throw ConfigError("initial topology is not radial");
}

std::vector<double> Environment::demands_at(int hour, bool reactive) const {
  const Network& net = scenario_->network;
  std::vector<double> d(net.n_buses(), 0.0);
  if (hour > net.horizon) return d;
  const auto& matrix = reactive ? net.demand_q : net.demand_p;
  for (int b = 0; b < net.n_buses(); ++b) {
    double value = matrix[b][hour - 1];
    if (scenario_->demand_noise > 0.0) {
      Rng stream(master_seed_, {episode_, stream::kDemandNoise,
                                static_cast<std::uint64_t>(hour),
                                static_cast<std::uint64_t>(b), reactive ? 1ull : 0ull});
      value *= 1.0 + scenario_->demand_noise * (2.0 * stream.uniform() - 1.0);
      value = std::max(0.0, value);
    }
    d[b] = value;
  }
  return d;
}

const State& Environment::reset(std::uint64_t episode) {
  const Network& net = scenario_->network;
  episode_ = episode;
  line_streams_.clear();
  line_streams_.reserve(net.n_lines());
  for (int l = 0; l < net.n_lines(); ++l)
    line_streams_.emplace_back(master_seed_,
                               std::initializer_list<std::uint64_t>{
                                   episode, stream::kFailure, static_cast<std::uint64_t>(l)});
  state_.av = full_availability(net);
  state_.z_pre = initial_z_;
  state_.hour = 1;
  state_.d_p = demands_at(1, false);
  state_.d_q = demands_at(1, true);
  return state_;
}

StepRecord Environment::step(const std::vector<int>& choices, std::vector<double> raw_action,
                             double log_prob, double value_estimate) {
  if (done()) throw ConfigError("step() called on a finished episode; call reset()");
  const Network& net = scenario_->network;

  StepRecord rec;
  rec.state = state_;
  rec.raw_action = std::move(raw_action);
  rec.log_prob = log_prob;
  rec.value_estimate = value_estimate;
  rec.config = config_from_choices(net, groups_, choices);

  // Switching cost counts commanded status changes, failed lines included.
  int y_count = 0;
  for (std::size_t i = 0; i < rec.config.closed.size(); ++i)
    y_count += rec.config.closed.get(i) != state_.z_pre.get(i) ? 1 : 0;

  rec.pf = solve_cached(net, rec.config, state_.av, state_.hour, *cache_);

  rec.energy_cost = net.c_energy * rec.pf.total_p_sub();
  rec.switch_cost = net.c_switch * y_count;
  rec.loss_cost = net.c_load_loss * rec.pf.total_shed_terms();
  rec.reward = -(rec.energy_cost + rec.switch_cost + rec.loss_cost);

  const RiskParams risk = risk_params_at(net.risk, state_.hour, net.horizon);
  const Availability next_av =
      sample_transitions(state_.av, rec.pf.f_p, scenario_->failure_model, net, risk,
                         line_streams_);
  rec.failures_this_step =
      static_cast<int>(state_.av.count()) - static_cast<int>(next_av.count());

  state_.av = next_av;
  state_.z_pre = rec.config.closed;
  state_.hour += 1;
  state_.d_p = demands_at(state_.hour, false);
  state_.d_q = demands_at(state_.hour, true);
  rec.next_state = state_;
  return rec;
}

std::vector<double> Environment::normalized_state() const {
  const Network& net = scenario_->network;
  std::vector<double> x;
  x.reserve(obs_dim());
  for (int l = 0; l < net.n_lines(); ++l) x.push_back(state_.av.get(l) ? 1.0 : 0.0);
  for (std::size_t i = 0; i < state_.z_pre.size(); ++i)
    x.push_back(state_.z_pre.get(i) ? 1.0 : 0.0);
  for (double d : state_.d_p) x.push_back(d / demand_scale_);
  for (double d : state_.d_q) x.push_back(d / demand_scale_);
  x.push_back(static_cast<double>(state_.hour) / net.horizon);
  return x;
}

int Environment::obs_dim() const {
  const Network& net = scenario_->network;
  return net.n_lines() + net.n_switchable() + 2 * net.n_buses() + 1;
}

std::vector<StepRecord> rollout(Environment& env, const Actor& actor, std::uint64_t episode,
                                bool deterministic) {
  env.reset(episode);
  Rng action_rng(env.master_seed(), {episode, stream::kAction});
  std::vector<StepRecord> records;
  records.reserve(env.network().horizon);
  while (!env.done()) {
    std::vector<double> raw;
    std::vector<int> choices;
    double log_prob = 0.0, value = 0.0;
    actor(env, action_rng, deterministic, &raw, &choices, &log_prob, &value);
    records.push_back(env.step(choices, std::move(raw), log_prob, value));
  }
  return records;
}

}  // namespace psps
