#include "psps/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace psps {

using nlohmann::json;

int Network::bus_index(int id) const {
  auto it = bus_by_id_.find(id);
  if (it == bus_by_id_.end())
    throw ValidationError(fmt::format("unknown bus id {}", id));
  return it->second;
}

int Network::line_index(int id) const {
  auto it = line_by_id_.find(id);
  if (it == line_by_id_.end())
    throw ValidationError(fmt::format("unknown line id {}", id));
  return it->second;
}

int Network::switch_position(int line_idx) const {
  auto it = std::lower_bound(switchable_lines.begin(), switchable_lines.end(), line_idx);
  if (it == switchable_lines.end() || *it != line_idx) return -1;
  return static_cast<int>(it - switchable_lines.begin());
}

double Network::max_demand() const {
  double m = 0.0;
  for (const auto& row : demand_p)
    for (double d : row) m = std::max(m, std::abs(d));
  for (const auto& row : demand_q)
    for (double d : row) m = std::max(m, std::abs(d));
  return m;
}

void Network::finalize() {
  std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  bus_by_id_.clear();
  line_by_id_.clear();
  substations.clear();
  switchable_lines.clear();
  wildfire_lines.clear();
  for (int i = 0; i < n_buses(); ++i) {
    if (!bus_by_id_.emplace(buses[i].id, i).second)
      throw ValidationError(fmt::format("duplicate bus id {}", buses[i].id));
    if (buses[i].kind == BusKind::kSubstation) substations.push_back(i);
  }
  for (int i = 0; i < n_lines(); ++i) {
    if (!line_by_id_.emplace(lines[i].id, i).second)
      throw ValidationError(fmt::format("duplicate line id {}", lines[i].id));
    if (lines[i].switchable) switchable_lines.push_back(i);
    if (lines[i].wildfire_area) wildfire_lines.push_back(i);
  }
  if (risk.gamma_peak.empty()) risk.gamma_peak.assign(lines.size(), 0.0);
  if (risk.beta_peak.empty()) risk.beta_peak.assign(lines.size(), 0.0);
}

namespace {

// Small wrappers so schema errors carry the field path instead of nlohmann's
// internal pointer syntax.
const json& need(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(fmt::format("missing field '{}' in {}", key, where));
  return *it;
}

double need_num(const json& obj, const char* key, const char* where) {
  const json& v = need(obj, key, where);
  if (!v.is_number())
    throw ParseError(fmt::format("field '{}' in {} must be a number", key, where));
  return v.get<double>();
}

int need_int(const json& obj, const char* key, const char* where) {
  const json& v = need(obj, key, where);
  if (!v.is_number_integer())
    throw ParseError(fmt::format("field '{}' in {} must be an integer", key, where));
  return v.get<int>();
}

std::vector<std::vector<double>> parse_matrix(const json& arr, int n_rows, int n_cols,
                                              const char* name) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n_rows)
    throw ParseError(fmt::format("'{}' must be an array with one row per bus ({} rows)",
                                 name, n_rows));
  std::vector<std::vector<double>> out;
  out.reserve(n_rows);
  for (const auto& row : arr) {
    if (!row.is_array() || static_cast<int>(row.size()) != n_cols)
      throw ParseError(fmt::format("'{}' rows must have horizon length {}", name, n_cols));
    out.push_back(row.get<std::vector<double>>());
  }
  return out;
}

// Risk entries may be a scalar (broadcast over wildfire lines) or an array
// aligned with the wildfire lines in ascending line-id order.
std::vector<double> parse_risk_values(const json& v, const Network& net, const char* name) {
  std::vector<double> out(net.lines.size(), 0.0);
  if (v.is_number()) {
    for (int l : net.wildfire_lines) out[l] = v.get<double>();
    return out;
  }
  if (!v.is_array() || v.size() != net.wildfire_lines.size())
    throw ParseError(fmt::format(
        "risk entry '{}' must be a number or an array over the {} wildfire-area lines", name,
        net.wildfire_lines.size()));
  for (std::size_t i = 0; i < net.wildfire_lines.size(); ++i)
    out[net.wildfire_lines[i]] = v[i].get<double>();
  return out;
}

// Union-find used only for the connectivity warning.
struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void merge(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void validate_network(Network& net) {
  if (net.buses.empty()) throw ValidationError("network has no buses");
  if (net.substations.empty()) throw ValidationError("network has no substation bus");
  if (net.horizon < 1) throw ValidationError("horizon must be at least 1");
  if (net.base_mva <= 0.0) throw ValidationError("system base_mva must be positive");
  if (net.v_ref_sq <= 0.0) throw ValidationError("v_ref_sq must be positive");
  if (net.c_energy < 0.0 || net.c_switch < 0.0 || net.c_load_loss < 0.0)
    throw ValidationError("cost scalars must be nonnegative");

  for (const Bus& b : net.buses) {
    if (!(b.v_min_sq > 0.0))
      throw ValidationError(fmt::format("bus {}: v_min_sq must be positive", b.id));
    if (b.v_min_sq > b.v_max_sq)
      throw ValidationError(fmt::format("bus {}: v_min_sq exceeds v_max_sq", b.id));
    if (b.kind == BusKind::kSubstation) {
      if (b.p_max_inj < 0.0)
        throw ValidationError(fmt::format("bus {}: p_max_inj must be nonnegative", b.id));
      if (b.q_min_inj > b.q_max_inj)
        throw ValidationError(fmt::format("bus {}: q_min_inj exceeds q_max_inj", b.id));
    }
  }

  for (const Line& l : net.lines) {
    if (l.from_bus == l.to_bus)
      throw ValidationError(fmt::format("line {}: from_bus equals to_bus", l.id));
    net.bus_index(l.from_bus);  // throws on dangling reference
    net.bus_index(l.to_bus);
    if (l.r < 0.0 || l.x < 0.0)
      throw ValidationError(fmt::format("line {}: r and x must be nonnegative", l.id));
    if (!(l.f_max > 0.0))
      throw ValidationError(fmt::format("line {}: f_max must be positive", l.id));
  }

  if (static_cast<int>(net.demand_p.size()) != net.n_buses() ||
      static_cast<int>(net.demand_q.size()) != net.n_buses())
    throw ValidationError("demand matrices must have one row per bus");
  for (int b = 0; b < net.n_buses(); ++b) {
    if (static_cast<int>(net.demand_p[b].size()) != net.horizon ||
        static_cast<int>(net.demand_q[b].size()) != net.horizon)
      throw ValidationError(
          fmt::format("demand rows for bus {} must have horizon length", net.buses[b].id));
    for (int t = 0; t < net.horizon; ++t) {
      if (net.demand_p[b][t] < 0.0 || net.demand_q[b][t] < 0.0)
        throw ValidationError(fmt::format(
            "bus {}: demands must be nonnegative (shed bounds assume it)", net.buses[b].id));
    }
  }

  for (int l : net.wildfire_lines) {
    const double g = net.risk.gamma_peak[l];
    if (!(g > 0.0) || g > 1.0)
      throw ValidationError(
          fmt::format("line {}: gamma_peak must lie in (0, 1]", net.lines[l].id));
    if (net.risk.beta_peak[l] < 0.0)
      throw ValidationError(fmt::format("line {}: beta_peak must be nonnegative", net.lines[l].id));
  }
  if (!(net.risk.offpeak_fraction > 0.0) || net.risk.offpeak_fraction > 1.0)
    throw ValidationError("risk offpeak_fraction must lie in (0, 1]");
  for (int h : net.risk.peak_hours)
    if (h < 1 || h > net.horizon)
      throw ValidationError(fmt::format("risk peak hour {} outside horizon", h));

  // Isolated sections are legal but worth flagging.
  Dsu dsu(net.n_buses());
  for (const Line& l : net.lines) dsu.merge(net.bus_index(l.from_bus), net.bus_index(l.to_bus));
  std::set<int> roots;
  for (int b = 0; b < net.n_buses(); ++b) roots.insert(dsu.find(b));
  if (roots.size() > 1)
    net.warnings.push_back(fmt::format(
        "network graph has {} disconnected sections (counting all lines)", roots.size()));
}

Network network_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("network document must be a JSON object");
  const int version = need_int(doc, "schema_version", "network document");
  if (version != kSchemaVersion)
    throw ParseError(fmt::format("unsupported schema_version {} (expected {})", version,
                                 kSchemaVersion));

  Network net;
  const json& sys = need(doc, "system", "network document");
  net.base_mva = need_num(sys, "base_mva", "system");
  net.horizon = need_int(sys, "horizon", "system");
  net.v_ref_sq = sys.value("v_ref_sq", 1.0);
  net.c_energy = need_num(sys, "c_energy", "system");
  net.c_switch = need_num(sys, "c_switch", "system");
  net.c_load_loss = need_num(sys, "c_load_loss", "system");

  for (const auto& jb : need(doc, "buses", "network document")) {
    Bus b;
    b.id = need_int(jb, "id", "bus");
    const std::string kind = need(jb, "kind", "bus").get<std::string>();
    if (kind == "substation")
      b.kind = BusKind::kSubstation;
    else if (kind == "load")
      b.kind = BusKind::kLoad;
    else
      throw ParseError(fmt::format("bus {}: kind must be 'substation' or 'load'", b.id));
    b.v_min_sq = need_num(jb, "v_min_sq", "bus");
    b.v_max_sq = need_num(jb, "v_max_sq", "bus");
    const bool has_limits = jb.contains("p_max_inj") || jb.contains("q_min_inj") ||
                            jb.contains("q_max_inj");
    if (b.kind == BusKind::kSubstation) {
      b.p_max_inj = need_num(jb, "p_max_inj", "substation bus");
      b.q_min_inj = need_num(jb, "q_min_inj", "substation bus");
      b.q_max_inj = need_num(jb, "q_max_inj", "substation bus");
    } else if (has_limits) {
      throw ParseError(
          fmt::format("bus {}: injection limits are only valid on substations", b.id));
    }
    net.buses.push_back(b);
  }

  for (const auto& jl : need(doc, "lines", "network document")) {
    Line l;
    l.id = need_int(jl, "id", "line");
    l.from_bus = need_int(jl, "from", "line");
    l.to_bus = need_int(jl, "to", "line");
    l.r = need_num(jl, "r", "line");
    l.x = need_num(jl, "x", "line");
    l.f_max = need_num(jl, "f_max", "line");
    l.switchable = jl.value("switchable", false);
    l.wildfire_area = jl.value("wildfire_area", false);
    net.lines.push_back(l);
  }

  net.finalize();

  net.demand_p = parse_matrix(need(doc, "demand_p", "network document"), net.n_buses(),
                              net.horizon, "demand_p");
  net.demand_q = parse_matrix(need(doc, "demand_q", "network document"), net.n_buses(),
                              net.horizon, "demand_q");

  if (doc.contains("risk")) {
    const json& jr = doc["risk"];
    net.risk.gamma_peak = parse_risk_values(need(jr, "gamma_peak", "risk"), net, "gamma_peak");
    net.risk.beta_peak = parse_risk_values(need(jr, "beta_peak", "risk"), net, "beta_peak");
    if (jr.contains("peak_hours"))
      for (int h : jr["peak_hours"].get<std::vector<int>>()) net.risk.peak_hours.insert(h);
    net.risk.offpeak_fraction = jr.value("offpeak_fraction", 0.2);
  } else if (!net.wildfire_lines.empty()) {
    throw ParseError("network has wildfire-area lines but no 'risk' section");
  }
  if (net.risk.peak_hours.empty()) {
    for (int h = 12; h <= 20 && h <= net.horizon; ++h) net.risk.peak_hours.insert(h);
  }

  validate_network(net);
  return net;
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open network file '{}'", path));
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("network file '{}': {}", path, e.what()));
  }
  return network_from_json(doc);
}

json serialize_network(const Network& net) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["system"] = {{"base_mva", net.base_mva},   {"horizon", net.horizon},
                   {"v_ref_sq", net.v_ref_sq},   {"c_energy", net.c_energy},
                   {"c_switch", net.c_switch},   {"c_load_loss", net.c_load_loss}};
  json buses = json::array();
  for (const Bus& b : net.buses) {
    json jb = {{"id", b.id},
               {"kind", b.kind == BusKind::kSubstation ? "substation" : "load"},
               {"v_min_sq", b.v_min_sq},
               {"v_max_sq", b.v_max_sq}};
    if (b.kind == BusKind::kSubstation) {
      jb["p_max_inj"] = b.p_max_inj;
      jb["q_min_inj"] = b.q_min_inj;
      jb["q_max_inj"] = b.q_max_inj;
    }
    buses.push_back(jb);
  }
  doc["buses"] = buses;
  json lines = json::array();
  for (const Line& l : net.lines) {
    lines.push_back({{"id", l.id},
                     {"from", l.from_bus},
                     {"to", l.to_bus},
                     {"r", l.r},
                     {"x", l.x},
                     {"f_max", l.f_max},
                     {"switchable", l.switchable},
                     {"wildfire_area", l.wildfire_area}});
  }
  doc["lines"] = lines;
  doc["demand_p"] = net.demand_p;
  doc["demand_q"] = net.demand_q;
  if (!net.wildfire_lines.empty()) {
    json gamma = json::array(), beta = json::array();
    for (int l : net.wildfire_lines) {
      gamma.push_back(net.risk.gamma_peak[l]);
      beta.push_back(net.risk.beta_peak[l]);
    }
    doc["risk"] = {{"gamma_peak", gamma},
                   {"beta_peak", beta},
                   {"peak_hours", std::vector<int>(net.risk.peak_hours.begin(),
                                                   net.risk.peak_hours.end())},
                   {"offpeak_fraction", net.risk.offpeak_fraction}};
  }
  return doc;
}

RiskParams risk_params_at(const RiskSchedule& schedule, int hour, int horizon) {
  if (hour < 1 || hour > horizon)
    throw ValidationError(fmt::format("hour {} outside [1, {}]", hour, horizon));
  const double scale = schedule.peak_hours.count(hour) ? 1.0 : schedule.offpeak_fraction;
  RiskParams out;
  out.gamma.reserve(schedule.gamma_peak.size());
  out.beta.reserve(schedule.beta_peak.size());
  for (double g : schedule.gamma_peak) out.gamma.push_back(scale * g);
  for (double b : schedule.beta_peak) out.beta.push_back(scale * b);
  return out;
}

}  // namespace psps
