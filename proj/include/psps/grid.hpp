#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psps/common.hpp"

namespace psps {

enum class BusKind { kSubstation, kLoad };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::kLoad;
  double v_min_sq = 0.0;  // per-unit^2
  double v_max_sq = 0.0;
  // Injection limits; meaningful only for substations.
  double p_max_inj = 0.0;  // MW
  double q_min_inj = 0.0;  // MVAr
  double q_max_inj = 0.0;
};

struct Line {
  int id = 0;
  int from_bus = 0;  // bus id, not index
  int to_bus = 0;
  double r = 0.0;      // per-unit
  double x = 0.0;      // per-unit
  double f_max = 0.0;  // MVA
  bool switchable = false;
  bool wildfire_area = false;
};

/// Time-varying baseline risk: peak values inside peak_hours, scaled by
/// offpeak_fraction everywhere else. Entries are per line index; zero for
/// lines outside the wildfire area.
struct RiskSchedule {
  std::vector<double> gamma_peak;  // baseline failure probability
  std::vector<double> beta_peak;   // per-MW flow sensitivity
  std::set<int> peak_hours;        // 1-based hours
  double offpeak_fraction = 0.2;
};

struct RiskParams {
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// Immutable grid description. Buses/lines are stored sorted by id; all other
/// code works with dense 0-based indices and only touches ids at I/O edges.
struct Network {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  int horizon = 24;       // T, hourly steps
  double base_mva = 1.0;  // system base for the per-unit voltage-drop terms
  double v_ref_sq = 1.0;  // squared substation reference voltage
  double c_energy = 0.0;     // $/MWh
  double c_switch = 0.0;     // $/operation
  double c_load_loss = 0.0;  // $/MWh
  // |N| x T, row-major per bus index.
  std::vector<std::vector<double>> demand_p;  // MW
  std::vector<std::vector<double>> demand_q;  // MVAr
  RiskSchedule risk;

  std::vector<std::string> warnings;  // non-fatal findings from validation

  // Derived index structures (filled by finalize()).
  std::vector<int> substations;       // bus indices
  std::vector<int> switchable_lines;  // line indices, ascending
  std::vector<int> wildfire_lines;    // line indices, ascending

  int n_buses() const { return static_cast<int>(buses.size()); }
  int n_lines() const { return static_cast<int>(lines.size()); }
  int n_switchable() const { return static_cast<int>(switchable_lines.size()); }

  int bus_index(int id) const;   // throws ValidationError on unknown id
  int line_index(int id) const;

  bool is_substation(int bus_idx) const { return buses[bus_idx].kind == BusKind::kSubstation; }

  /// Position of a line index within switchable_lines, or -1.
  int switch_position(int line_idx) const;

  /// Largest |demand| over both matrices; policy input normalization constant.
  double max_demand() const;

  /// Rebuilds the derived index structures; called by the loader and by tests
  /// that assemble networks in code.
  void finalize();

 private:
  std::map<int, int> bus_by_id_;
  std::map<int, int> line_by_id_;
};

/// Parses and validates a network file. Throws ParseError / ValidationError;
/// connectivity findings end up in Network::warnings.
Network load_network(const std::string& path);

/// Same, from an already-parsed JSON document.
Network network_from_json(const nlohmann::json& doc);

/// Inverse of load_network; load(serialize(n)) is field-by-field equal to n.
nlohmann::json serialize_network(const Network& net);

/// Runs every invariant check; throws ValidationError naming the first
/// violation and appends warnings (e.g. disconnected sections) to net.warnings.
void validate_network(Network& net);

/// Effective per-line (gamma, beta) at a 1-based hour in [1, horizon].
RiskParams risk_params_at(const RiskSchedule& schedule, int hour, int horizon);

constexpr int kSchemaVersion = 1;

}  // namespace psps
