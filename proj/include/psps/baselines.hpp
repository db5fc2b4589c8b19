#pragma once

#include <map>
#include <string>
#include <vector>

#include "psps/environment.hpp"
#include "psps/powerflow.hpp"
#include "psps/topology.hpp"

namespace psps {

/// A fixed topology commanded at every hour of the horizon.
struct StaticPolicy {
  std::string name;
  std::vector<int> closed_ids;  // line ids
  std::vector<int> choices;     // resolved against the network's groups
  SwitchConfig config;
};

/// Validates the closed set (switchable, one per group, radial under full
/// availability) and resolves it to a choice tuple.
StaticPolicy make_static(const Network& net, const std::vector<SwitchGroup>& groups,
                         const std::string& name, const std::vector<int>& closed_ids);

Actor static_actor(const StaticPolicy& policy);

/// Published fixed topologies shipped as named presets, plus "all-open".
const std::map<std::string, std::vector<int>>& static_presets();

struct OracleEntry {
  std::vector<int> choices;
  std::vector<int> closed_ids;
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double mean_failures = 0.0;
};

/// Monte Carlo cost of every feasible static topology, ranked by mean cost
/// (ascending; ties broken by choice tuple). Episodes share seeds across
/// topologies, so rankings use common random numbers. Refuses to run when the
/// topology count exceeds max_topologies.
std::vector<OracleEntry> enumerate_static_oracle(const Scenario& scenario,
                                                 const std::vector<SwitchGroup>& groups,
                                                 const SolutionCache& cache,
                                                 int episodes_per_config, std::uint64_t seed,
                                                 std::uint64_t max_topologies, int workers);

}  // namespace psps
