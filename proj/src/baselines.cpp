#include "psps/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace psps {

StaticPolicy make_static(const Network& net, const std::vector<SwitchGroup>& groups,
                         const std::string& name, const std::vector<int>& closed_ids) {
  StaticPolicy policy;
  policy.name = name;
  policy.closed_ids = closed_ids;
  std::sort(policy.closed_ids.begin(), policy.closed_ids.end());
  policy.choices = choices_from_closed_ids(net, groups, policy.closed_ids);
  policy.config = config_from_choices(net, groups, policy.choices);
  if (!is_radial(net, policy.config, full_availability(net)))
    throw ConfigError(fmt::format("static policy '{}' selects a non-radial topology", name));
  return policy;
}

Actor static_actor(const StaticPolicy& policy) {
  return [choices = policy.choices](const Environment&, Rng&, bool, std::vector<double>* raw,
                                    std::vector<int>* out, double* log_prob, double* value) {
    raw->clear();
    *out = choices;
    *log_prob = 0.0;
    *value = 0.0;
  };
}

const std::map<std::string, std::vector<int>>& static_presets() {
  static const std::map<std::string, std::vector<int>> presets = {
      {"all-open", {}},
      {"opt-diu-54", {3, 5, 37, 47, 52}},
      {"opt-ddu-54", {3, 17, 19, 34, 37}},
      {"opt-diu-138", {2, 18, 30, 37, 110}},
      {"opt-ddu-138", {37, 110, 136, 137, 138}},
  };
  return presets;
}

std::vector<OracleEntry> enumerate_static_oracle(const Scenario& scenario,
                                                 const std::vector<SwitchGroup>& groups,
                                                 const SolutionCache& cache,
                                                 int episodes_per_config, std::uint64_t seed,
                                                 std::uint64_t max_topologies, int workers) {
  const std::uint64_t n_topologies = count_topologies(groups);
  if (n_topologies > max_topologies)
    throw ConfigError(fmt::format(
        "exhaustive oracle refused: {} feasible topologies exceed the budget of {}",
        n_topologies, max_topologies));
  if (episodes_per_config < 1) throw ConfigError("oracle needs at least one episode per config");

  std::vector<std::vector<int>> tuples;
  tuples.reserve(n_topologies);
  for_each_choice_tuple(groups, [&](const std::vector<int>& c) { tuples.push_back(c); });

  const Network& net = scenario.network;
  std::vector<OracleEntry> entries(tuples.size());
  parallel_for(tuples.size(), workers, [&](std::size_t idx) {
    OracleEntry& entry = entries[idx];
    entry.choices = tuples[idx];
    const SwitchConfig cfg = config_from_choices(net, groups, entry.choices);
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (entry.choices[g] > 0)
        entry.closed_ids.push_back(net.lines[groups[g].lines[entry.choices[g] - 1]].id);
    std::sort(entry.closed_ids.begin(), entry.closed_ids.end());

    StaticPolicy policy;
    policy.name = "oracle";
    policy.closed_ids = entry.closed_ids;
    policy.choices = entry.choices;
    policy.config = cfg;

    Environment env(scenario, groups, &cache, seed);
    const Actor actor = static_actor(policy);
    double sum = 0.0, sum_sq = 0.0;
    long failures = 0;
    for (int e = 0; e < episodes_per_config; ++e) {
      const auto records =
          rollout(env, actor, static_cast<std::uint64_t>(e + 1), /*deterministic=*/true);
      double cost = 0.0;
      for (const auto& r : records) {
        cost -= r.reward;
        failures += r.failures_this_step;
      }
      sum += cost;
      sum_sq += cost * cost;
    }
    entry.mean_cost = sum / episodes_per_config;
    entry.std_cost = std::sqrt(
        std::max(0.0, sum_sq / episodes_per_config - entry.mean_cost * entry.mean_cost));
    entry.mean_failures = static_cast<double>(failures) / episodes_per_config;
  });

  std::sort(entries.begin(), entries.end(), [](const OracleEntry& a, const OracleEntry& b) {
    if (a.mean_cost != b.mean_cost) return a.mean_cost < b.mean_cost;
    return a.choices < b.choices;
  });
  return entries;
}

}  // namespace psps
