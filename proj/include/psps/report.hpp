#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psps/baselines.hpp"
#include "psps/environment.hpp"
#include "psps/policy.hpp"
#include "psps/trainer.hpp"

namespace psps {

/// Per-policy evaluation output: raw per-episode metrics plus identification.
/// "Cost" is the episode sum of -reward (so it already contains the switching
/// cost, which is also broken out separately).
struct MetricsRecord {
  std::string policy;
  std::string scenario_name;
  std::string fingerprint_hex;
  std::uint64_t seed = 0;
  int n_episodes = 0;
  std::optional<double> tau;
  std::vector<double> episode_costs;
  std::vector<double> episode_switch_costs;
  std::vector<int> episode_failures;

  double mean_cost() const;
  double std_cost() const;
  double mean_switch_cost() const;
  double mean_failures() const;
  double std_failures() const;

  nlohmann::json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& doc);
};

/// |f_p| / f_max samples per wildfire-area line, accumulated over evaluation.
struct FlowDistribution {
  std::vector<int> line_ids;
  std::vector<std::vector<double>> samples;  // parallel to line_ids

  void add(const Network& net, const PfSolution& pf);
  /// CSV with one row per line: quantiles and fixed-width histogram counts.
  std::string to_csv() const;
};

/// Either a fixed topology or a trained checkpoint.
struct PolicySource {
  std::optional<StaticPolicy> fixed;
  std::optional<Checkpoint> checkpoint;
  std::string describe() const;
};

/// Deterministic evaluation over n_episodes; checkpoints act through their
/// mean action. Throws ConfigError when a checkpoint's scenario fingerprint
/// does not match. flows, when given, accumulates wildfire-line loadings.
MetricsRecord evaluate(const Scenario& scenario, const std::vector<SwitchGroup>& groups,
                       const SolutionCache& cache, const PolicySource& source, int n_episodes,
                       std::uint64_t seed, int workers, FlowDistribution* flows = nullptr);

/// Aligned comparison table over >= 1 records; refuses mixed scenarios.
std::string report_table(const std::vector<MetricsRecord>& records);

/// report_table companion: machine-readable CSV of the same numbers.
std::string report_csv(const std::vector<MetricsRecord>& records);

}  // namespace psps
