#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psps/failure.hpp"
#include "psps/grid.hpp"
#include "psps/powerflow.hpp"
#include "psps/rng.hpp"
#include "psps/topology.hpp"

namespace psps {

/// A scenario bundles the network with everything episodic: the failure
/// model, the initial topology, noise, horizon and evaluation defaults.
struct Scenario {
  std::string name;
  Network network;
  FailureModel failure_model;
  std::vector<int> initial_closed_ids;  // line ids closed at t = 1
  double demand_noise = 0.0;            // multiplicative half-width, 0 = off
  int eval_episodes = 200;
  std::uint64_t seed = 1;
  std::uint64_t fingerprint = 0;  // hash of the canonical network + scenario docs
};

Scenario load_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& doc, const std::string& base_dir);

/// Canonical document of everything that affects dynamics; its hash is the
/// scenario fingerprint checkpoints are pinned to.
nlohmann::json scenario_canonical(const Scenario& scenario);
std::uint64_t scenario_fingerprint(const Scenario& scenario);

struct State {
  Availability av;   // per line
  Bitset z_pre;      // per switchable line, commanded history
  std::vector<double> d_p, d_q;  // per bus demands at this hour
  int hour = 1;      // 1-based; hour == horizon + 1 means the episode is over
};

struct StepRecord {
  State state;
  std::vector<double> raw_action;  // empty when the action came from a static policy
  SwitchConfig config;             // commanded configuration
  PfSolution pf;
  double reward = 0.0;
  double energy_cost = 0.0;
  double switch_cost = 0.0;
  double loss_cost = 0.0;
  State next_state;
  double log_prob = 0.0;
  double value_estimate = 0.0;
  int failures_this_step = 0;
};

/// Episodic simulator. One instance serves one worker; all randomness comes
/// from streams keyed on (master seed, episode, line), so identically seeded
/// episodes replay bit-for-bit regardless of what ran before them.
class Environment {
 public:
  Environment(const Scenario& scenario, std::vector<SwitchGroup> groups,
              const SolutionCache* cache, std::uint64_t master_seed);

  const State& reset(std::uint64_t episode);

  /// Applies one commanded choice tuple: dispatch LP, reward, stochastic
  /// availability transition. Optional policy fields are copied into the record.
  StepRecord step(const std::vector<int>& choices, std::vector<double> raw_action = {},
                  double log_prob = 0.0, double value_estimate = 0.0);

  bool done() const { return state_.hour > scenario_->network.horizon; }
  const State& state() const { return state_; }
  const Scenario& scenario() const { return *scenario_; }
  const Network& network() const { return scenario_->network; }
  const std::vector<SwitchGroup>& groups() const { return groups_; }
  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t episode() const { return episode_; }

  /// Policy input: availability and switch bits as 0/1, demands scaled by the
  /// network-wide maximum, hour as t / T.
  std::vector<double> normalized_state() const;
  int obs_dim() const;
  int action_dim() const { return static_cast<int>(groups_.size()); }

 private:
  std::vector<double> demands_at(int hour, bool reactive) const;

  const Scenario* scenario_;
  std::vector<SwitchGroup> groups_;
  const SolutionCache* cache_;
  std::uint64_t master_seed_ = 0;
  std::uint64_t episode_ = 0;
  double demand_scale_ = 1.0;
  Bitset initial_z_;
  State state_;
  std::vector<Rng> line_streams_;
};

/// Anything that can act in the environment: fills raw action (optional),
/// choices, log-probability and value estimate for the current state.
using Actor = std::function<void(const Environment& env, Rng& action_rng, bool deterministic,
                                 std::vector<double>* raw, std::vector<int>* choices,
                                 double* log_prob, double* value)>;

/// Runs one full episode and returns its T step records.
std::vector<StepRecord> rollout(Environment& env, const Actor& actor, std::uint64_t episode,
                                bool deterministic);

}  // namespace psps
