#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "psps/environment.hpp"
#include "psps/policy.hpp"

namespace psps {

struct PpoConfig {
  double learning_rate = 4e-4;
  double c_ent = 0.05;
  double c_vf = 0.5;
  double gamma_rl = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int episodes = 10000;
  int hidden = 256;
  // Values below are artifact choices (not pinned by the hyperparameter table).
  int update_epochs = 10;
  int minibatch = 0;  // 0 = one minibatch containing the whole trajectory
  double eps_std = 1e-8;
  bool normalize_advantages = true;
  int eval_interval = 0;   // 0 disables periodic deterministic evaluation
  int eval_episodes = 20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

/// One collected episode plus everything the update needs.
struct Trajectory {
  std::vector<StepRecord> records;
  std::vector<double> std_rewards;  // standardized per episode
  std::vector<double> advantages;   // GAE on the standardized rewards
  std::vector<double> returns;      // discounted standardized reward-to-go

  double raw_cost() const;     // sum over t of -reward
  double switch_cost() const;
  int failures() const;
};

/// Shifts and scales to zero mean, unit variance (population std over T, with
/// eps_std added to the std before dividing). Constant rewards map to zeros.
std::vector<double> standardize_rewards(const std::vector<double>& rewards, double eps_std);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// values must have length T+1 with the terminal bootstrap (0 for episodic
/// horizons) in the last slot.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      double gamma_rl, double lambda);

struct Batch {
  Eigen::MatrixXd states;       // B x obs_dim (normalized)
  Eigen::MatrixXd raw_actions;  // B x d_a
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct LossDiagnostics {
  double total = 0.0;
  double policy = 0.0;     // -(clipped surrogate)
  double value = 0.0;      // critic MSE (unweighted)
  double entropy = 0.0;    // mean policy entropy
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
};

/// Full PPO loss L = -(L_clip + c_ent * H) + c_vf * E[(V - G)^2] and its
/// analytic gradient wrt every parameter. Pure; the finite-difference
/// acceptance check differentiates exactly this function.
LossDiagnostics ppo_loss_and_grad(const ActorCritic& net, const Batch& batch,
                                  const PpoConfig& cfg, Eigen::VectorXd* grad);

struct AdamState {
  Eigen::VectorXd m, v;
  long t = 0;
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const PpoConfig& cfg);

/// K epochs of minibatch updates on one trajectory batch. Returns the
/// diagnostics of the first epoch (ratio = 1 there, so they describe the data).
LossDiagnostics ppo_update(ActorCritic& net, AdamState& adam, const Batch& batch,
                           const PpoConfig& cfg, std::uint64_t shuffle_key);

/// Builds the update batch from a trajectory (with batch-level advantage
/// normalization when configured).
Batch make_batch(const Trajectory& traj, const Environment& env, const PpoConfig& cfg);

struct EpisodeLog {
  int episode = 0;
  double raw_cost = 0.0;
  double switch_cost = 0.0;
  int failures = 0;
  LossDiagnostics loss;
  double eval_mean_cost = -1.0;  // filled on eval episodes only
};

struct TrainResult {
  ActorCritic net;
  std::vector<EpisodeLog> log;
};

/// Actor backed by the current network parameters; samples during training,
/// uses the mean during evaluation.
Actor policy_actor(const ActorCritic& net);

/// The full training loop: rollout, per-trajectory reward standardization,
/// GAE, K clipped-surrogate updates per episode. Deterministic given the seed.
/// When log_stream is set, one JSON record per episode is appended and flushed.
TrainResult train(const Scenario& scenario, const std::vector<SwitchGroup>& groups,
                  const SolutionCache& cache, const PpoConfig& cfg, std::uint64_t seed,
                  std::ostream* log_stream);

}  // namespace psps
