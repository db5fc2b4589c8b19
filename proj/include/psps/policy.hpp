#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "psps/rng.hpp"
#include "psps/topology.hpp"

namespace psps {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kActionClip = 5.0;

struct NetShape {
  int in = 0;
  int hidden = 256;
  int d_a = 0;

  bool operator==(const NetShape& o) const {
    return in == o.in && hidden == o.hidden && d_a == o.d_a;
  }
};

/// Gaussian actor and value critic: two tanh hidden layers each, actor with
/// mean and state-dependent log-std heads. Parameters live in one flat vector
/// so the optimizer, checkpoints and finite-difference checks stay trivial.
class ActorCritic {
 public:
  explicit ActorCritic(NetShape shape);

  /// Hidden weights uniform in +-1/sqrt(fan_in), zero biases. Both actor heads
  /// are scaled down by 100x so the initial mean is near zero; the log-std
  /// bias starts at 1 so early samples spread over the whole clamp range.
  void init(Rng& rng);

  struct ActorOut {
    Eigen::MatrixXd h1, h2;        // post-tanh activations, B x hidden
    Eigen::MatrixXd mu;            // B x d_a
    Eigen::MatrixXd log_sigma;     // clamped, B x d_a
    Eigen::MatrixXd log_sigma_pre; // pre-clamp, for the backward mask
  };
  struct CriticOut {
    Eigen::MatrixXd h1, h2;
    Eigen::VectorXd value;  // B
  };

  ActorOut actor_forward(const Eigen::MatrixXd& states) const;
  CriticOut critic_forward(const Eigen::MatrixXd& states) const;

  /// Accumulates d(loss)/d(params) into grad given output seeds d_mu and
  /// d_log_sigma (the latter is masked where the clamp saturates).
  void actor_backward(const Eigen::MatrixXd& states, const ActorOut& fwd,
                      const Eigen::MatrixXd& d_mu, const Eigen::MatrixXd& d_log_sigma,
                      Eigen::VectorXd* grad) const;
  void critic_backward(const Eigen::MatrixXd& states, const CriticOut& fwd,
                       const Eigen::VectorXd& d_value, Eigen::VectorXd* grad) const;

  const NetShape& shape() const { return shape_; }
  int n_params() const { return static_cast<int>(params_.size()); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

 private:
  friend struct ParamViews;
  NetShape shape_;
  Eigen::VectorXd params_;
};

struct ActionSample {
  Eigen::VectorXd raw;
  double log_prob = 0.0;
  double entropy = 0.0;
};

/// Diagonal-Gaussian draw plus its density and entropy.
ActionSample sample_action(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma,
                           Rng& rng);

double log_prob_of(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma,
                   const Eigen::VectorXd& raw);

double entropy_of(const Eigen::VectorXd& log_sigma);

/// Clamp to [-5, 5], shift to [0, 1], discretize to one choice per group.
/// Total: every real vector maps to a feasible choice tuple.
std::vector<int> map_action(const Eigen::VectorXd& raw, const std::vector<SwitchGroup>& groups);

/// Versioned plain-text checkpoint: shapes, flat parameters, the observation
/// normalization constants and the scenario fingerprint they were trained on.
struct Checkpoint {
  NetShape shape;
  Eigen::VectorXd params;
  double demand_scale = 1.0;
  int horizon = 0;
  std::uint64_t scenario_fingerprint = 0;
  std::uint64_t seed = 0;
  int episodes_trained = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace psps
