#include "psps/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace psps {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void PpoConfig::validate() const {
  if (clip_eps <= 0.0 || clip_eps >= 1.0) throw ConfigError("clip_eps must lie in (0, 1)");
  if (gamma_rl <= 0.0 || gamma_rl > 1.0) throw ConfigError("gamma_rl must lie in (0, 1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("gae_lambda must lie in [0, 1]");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (c_vf < 0.0 || c_ent < 0.0) throw ConfigError("loss coefficients must be nonnegative");
  if (episodes < 1 || hidden < 1 || update_epochs < 1)
    throw ConfigError("episodes, hidden and update_epochs must be positive");
  if (eps_std < 0.0) throw ConfigError("eps_std must be nonnegative");
}

double Trajectory::raw_cost() const {
  double c = 0.0;
  for (const auto& r : records) c -= r.reward;
  return c;
}

double Trajectory::switch_cost() const {
  double c = 0.0;
  for (const auto& r : records) c += r.switch_cost;
  return c;
}

int Trajectory::failures() const {
  int n = 0;
  for (const auto& r : records) n += r.failures_this_step;
  return n;
}

std::vector<double> standardize_rewards(const std::vector<double>& rewards, double eps_std) {
  const std::size_t t_len = rewards.size();
  if (t_len == 0) return {};
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / t_len;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double stdev = std::sqrt(var / t_len);  // population std, divide by T
  std::vector<double> out(t_len);
  for (std::size_t i = 0; i < t_len; ++i) out[i] = (rewards[i] - mean) / (stdev + eps_std);
  return out;
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      double gamma_rl, double lambda) {
  const std::size_t t_len = rewards.size();
  if (values.size() != t_len + 1)
    throw ConfigError(fmt::format("compute_gae: need {} values (T+1), got {}", t_len + 1,
                                  values.size()));
  GaeResult out;
  out.advantages.assign(t_len, 0.0);
  out.returns.assign(t_len, 0.0);
  double acc = 0.0;
  double ret = 0.0;
  for (std::size_t i = t_len; i-- > 0;) {
    const double delta = rewards[i] + gamma_rl * values[i + 1] - values[i];
    acc = delta + gamma_rl * lambda * acc;
    out.advantages[i] = acc;
    ret = rewards[i] + gamma_rl * ret;  // discounted reward-to-go
    out.returns[i] = ret;
  }
  return out;
}

LossDiagnostics ppo_loss_and_grad(const ActorCritic& net, const Batch& batch,
                                  const PpoConfig& cfg, VectorXd* grad) {
  const int b_size = static_cast<int>(batch.states.rows());
  const int d_a = net.shape().d_a;
  if (grad) grad->setZero(net.n_params());

  const auto actor = net.actor_forward(batch.states);
  const auto critic = net.critic_forward(batch.states);

  LossDiagnostics diag;
  MatrixXd d_mu = MatrixXd::Zero(b_size, d_a);
  MatrixXd d_ls = MatrixXd::Zero(b_size, d_a);
  VectorXd d_v = VectorXd::Zero(b_size);

  double surr_sum = 0.0, ent_sum = 0.0, vloss_sum = 0.0, ratio_sum = 0.0;
  int clipped = 0;
  for (int t = 0; t < b_size; ++t) {
    const double adv = batch.advantages[t];
    // New log-probability of the stored raw action.
    double lp = 0.0;
    for (int i = 0; i < d_a; ++i) {
      const double sigma_inv = std::exp(-actor.log_sigma(t, i));
      const double z = (batch.raw_actions(t, i) - actor.mu(t, i)) * sigma_inv;
      lp += -actor.log_sigma(t, i) - 0.9189385332046727 - 0.5 * z * z;
    }
    const double ratio = std::exp(lp - batch.old_log_probs[t]);
    ratio_sum += ratio;
    const double clip_ratio =
        std::min(1.0 + cfg.clip_eps, std::max(1.0 - cfg.clip_eps, ratio));
    const double s1 = ratio * adv;
    const double s2 = clip_ratio * adv;
    surr_sum += std::min(s1, s2);
    // Gradient flows through the surrogate only on the unclipped branch.
    const double dsurr_dlp = s1 <= s2 ? ratio * adv : 0.0;
    if (s1 > s2) ++clipped;
    const double dl_dlp = -dsurr_dlp / b_size;

    double ent = 0.0;
    for (int i = 0; i < d_a; ++i) {
      const double sigma_inv = std::exp(-actor.log_sigma(t, i));
      const double z = (batch.raw_actions(t, i) - actor.mu(t, i)) * sigma_inv;
      // d lp / d mu_i and d lp / d log_sigma_i.
      d_mu(t, i) = dl_dlp * (z * sigma_inv);
      d_ls(t, i) = dl_dlp * (z * z - 1.0) - cfg.c_ent / b_size;  // entropy term: dH/dls = 1
      ent += 0.5 + 0.9189385332046727 + actor.log_sigma(t, i);
    }
    ent_sum += ent;

    const double verr = critic.value[t] - batch.returns[t];
    vloss_sum += verr * verr;
    d_v[t] = cfg.c_vf * 2.0 * verr / b_size;
  }

  diag.policy = -surr_sum / b_size;
  diag.entropy = ent_sum / b_size;
  diag.value = vloss_sum / b_size;
  diag.clip_fraction = static_cast<double>(clipped) / b_size;
  diag.mean_ratio = ratio_sum / b_size;
  diag.total = diag.policy - cfg.c_ent * diag.entropy + cfg.c_vf * diag.value;

  if (!std::isfinite(diag.total))
    throw SolverError(fmt::format(
        "non-finite PPO loss (policy={}, value={}, entropy={}); aborting update",
        diag.policy, diag.value, diag.entropy));

  if (grad) {
    net.actor_backward(batch.states, actor, d_mu, d_ls, grad);
    net.critic_backward(batch.states, critic, d_v, grad);
  }
  return diag;
}

void adam_step(VectorXd& params, const VectorXd& grad, AdamState& state, const PpoConfig& cfg) {
  if (state.m.size() != params.size()) {
    state.m = VectorXd::Zero(params.size());
    state.v = VectorXd::Zero(params.size());
    state.t = 0;
  }
  state.t += 1;
  state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grad;
  state.v = cfg.adam_beta2 * state.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  const double step = cfg.learning_rate * std::sqrt(bias2) / bias1;
  params.array() -= step * state.m.array() / (state.v.array().sqrt() + cfg.adam_eps);
}

LossDiagnostics ppo_update(ActorCritic& net, AdamState& adam, const Batch& batch,
                           const PpoConfig& cfg, std::uint64_t shuffle_key) {
  const int b_size = static_cast<int>(batch.states.rows());
  const int mb = cfg.minibatch <= 0 || cfg.minibatch >= b_size ? b_size : cfg.minibatch;
  LossDiagnostics first;
  VectorXd grad(net.n_params());
  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    if (mb == b_size) {
      const LossDiagnostics diag = ppo_loss_and_grad(net, batch, cfg, &grad);
      if (epoch == 0) first = diag;
      adam_step(net.params(), grad, adam, cfg);
      continue;
    }
    std::vector<int> order(b_size);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(shuffle_key, {static_cast<std::uint64_t>(epoch)});
    for (int i = b_size - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.below(static_cast<std::uint64_t>(i + 1))]);
    for (int start = 0; start < b_size; start += mb) {
      const int count = std::min(mb, b_size - start);
      Batch sub;
      sub.states.resize(count, batch.states.cols());
      sub.raw_actions.resize(count, batch.raw_actions.cols());
      sub.old_log_probs.resize(count);
      sub.advantages.resize(count);
      sub.returns.resize(count);
      for (int i = 0; i < count; ++i) {
        const int src = order[start + i];
        sub.states.row(i) = batch.states.row(src);
        sub.raw_actions.row(i) = batch.raw_actions.row(src);
        sub.old_log_probs[i] = batch.old_log_probs[src];
        sub.advantages[i] = batch.advantages[src];
        sub.returns[i] = batch.returns[src];
      }
      const LossDiagnostics diag = ppo_loss_and_grad(net, sub, cfg, &grad);
      if (epoch == 0 && start == 0) first = diag;
      adam_step(net.params(), grad, adam, cfg);
    }
  }
  return first;
}

Batch make_batch(const Trajectory& traj, const Environment& env, const PpoConfig& cfg) {
  const int t_len = static_cast<int>(traj.records.size());
  const int d_a = env.action_dim();
  Batch batch;
  batch.states.resize(t_len, env.obs_dim());
  batch.raw_actions.resize(t_len, d_a);
  batch.old_log_probs.resize(t_len);
  batch.advantages.resize(t_len);
  batch.returns.resize(t_len);
  for (int t = 0; t < t_len; ++t) {
    const StepRecord& rec = traj.records[t];
    if (static_cast<int>(rec.raw_action.size()) != d_a)
      throw ConfigError("trajectory record is missing its raw action");
    for (int i = 0; i < d_a; ++i) batch.raw_actions(t, i) = rec.raw_action[i];
    batch.old_log_probs[t] = rec.log_prob;
    batch.advantages[t] = traj.advantages[t];
    batch.returns[t] = traj.returns[t];
  }
  // States are re-normalized from the stored raw states.
  const Network& net = env.network();
  double scale = net.max_demand();
  if (scale <= 0.0) scale = 1.0;
  for (int t = 0; t < t_len; ++t) {
    const State& s = traj.records[t].state;
    int k = 0;
    for (int l = 0; l < net.n_lines(); ++l) batch.states(t, k++) = s.av.get(l) ? 1.0 : 0.0;
    for (std::size_t i = 0; i < s.z_pre.size(); ++i)
      batch.states(t, k++) = s.z_pre.get(i) ? 1.0 : 0.0;
    for (double d : s.d_p) batch.states(t, k++) = d / scale;
    for (double d : s.d_q) batch.states(t, k++) = d / scale;
    batch.states(t, k++) = static_cast<double>(s.hour) / net.horizon;
  }

  if (cfg.normalize_advantages && t_len > 1) {
    const double mean = batch.advantages.mean();
    const double stdev =
        std::sqrt((batch.advantages.array() - mean).square().sum() / t_len);
    batch.advantages = (batch.advantages.array() - mean) / (stdev + 1e-8);
  }
  return batch;
}

Actor policy_actor(const ActorCritic& net) {
  return [&net](const Environment& env, Rng& action_rng, bool deterministic,
                std::vector<double>* raw, std::vector<int>* choices, double* log_prob,
                double* value) {
    const std::vector<double> obs = env.normalized_state();
    MatrixXd states(1, obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) states(0, i) = obs[i];
    const auto actor = net.actor_forward(states);
    const auto critic = net.critic_forward(states);
    const VectorXd mu = actor.mu.row(0);
    const VectorXd ls = actor.log_sigma.row(0);
    VectorXd raw_vec;
    if (deterministic) {
      raw_vec = mu;
      *log_prob = log_prob_of(mu, ls, raw_vec);
    } else {
      const ActionSample s = sample_action(mu, ls, action_rng);
      raw_vec = s.raw;
      *log_prob = s.log_prob;
    }
    *value = critic.value[0];
    raw->assign(raw_vec.data(), raw_vec.data() + raw_vec.size());
    *choices = map_action(raw_vec, env.groups());
  };
}

namespace {

Trajectory collect_trajectory(Environment& env, const ActorCritic& net, std::uint64_t episode,
                              const PpoConfig& cfg) {
  Trajectory traj;
  traj.records = rollout(env, policy_actor(net), episode, /*deterministic=*/false);
  std::vector<double> rewards;
  std::vector<double> values;
  rewards.reserve(traj.records.size());
  values.reserve(traj.records.size() + 1);
  for (const auto& r : traj.records) {
    rewards.push_back(r.reward);
    values.push_back(r.value_estimate);
  }
  values.push_back(0.0);  // episodic horizon: terminal bootstrap is zero
  traj.std_rewards = standardize_rewards(rewards, cfg.eps_std);
  GaeResult gae = compute_gae(traj.std_rewards, values, cfg.gamma_rl, cfg.gae_lambda);
  traj.advantages = std::move(gae.advantages);
  traj.returns = std::move(gae.returns);
  return traj;
}

}  // namespace

TrainResult train(const Scenario& scenario, const std::vector<SwitchGroup>& groups,
                  const SolutionCache& cache, const PpoConfig& cfg, std::uint64_t seed,
                  std::ostream* log_stream) {
  cfg.validate();
  Environment env(scenario, groups, &cache, seed);
  const NetShape shape{env.obs_dim(), cfg.hidden, env.action_dim()};
  ActorCritic net(shape);
  Rng init_rng(seed, {stream::kInit});
  net.init(init_rng);
  AdamState adam;

  // Periodic deterministic evaluation uses an offset seed space so it never
  // touches the training episode streams.
  Environment eval_env(scenario, groups, &cache, seed ^ 0x5eedfeedull);

  TrainResult result{std::move(net), {}};
  result.log.reserve(cfg.episodes);
  for (int episode = 1; episode <= cfg.episodes; ++episode) {
    Trajectory traj =
        collect_trajectory(env, result.net, static_cast<std::uint64_t>(episode), cfg);
    const Batch batch = make_batch(traj, env, cfg);
    const LossDiagnostics diag =
        ppo_update(result.net, adam, batch, cfg,
                   seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(episode)));

    EpisodeLog log;
    log.episode = episode;
    log.raw_cost = traj.raw_cost();
    log.switch_cost = traj.switch_cost();
    log.failures = traj.failures();
    log.loss = diag;

    if (cfg.eval_interval > 0 && episode % cfg.eval_interval == 0) {
      double total = 0.0;
      for (int e = 0; e < cfg.eval_episodes; ++e) {
        const auto records = rollout(eval_env, policy_actor(result.net),
                                     static_cast<std::uint64_t>(e + 1), /*deterministic=*/true);
        for (const auto& r : records) total -= r.reward;
      }
      log.eval_mean_cost = total / cfg.eval_episodes;
    }

    if (log_stream) {
      nlohmann::json j{{"episode", log.episode},
                       {"raw_cost", log.raw_cost},
                       {"switch_cost", log.switch_cost},
                       {"failures", log.failures},
                       {"loss", log.loss.total},
                       {"policy_loss", log.loss.policy},
                       {"value_loss", log.loss.value},
                       {"entropy", log.loss.entropy},
                       {"clip_fraction", log.loss.clip_fraction},
                       {"mean_ratio", log.loss.mean_ratio}};
      if (log.eval_mean_cost >= 0.0) j["eval_mean_cost"] = log.eval_mean_cost;
      (*log_stream) << j.dump() << "\n";
      log_stream->flush();
    }
    result.log.push_back(log);
  }
  return result;
}

}  // namespace psps
