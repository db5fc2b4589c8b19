#include "psps/policy.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psps/common.hpp"

namespace psps {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)
}

/// Flat-parameter layout. Order: actor W1, b1, W2, b2, Wmu, bmu, Wls, bls,
/// then critic V1, c1, V2, c2, Vh, ch. Matrices are column-major
/// (out x in), applied as X * W^T + b.
struct ParamViews {
  Map<MatrixXd> w1, w2, wmu, wls, v1, v2, vh;
  Map<VectorXd> b1, b2, bmu, bls, c1, c2, ch;

  template <typename Vec>
  static ParamViews over(Vec& storage, const NetShape& s) {
    double* p = const_cast<double*>(storage.data());
    const int h = s.hidden, in = s.in, da = s.d_a;
    double* w1 = p;                   p += h * in;
    double* b1 = p;                   p += h;
    double* w2 = p;                   p += h * h;
    double* b2 = p;                   p += h;
    double* wmu = p;                  p += da * h;
    double* bmu = p;                  p += da;
    double* wls = p;                  p += da * h;
    double* bls = p;                  p += da;
    double* v1 = p;                   p += h * in;
    double* c1 = p;                   p += h;
    double* v2 = p;                   p += h * h;
    double* c2 = p;                   p += h;
    double* vh = p;                   p += h;
    double* ch = p;
    return ParamViews{
        Map<MatrixXd>(w1, h, in), Map<MatrixXd>(w2, h, h),  Map<MatrixXd>(wmu, da, h),
        Map<MatrixXd>(wls, da, h), Map<MatrixXd>(v1, h, in), Map<MatrixXd>(v2, h, h),
        Map<MatrixXd>(vh, 1, h),  Map<VectorXd>(b1, h),     Map<VectorXd>(b2, h),
        Map<VectorXd>(bmu, da),   Map<VectorXd>(bls, da),   Map<VectorXd>(c1, h),
        Map<VectorXd>(c2, h),     Map<VectorXd>(ch, 1)};
  }

  static int count(const NetShape& s) {
    const int trunk = s.hidden * s.in + s.hidden + s.hidden * s.hidden + s.hidden;
    const int heads = 2 * (s.d_a * s.hidden + s.d_a);
    const int critic_head = s.hidden + 1;
    return 2 * trunk + heads + critic_head;
  }
};

ActorCritic::ActorCritic(NetShape shape) : shape_(shape) {
  if (shape.in < 1 || shape.hidden < 1 || shape.d_a < 1)
    throw ConfigError(fmt::format("bad network shape in={} hidden={} d_a={}", shape.in,
                                  shape.hidden, shape.d_a));
  params_ = VectorXd::Zero(ParamViews::count(shape));
}

namespace {
void fill_uniform(Map<MatrixXd>& w, double scale, Rng& rng) {
  for (int c = 0; c < w.cols(); ++c)
    for (int r = 0; r < w.rows(); ++r) w(r, c) = scale * (2.0 * rng.uniform() - 1.0);
}
}  // namespace

void ActorCritic::init(Rng& rng) {
  params_.setZero();
  auto v = ParamViews::over(params_, shape_);
  const double s_in = 1.0 / std::sqrt(static_cast<double>(shape_.in));
  const double s_h = 1.0 / std::sqrt(static_cast<double>(shape_.hidden));
  fill_uniform(v.w1, s_in, rng);
  fill_uniform(v.w2, s_h, rng);
  fill_uniform(v.wmu, 0.01 * s_h, rng);
  fill_uniform(v.wls, 0.01 * s_h, rng);
  v.bls.setConstant(1.0);
  fill_uniform(v.v1, s_in, rng);
  fill_uniform(v.v2, s_h, rng);
  fill_uniform(v.vh, s_h, rng);
}

ActorCritic::ActorOut ActorCritic::actor_forward(const MatrixXd& states) const {
  auto v = ParamViews::over(params_, shape_);
  ActorOut out;
  out.h1 = ((states * v.w1.transpose()).rowwise() + v.b1.transpose()).array().tanh();
  out.h2 = ((out.h1 * v.w2.transpose()).rowwise() + v.b2.transpose()).array().tanh();
  out.mu = (out.h2 * v.wmu.transpose()).rowwise() + v.bmu.transpose();
  out.log_sigma_pre = (out.h2 * v.wls.transpose()).rowwise() + v.bls.transpose();
  out.log_sigma = out.log_sigma_pre.array().min(kLogStdMax).max(kLogStdMin);
  return out;
}

ActorCritic::CriticOut ActorCritic::critic_forward(const MatrixXd& states) const {
  auto v = ParamViews::over(params_, shape_);
  CriticOut out;
  out.h1 = ((states * v.v1.transpose()).rowwise() + v.c1.transpose()).array().tanh();
  out.h2 = ((out.h1 * v.v2.transpose()).rowwise() + v.c2.transpose()).array().tanh();
  out.value = (out.h2 * v.vh.transpose()).col(0).array() + v.ch(0);
  return out;
}

void ActorCritic::actor_backward(const MatrixXd& states, const ActorOut& fwd,
                                 const MatrixXd& d_mu, const MatrixXd& d_log_sigma,
                                 VectorXd* grad) const {
  auto v = ParamViews::over(params_, shape_);
  auto g = ParamViews::over(*grad, shape_);

  // Projection-aware clamp gradient: at a saturated bound only the inward
  // component passes, so the bound never becomes gradient-absorbing (the
  // entropy bonus would otherwise pin sigma at the cap for good).
  MatrixXd d_ls = d_log_sigma;
  for (int i = 0; i < d_ls.rows(); ++i)
    for (int j = 0; j < d_ls.cols(); ++j) {
      const double pre = fwd.log_sigma_pre(i, j);
      if (pre >= kLogStdMax && d_ls(i, j) < 0.0) d_ls(i, j) = 0.0;
      if (pre <= kLogStdMin && d_ls(i, j) > 0.0) d_ls(i, j) = 0.0;
    }

  g.wmu += d_mu.transpose() * fwd.h2;
  g.bmu += d_mu.colwise().sum().transpose();
  g.wls += d_ls.transpose() * fwd.h2;
  g.bls += d_ls.colwise().sum().transpose();

  MatrixXd d_h2 = d_mu * v.wmu + d_ls * v.wls;
  MatrixXd d_z2 = d_h2.array() * (1.0 - fwd.h2.array().square());
  g.w2 += d_z2.transpose() * fwd.h1;
  g.b2 += d_z2.colwise().sum().transpose();

  MatrixXd d_h1 = d_z2 * v.w2;
  MatrixXd d_z1 = d_h1.array() * (1.0 - fwd.h1.array().square());
  g.w1 += d_z1.transpose() * states;
  g.b1 += d_z1.colwise().sum().transpose();
}

void ActorCritic::critic_backward(const MatrixXd& states, const CriticOut& fwd,
                                  const VectorXd& d_value, VectorXd* grad) const {
  auto v = ParamViews::over(params_, shape_);
  auto g = ParamViews::over(*grad, shape_);

  g.vh += d_value.transpose() * fwd.h2;
  g.ch(0) += d_value.sum();

  MatrixXd d_h2 = d_value * v.vh;
  MatrixXd d_z2 = d_h2.array() * (1.0 - fwd.h2.array().square());
  g.v2 += d_z2.transpose() * fwd.h1;
  g.c2 += d_z2.colwise().sum().transpose();

  MatrixXd d_h1 = d_z2 * v.v2;
  MatrixXd d_z1 = d_h1.array() * (1.0 - fwd.h1.array().square());
  g.v1 += d_z1.transpose() * states;
  g.c1 += d_z1.colwise().sum().transpose();
}

ActionSample sample_action(const VectorXd& mu, const VectorXd& log_sigma, Rng& rng) {
  ActionSample s;
  s.raw.resize(mu.size());
  for (int i = 0; i < mu.size(); ++i)
    s.raw[i] = mu[i] + std::exp(log_sigma[i]) * rng.normal();
  s.log_prob = log_prob_of(mu, log_sigma, s.raw);
  s.entropy = entropy_of(log_sigma);
  return s;
}

double log_prob_of(const VectorXd& mu, const VectorXd& log_sigma, const VectorXd& raw) {
  double lp = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    const double z = (raw[i] - mu[i]) * std::exp(-log_sigma[i]);
    lp += -log_sigma[i] - kHalfLog2Pi - 0.5 * z * z;
  }
  return lp;
}

double entropy_of(const VectorXd& log_sigma) {
  double h = 0.0;
  for (int i = 0; i < log_sigma.size(); ++i) h += 0.5 + kHalfLog2Pi + log_sigma[i];
  return h;
}

std::vector<int> map_action(const VectorXd& raw, const std::vector<SwitchGroup>& groups) {
  if (raw.size() != static_cast<Eigen::Index>(groups.size()))
    throw ConfigError(fmt::format("action has {} dims but there are {} groups", raw.size(),
                                  groups.size()));
  std::vector<int> choices(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double clipped = std::min(kActionClip, std::max(-kActionClip, raw[i]));
    const double unit = (clipped + kActionClip) / (2.0 * kActionClip);
    const int n = groups[i].n_configs();
    choices[i] = std::min(static_cast<int>(std::floor(unit * n)), n - 1);
  }
  return choices;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "psps-policy-checkpoint";
  doc["shape"] = {{"in", ck.shape.in}, {"hidden", ck.shape.hidden}, {"d_a", ck.shape.d_a}};
  doc["params"] = std::vector<double>(ck.params.data(), ck.params.data() + ck.params.size());
  doc["normalization"] = {{"demand_scale", ck.demand_scale}, {"horizon", ck.horizon}};
  doc["scenario_fingerprint"] = fmt::format("{:016x}", ck.scenario_fingerprint);
  doc["seed"] = ck.seed;
  doc["episodes_trained"] = ck.episodes_trained;
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write checkpoint '{}'", path));
  out << doc.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open checkpoint '{}'", path));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("checkpoint '{}': {}", path, e.what()));
  }
  if (doc.value("kind", "") != "psps-policy-checkpoint" || doc.value("format_version", 0) != 1)
    throw ParseError(fmt::format("'{}' is not a version-1 policy checkpoint", path));
  Checkpoint ck;
  ck.shape = NetShape{doc["shape"]["in"].get<int>(), doc["shape"]["hidden"].get<int>(),
                      doc["shape"]["d_a"].get<int>()};
  const auto values = doc["params"].get<std::vector<double>>();
  ck.params = Eigen::Map<const VectorXd>(values.data(), values.size());
  ck.demand_scale = doc["normalization"]["demand_scale"].get<double>();
  ck.horizon = doc["normalization"]["horizon"].get<int>();
  ck.scenario_fingerprint =
      std::stoull(doc["scenario_fingerprint"].get<std::string>(), nullptr, 16);
  ck.seed = doc.value("seed", std::uint64_t{0});
  ck.episodes_trained = doc.value("episodes_trained", 0);
  return ck;
}

}  // namespace psps
