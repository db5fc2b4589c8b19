#include "psps/report.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace psps {

using nlohmann::json;

namespace {

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / xs.size();
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / xs.size());
}

}  // namespace

double MetricsRecord::mean_cost() const { return mean_of(episode_costs); }
double MetricsRecord::std_cost() const { return std_of(episode_costs); }
double MetricsRecord::mean_switch_cost() const { return mean_of(episode_switch_costs); }

double MetricsRecord::mean_failures() const {
  if (episode_failures.empty()) return 0.0;
  double s = 0.0;
  for (int f : episode_failures) s += f;
  return s / episode_failures.size();
}

double MetricsRecord::std_failures() const {
  std::vector<double> xs(episode_failures.begin(), episode_failures.end());
  return std_of(xs);
}

json MetricsRecord::to_json() const {
  json doc{{"record", "psps-metrics"},
           {"policy", policy},
           {"scenario", scenario_name},
           {"scenario_fingerprint", fingerprint_hex},
           {"seed", seed},
           {"n_episodes", n_episodes},
           {"episode_costs", episode_costs},
           {"episode_switch_costs", episode_switch_costs},
           {"episode_failures", episode_failures},
           {"mean_cost", mean_cost()},
           {"std_cost", std_cost()},
           {"mean_switch_cost", mean_switch_cost()},
           {"mean_failures", mean_failures()}};
  if (tau) doc["tau"] = *tau;
  return doc;
}

MetricsRecord MetricsRecord::from_json(const json& doc) {
  if (doc.value("record", "") != "psps-metrics")
    throw ParseError("not a metrics record (missing record=psps-metrics marker)");
  MetricsRecord r;
  r.policy = doc.at("policy").get<std::string>();
  r.scenario_name = doc.at("scenario").get<std::string>();
  r.fingerprint_hex = doc.at("scenario_fingerprint").get<std::string>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.n_episodes = doc.at("n_episodes").get<int>();
  r.episode_costs = doc.at("episode_costs").get<std::vector<double>>();
  r.episode_switch_costs = doc.at("episode_switch_costs").get<std::vector<double>>();
  r.episode_failures = doc.at("episode_failures").get<std::vector<int>>();
  if (doc.contains("tau")) r.tau = doc["tau"].get<double>();
  return r;
}

void FlowDistribution::add(const Network& net, const PfSolution& pf) {
  if (line_ids.empty()) {
    for (int l : net.wildfire_lines) line_ids.push_back(net.lines[l].id);
    samples.resize(line_ids.size());
  }
  for (std::size_t i = 0; i < net.wildfire_lines.size(); ++i) {
    const int l = net.wildfire_lines[i];
    samples[i].push_back(std::abs(pf.f_p[l]) / net.lines[l].f_max);
  }
}

std::string FlowDistribution::to_csv() const {
  // 22 bins of width 0.05 cover [0, 1.1); the octagon bound keeps |f|/F below
  // sec(pi/8) ~= 1.0824.
  constexpr int kBins = 22;
  constexpr double kBinWidth = 0.05;
  std::string out =
      "line_id,n,min,p05,p25,p50,p75,p95,max";
  for (int b = 0; b < kBins; ++b)
    out += fmt::format(",hist_{:.2f}_{:.2f}", b * kBinWidth, (b + 1) * kBinWidth);
  out += "\n";
  for (std::size_t i = 0; i < line_ids.size(); ++i) {
    std::vector<double> xs = samples[i];
    std::sort(xs.begin(), xs.end());
    const auto q = [&](double p) -> double {
      if (xs.empty()) return 0.0;
      const double idx = p * (xs.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(idx);
      const std::size_t hi = std::min(lo + 1, xs.size() - 1);
      return xs[lo] + (xs[hi] - xs[lo]) * (idx - lo);
    };
    out += fmt::format("{},{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g}", line_ids[i],
                       xs.size(), xs.empty() ? 0.0 : xs.front(), q(0.05), q(0.25), q(0.50),
                       q(0.75), q(0.95), xs.empty() ? 0.0 : xs.back());
    std::vector<int> hist(kBins, 0);
    for (double x : xs) {
      int b = static_cast<int>(x / kBinWidth);
      if (b >= kBins) b = kBins - 1;
      if (b < 0) b = 0;
      ++hist[b];
    }
    for (int h : hist) out += fmt::format(",{}", h);
    out += "\n";
  }
  return out;
}

std::string PolicySource::describe() const {
  if (fixed) return fmt::format("static:{}", fixed->name);
  if (checkpoint) return "ppo-checkpoint";
  return "unset";
}

MetricsRecord evaluate(const Scenario& scenario, const std::vector<SwitchGroup>& groups,
                       const SolutionCache& cache, const PolicySource& source, int n_episodes,
                       std::uint64_t seed, int workers, FlowDistribution* flows) {
  if (n_episodes < 1) throw ConfigError("evaluate needs at least one episode");
  if (!source.fixed && !source.checkpoint)
    throw ConfigError("evaluate needs a static policy or a checkpoint");

  std::optional<ActorCritic> net;
  if (source.checkpoint) {
    const Checkpoint& ck = *source.checkpoint;
    const std::string fp = fmt::format("{:016x}", scenario.fingerprint);
    if (ck.scenario_fingerprint != scenario.fingerprint)
      throw ConfigError(fmt::format(
          "checkpoint was trained on scenario fingerprint {:016x} but this scenario is {}; "
          "refusing to evaluate a mismatched policy",
          ck.scenario_fingerprint, fp));
    net.emplace(ck.shape);
    net->params() = ck.params;
  }

  MetricsRecord record;
  record.policy = source.describe();
  record.scenario_name = scenario.name;
  record.fingerprint_hex = fmt::format("{:016x}", scenario.fingerprint);
  record.seed = seed;
  record.n_episodes = n_episodes;
  record.episode_costs.assign(n_episodes, 0.0);
  record.episode_switch_costs.assign(n_episodes, 0.0);
  record.episode_failures.assign(n_episodes, 0);

  std::mutex flow_mutex;
  parallel_for(static_cast<std::size_t>(n_episodes), workers, [&](std::size_t e) {
    Environment env(scenario, groups, &cache, seed);
    const Actor actor = source.fixed ? static_actor(*source.fixed) : policy_actor(*net);
    const auto records = rollout(env, actor, e + 1, /*deterministic=*/true);
    double cost = 0.0, sw = 0.0;
    int failures = 0;
    for (const auto& r : records) {
      cost -= r.reward;
      sw += r.switch_cost;
      failures += r.failures_this_step;
    }
    record.episode_costs[e] = cost;
    record.episode_switch_costs[e] = sw;
    record.episode_failures[e] = failures;
    if (flows) {
      std::lock_guard<std::mutex> lock(flow_mutex);
      for (const auto& r : records) flows->add(scenario.network, r.pf);
    }
  });
  return record;
}

namespace {

void check_same_scenario(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw ConfigError("report needs at least one metrics record");
  for (const auto& r : records) {
    if (r.fingerprint_hex != records.front().fingerprint_hex)
      throw ConfigError(fmt::format(
          "records mix scenarios ('{}' vs '{}'); metrics are only comparable within one "
          "scenario",
          records.front().scenario_name, r.scenario_name));
  }
}

}  // namespace

std::string report_table(const std::vector<MetricsRecord>& records) {
  check_same_scenario(records);
  std::vector<std::string> headers{"Metric"};
  for (const auto& r : records) headers.push_back(r.policy);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Op. Cost ($)"});
  for (const auto& r : records)
    rows.back().push_back(fmt::format("{:.0f} +- {:.0f}", r.mean_cost(), r.std_cost()));
  rows.push_back({"Switch Cost ($)"});
  for (const auto& r : records)
    rows.back().push_back(fmt::format("{:.0f}", r.mean_switch_cost()));
  rows.push_back({"Line Failures"});
  for (const auto& r : records)
    rows.back().push_back(fmt::format("{:.2f}", r.mean_failures()));
  rows.push_back({"Episodes"});
  for (const auto& r : records) rows.back().push_back(fmt::format("{}", r.n_episodes));

  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::string out = fmt::format("scenario: {} (fingerprint {})\n",
                                records.front().scenario_name,
                                records.front().fingerprint_hex);
  const auto emit_row = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c)
      out += fmt::format("{:<{}}{}", cells[c], width[c], c + 1 == cells.size() ? "" : "  ");
    out += "\n";
  };
  emit_row(headers);
  std::string rule;
  for (std::size_t c = 0; c < headers.size(); ++c)
    rule += std::string(width[c], '-') + (c + 1 == headers.size() ? "" : "  ");
  out += rule + "\n";
  for (const auto& row : rows) emit_row(row);
  return out;
}

std::string report_csv(const std::vector<MetricsRecord>& records) {
  check_same_scenario(records);
  std::string out = "policy,tau,n_episodes,mean_cost,std_cost,mean_switch_cost,mean_failures\n";
  for (const auto& r : records)
    out += fmt::format("{},{},{},{:.10g},{:.10g},{:.10g},{:.10g}\n", r.policy,
                       r.tau ? fmt::format("{:.3g}", *r.tau) : "", r.n_episodes, r.mean_cost(),
                       r.std_cost(), r.mean_switch_cost(), r.mean_failures());
  return out;
}

}  // namespace psps
