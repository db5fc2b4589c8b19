#include <doctest.h>

#include <nlohmann/json.hpp>

#include "psps/report.hpp"
#include "support/fixtures.hpp"

using namespace psps;
namespace fx = psps::testing;

namespace {

struct Pack {
  Scenario scenario;
  std::vector<SwitchGroup> groups;
  SolutionCache cache;
};

Pack zero_risk_pack() {
  Network net = fx::small_switchable();
  for (int l : net.wildfire_lines) {
    net.risk.gamma_peak[l] = 1e-12;
    net.risk.beta_peak[l] = 0.0;
  }
  Pack pack{fx::make_scenario(std::move(net), FailureModel::linear()), {}, {}};
  pack.groups = decompose_groups(pack.scenario.network);
  pack.cache.prepopulate(pack.scenario.network, pack.groups, 1);
  return pack;
}

}  // namespace

TEST_CASE("static evaluation over a zero-risk scenario has zero cost spread") {
  Pack pack = zero_risk_pack();
  PolicySource source;
  source.fixed = make_static(pack.scenario.network, pack.groups, "close-10", {10});
  const MetricsRecord rec =
      evaluate(pack.scenario, pack.groups, pack.cache, source, 8, 5, 1);
  CHECK(rec.n_episodes == 8);
  CHECK(rec.std_cost() == doctest::Approx(0.0));
  CHECK(rec.mean_failures() == 0.0);
  CHECK(rec.mean_switch_cost() == doctest::Approx(pack.scenario.network.c_switch));
}

TEST_CASE("evaluation is deterministic and parallel-invariant") {
  Network net = fx::small_switchable();
  Pack pack{fx::make_scenario(std::move(net), FailureModel::step(fx::small_switchable(), 0.2)),
            {}, {}};
  pack.groups = decompose_groups(pack.scenario.network);
  pack.cache.prepopulate(pack.scenario.network, pack.groups, 1);
  PolicySource source;
  source.fixed = make_static(pack.scenario.network, pack.groups, "close-10", {10});
  const MetricsRecord a = evaluate(pack.scenario, pack.groups, pack.cache, source, 20, 3, 1);
  const MetricsRecord b = evaluate(pack.scenario, pack.groups, pack.cache, source, 20, 3, 2);
  CHECK(a.episode_costs == b.episode_costs);
  CHECK(a.episode_failures == b.episode_failures);
}

TEST_CASE("reported mean equals the mean of per-episode sums (round-trip audit)") {
  Pack pack = zero_risk_pack();
  PolicySource source;
  source.fixed = make_static(pack.scenario.network, pack.groups, "all-open", {});
  const MetricsRecord rec =
      evaluate(pack.scenario, pack.groups, pack.cache, source, 5, 1, 1);
  double mean = 0.0;
  for (double c : rec.episode_costs) mean += c;
  mean /= rec.episode_costs.size();
  CHECK(rec.mean_cost() == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("metrics records round-trip through JSON") {
  Pack pack = zero_risk_pack();
  PolicySource source;
  source.fixed = make_static(pack.scenario.network, pack.groups, "close-11", {11});
  MetricsRecord rec = evaluate(pack.scenario, pack.groups, pack.cache, source, 4, 9, 1);
  rec.tau = 0.4;
  const MetricsRecord back = MetricsRecord::from_json(rec.to_json());
  CHECK(back.policy == rec.policy);
  CHECK(back.episode_costs == rec.episode_costs);
  CHECK(back.episode_failures == rec.episode_failures);
  CHECK(back.tau == rec.tau);
  CHECK(back.fingerprint_hex == rec.fingerprint_hex);
}

TEST_CASE("checkpoint fingerprint mismatch is refused") {
  Pack pack = zero_risk_pack();
  Checkpoint ck;
  ck.shape = NetShape{10, 8, 1};
  ck.params = Eigen::VectorXd::Zero(ActorCritic(ck.shape).n_params());
  ck.scenario_fingerprint = 0x1234;  // wrong on purpose
  PolicySource source;
  source.checkpoint = ck;
  CHECK_THROWS_AS(evaluate(pack.scenario, pack.groups, pack.cache, source, 2, 1, 1),
                  ConfigError);
}

TEST_CASE("report table refuses mixed scenarios and formats single records") {
  Pack pack = zero_risk_pack();
  PolicySource source;
  source.fixed = make_static(pack.scenario.network, pack.groups, "close-10", {10});
  MetricsRecord a = evaluate(pack.scenario, pack.groups, pack.cache, source, 3, 1, 1);

  const std::string single = report_table({a});
  CHECK(single.find("Op. Cost") != std::string::npos);
  CHECK(single.find("static:close-10") != std::string::npos);

  MetricsRecord other = a;
  other.fingerprint_hex = "beef";
  other.scenario_name = "someone-else";
  CHECK_THROWS_AS(report_table({a, other}), ConfigError);
  CHECK_THROWS_AS(report_table({}), ConfigError);

  const std::string csv = report_csv({a});
  CHECK(csv.find("policy,tau") == 0);
}

TEST_CASE("flow distribution CSV is stable and order-independent") {
  Network net = fx::small_switchable();
  Pack pack{fx::make_scenario(std::move(net), FailureModel::linear()), {}, {}};
  pack.groups = decompose_groups(pack.scenario.network);
  pack.cache.prepopulate(pack.scenario.network, pack.groups, 1);
  PolicySource source;
  source.fixed = make_static(pack.scenario.network, pack.groups, "close-10", {10});

  FlowDistribution f1, f2;
  evaluate(pack.scenario, pack.groups, pack.cache, source, 6, 2, 1, &f1);
  evaluate(pack.scenario, pack.groups, pack.cache, source, 6, 2, 2, &f2);
  CHECK(f1.to_csv() == f2.to_csv());
  CHECK(f1.to_csv().find("line_id,n,min") == 0);
}
