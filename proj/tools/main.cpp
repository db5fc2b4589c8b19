#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psps/baselines.hpp"
#include "psps/environment.hpp"
#include "psps/grid.hpp"
#include "psps/policy.hpp"
#include "psps/powerflow.hpp"
#include "psps/report.hpp"
#include "psps/topology.hpp"
#include "psps/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::string scenario_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;  // 0 = use the scenario's default
  int workers = 0;         // 0 = hardware concurrency
};

std::uint64_t effective_seed(const GlobalOpts& g, const psps::Scenario& sc) {
  return g.seed != 0 ? g.seed : sc.seed;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw psps::ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

std::vector<int> parse_id_list(const std::string& csv) {
  std::vector<int> ids;
  std::string token;
  for (char c : csv + ",") {
    if (c == ',' || c == ' ') {
      if (!token.empty()) ids.push_back(std::stoi(token));
      token.clear();
    } else {
      token += c;
    }
  }
  return ids;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> xs;
  std::string token;
  for (char c : csv + ",") {
    if (c == ',' || c == ' ') {
      if (!token.empty()) xs.push_back(std::stod(token));
      token.clear();
    } else {
      token += c;
    }
  }
  return xs;
}

psps::StaticPolicy resolve_static(const psps::Network& net,
                                  const std::vector<psps::SwitchGroup>& groups,
                                  const std::string& preset, const std::string& closed_csv) {
  if (!preset.empty() && !closed_csv.empty())
    throw psps::ConfigError("give either a preset name or an explicit closed list, not both");
  if (!preset.empty()) {
    const auto& presets = psps::static_presets();
    auto it = presets.find(preset);
    if (it == presets.end()) {
      std::string names;
      for (const auto& [n, _] : presets) names += (names.empty() ? "" : ", ") + n;
      throw psps::ConfigError(
          fmt::format("unknown preset '{}' (available: {})", preset, names));
    }
    return psps::make_static(net, groups, preset, it->second);
  }
  return psps::make_static(net, groups, "closed{" + closed_csv + "}",
                           parse_id_list(closed_csv));
}

struct LoadedScenario {
  psps::Scenario scenario;
  std::vector<psps::SwitchGroup> groups;
};

LoadedScenario load_with_groups(const GlobalOpts& g) {
  if (g.scenario_path.empty()) throw psps::ConfigError("--scenario is required");
  LoadedScenario ls{psps::load_scenario(g.scenario_path), {}};
  for (const std::string& w : ls.scenario.network.warnings)
    std::cerr << "warning: " << w << "\n";
  ls.groups = psps::decompose_groups(ls.scenario.network);
  return ls;
}

int cmd_enumerate(const GlobalOpts& g, const std::string& network_path, bool list_configs,
                  const std::string& json_out) {
  psps::Network net = network_path.empty()
                          ? psps::load_scenario(g.scenario_path).network
                          : psps::load_network(network_path);
  const auto groups = psps::decompose_groups(net);
  fmt::print("group  lines                      configurations\n");
  fmt::print("-----  -------------------------  --------------\n");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::string ids;
    for (int li : groups[i].lines)
      ids += (ids.empty() ? "" : ", ") + std::to_string(net.lines[li].id);
    fmt::print("{:<5}  {{{}}}{}  {}\n", i + 1, ids,
               std::string(ids.size() > 23 ? 0 : 23 - ids.size(), ' '), groups[i].n_configs());
  }
  fmt::print("total feasible topologies: {}\n", psps::count_topologies(groups));

  if (list_configs || !json_out.empty()) {
    json doc;
    doc["groups"] = json::array();
    for (const auto& grp : groups) {
      json ids = json::array();
      for (int li : grp.lines) ids.push_back(net.lines[li].id);
      doc["groups"].push_back({{"lines", ids}, {"configurations", grp.n_configs()}});
    }
    doc["total"] = psps::count_topologies(groups);
    doc["topologies"] = json::array();
    psps::for_each_choice_tuple(groups, [&](const std::vector<int>& choices) {
      json closed = json::array();
      for (std::size_t i = 0; i < groups.size(); ++i)
        if (choices[i] > 0) closed.push_back(net.lines[groups[i].lines[choices[i] - 1]].id);
      doc["topologies"].push_back({{"choices", choices}, {"closed", closed}});
    });
    if (!json_out.empty()) {
      write_text(json_out, doc.dump(2) + "\n");
      fmt::print("wrote {}\n", json_out);
    } else {
      fmt::print("{}\n", doc.dump(2));
    }
  }
  return 0;
}

int cmd_solve_pf(const GlobalOpts&, const std::string& network_path,
                 const std::string& closed_csv, const std::string& failed_csv, int hour,
                 const std::string& json_out) {
  psps::Network net = psps::load_network(network_path);
  psps::SwitchConfig config{psps::Bitset(net.switchable_lines.size())};
  for (int id : parse_id_list(closed_csv)) {
    const int pos = net.switch_position(net.line_index(id));
    if (pos < 0) throw psps::ConfigError(fmt::format("line {} is not switchable", id));
    config.closed.set(pos, true);
  }
  psps::Bitset avail = psps::full_availability(net);
  for (int id : parse_id_list(failed_csv)) avail.set(net.line_index(id), false);

  const auto lp = psps::build_lp(net, config, avail, hour, 0.0);
  const psps::PfSolution pf = psps::solve_lp(lp);

  fmt::print("hour {}  objective {:.4f} $\n", hour, pf.objective);
  fmt::print("substation injections (MW, MVAr):\n");
  for (std::size_t s = 0; s < pf.p_sub.size(); ++s)
    fmt::print("  bus {:>4}  p = {:9.4f}  q = {:9.4f}\n", net.buses[net.substations[s]].id,
               pf.p_sub[s], pf.q_sub[s]);
  fmt::print("line flows (MW, MVAr):\n");
  for (int l = 0; l < net.n_lines(); ++l)
    fmt::print("  line {:>4}  f_p = {:9.4f}  f_q = {:9.4f}  |f|/F = {:5.3f}{}\n",
               net.lines[l].id, pf.f_p[l], pf.f_q[l],
               std::abs(pf.f_p[l]) / net.lines[l].f_max, avail.get(l) ? "" : "  [failed]");
  double shed = 0.0;
  for (std::size_t b = 0; b < pf.dp_minus.size(); ++b) shed += pf.dp_minus[b];
  fmt::print("total active shed: {:.4f} MW\n", shed);

  if (!json_out.empty()) {
    json doc{{"hour", hour},
             {"objective", pf.objective},
             {"f_p", pf.f_p},
             {"f_q", pf.f_q},
             {"v", pf.v},
             {"p_sub", pf.p_sub},
             {"q_sub", pf.q_sub},
             {"dp_plus", pf.dp_plus},
             {"dp_minus", pf.dp_minus},
             {"dq_plus", pf.dq_plus},
             {"dq_minus", pf.dq_minus}};
    write_text(json_out, doc.dump(2) + "\n");
    fmt::print("wrote {}\n", json_out);
  }
  return 0;
}

int cmd_train(const GlobalOpts& g, psps::PpoConfig cfg, const std::string& checkpoint_path,
              const std::string& log_path) {
  LoadedScenario ls = load_with_groups(g);
  const std::uint64_t seed = effective_seed(g, ls.scenario);

  psps::SolutionCache cache;
  cache.prepopulate(ls.scenario.network, ls.groups, g.workers);
  fmt::print("pre-solved {} dispatch problems\n", cache.size());

  const fs::path log_file =
      log_path.empty() ? fs::path(g.out_dir) / "training_log.jsonl" : fs::path(log_path);
  fs::create_directories(log_file.parent_path().empty() ? "." : log_file.parent_path());
  std::ofstream log_stream(log_file);
  if (!log_stream)
    throw psps::ConfigError(fmt::format("cannot write '{}'", log_file.string()));

  const psps::TrainResult result =
      psps::train(ls.scenario, ls.groups, cache, cfg, seed, &log_stream);

  psps::Checkpoint ck;
  ck.shape = result.net.shape();
  ck.params = result.net.params();
  ck.demand_scale = std::max(ls.scenario.network.max_demand(), 1e-12);
  ck.horizon = ls.scenario.network.horizon;
  ck.scenario_fingerprint = ls.scenario.fingerprint;
  ck.seed = seed;
  ck.episodes_trained = cfg.episodes;
  const fs::path ck_file =
      checkpoint_path.empty() ? fs::path(g.out_dir) / "checkpoint.json"
                              : fs::path(checkpoint_path);
  psps::save_checkpoint(ck_file.string(), ck);
  fmt::print("trained {} episodes (seed {}); checkpoint: {}  log: {}\n", cfg.episodes, seed,
             ck_file.string(), log_file.string());
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& checkpoint_path,
                 const std::string& preset, const std::string& closed_csv, int episodes,
                 const std::string& out_path) {
  LoadedScenario ls = load_with_groups(g);
  const std::uint64_t seed = effective_seed(g, ls.scenario);
  const int n_episodes = episodes > 0 ? episodes : ls.scenario.eval_episodes;

  psps::PolicySource source;
  psps::SolutionCache cache;
  if (!checkpoint_path.empty()) {
    source.checkpoint = psps::load_checkpoint(checkpoint_path);
    cache.prepopulate(ls.scenario.network, ls.groups, g.workers);
  } else {
    source.fixed = resolve_static(ls.scenario.network, ls.groups, preset, closed_csv);
    cache.prepopulate_for(ls.scenario.network, {source.fixed->config}, g.workers);
  }

  const psps::MetricsRecord record =
      psps::evaluate(ls.scenario, ls.groups, cache, source, n_episodes, seed, g.workers);
  fmt::print("{}", psps::report_table({record}));

  const fs::path out = out_path.empty()
                           ? fs::path(g.out_dir) / fmt::format("metrics_{}.json",
                                                               source.fixed
                                                                   ? source.fixed->name
                                                                   : "checkpoint")
                           : fs::path(out_path);
  write_text(out, record.to_json().dump(2) + "\n");
  fmt::print("wrote {}\n", out.string());
  return 0;
}

int cmd_oracle(const GlobalOpts& g, int episodes_per_config, std::uint64_t max_topologies,
               const std::string& out_path) {
  LoadedScenario ls = load_with_groups(g);
  const std::uint64_t seed = effective_seed(g, ls.scenario);

  psps::SolutionCache cache;
  cache.prepopulate(ls.scenario.network, ls.groups, g.workers);
  const auto ranking = psps::enumerate_static_oracle(ls.scenario, ls.groups, cache,
                                                     episodes_per_config, seed, max_topologies,
                                                     g.workers);
  fmt::print("rank  closed lines              mean cost     std cost  failures\n");
  fmt::print("----  ------------------------  ------------  --------  --------\n");
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::string ids;
    for (int id : ranking[i].closed_ids) ids += (ids.empty() ? "" : ",") + std::to_string(id);
    if (ids.empty()) ids = "(all open)";
    fmt::print("{:<4}  {:<24}  {:>12.2f}  {:>8.2f}  {:>8.3f}\n", i + 1, ids,
               ranking[i].mean_cost, ranking[i].std_cost, ranking[i].mean_failures);
  }

  std::string csv = "rank,closed,mean_cost,std_cost,mean_failures\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::string ids;
    for (int id : ranking[i].closed_ids) ids += (ids.empty() ? "" : " ") + std::to_string(id);
    csv += fmt::format("{},{},{:.10g},{:.10g},{:.10g}\n", i + 1, ids, ranking[i].mean_cost,
                       ranking[i].std_cost, ranking[i].mean_failures);
  }
  const fs::path out =
      out_path.empty() ? fs::path(g.out_dir) / "oracle_ranking.csv" : fs::path(out_path);
  write_text(out, csv);
  fmt::print("wrote {}\n", out.string());
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& taus_csv,
              const std::string& checkpoint_pattern, const std::string& preset,
              const std::string& closed_csv, int episodes) {
  if (g.scenario_path.empty()) throw psps::ConfigError("--scenario is required");
  std::vector<double> taus = taus_csv.empty()
                                 ? std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                                       0.6, 0.7, 0.8, 0.9, 1.0}
                                 : parse_double_list(taus_csv);

  std::ifstream in(g.scenario_path);
  if (!in)
    throw psps::ParseError(fmt::format("cannot open scenario '{}'", g.scenario_path));
  json template_doc;
  in >> template_doc;
  const std::string base_dir = fs::path(g.scenario_path).parent_path().string();

  std::vector<psps::MetricsRecord> records;
  std::vector<std::string> missing;
  for (double tau : taus) {
    json doc = template_doc;
    if (!doc.contains("failure_model") || doc["failure_model"].value("kind", "") != "step")
      throw psps::ConfigError("sweep requires a scenario with a step failure model");
    doc["failure_model"]["tau"] = tau;
    psps::Scenario sc = psps::scenario_from_json(doc, base_dir);
    sc.name = fmt::format("{}[tau={:.2f}]", fs::path(g.scenario_path).stem().string(), tau);
    const auto groups = psps::decompose_groups(sc.network);
    const std::uint64_t seed = effective_seed(g, sc);
    const int n_episodes = episodes > 0 ? episodes : sc.eval_episodes;

    psps::PolicySource source;
    psps::SolutionCache cache;
    if (!checkpoint_pattern.empty()) {
      std::string path = checkpoint_pattern;
      const std::string token = "{tau}";
      const auto at = path.find(token);
      if (at != std::string::npos) path.replace(at, token.size(), fmt::format("{:.1f}", tau));
      if (!fs::exists(path)) {
        missing.push_back(fmt::format("tau={:.2f}: no checkpoint at {}", tau, path));
        continue;
      }
      source.checkpoint = psps::load_checkpoint(path);
      cache.prepopulate(sc.network, groups, g.workers);
    } else {
      source.fixed = resolve_static(sc.network, groups, preset, closed_csv);
      cache.prepopulate_for(sc.network, {source.fixed->config}, g.workers);
    }

    psps::FlowDistribution flows;
    psps::MetricsRecord record =
        psps::evaluate(sc, groups, cache, source, n_episodes, seed, g.workers, &flows);
    record.tau = tau;
    records.push_back(record);
    write_text(fs::path(g.out_dir) / fmt::format("flows_tau_{:.2f}.csv", tau), flows.to_csv());
  }

  for (const std::string& m : missing) std::cerr << "skipped " << m << "\n";
  if (records.empty()) throw psps::ConfigError("sweep produced no records");

  std::string csv = psps::report_csv(records);
  write_text(fs::path(g.out_dir) / "sweep_metrics.csv", csv);
  fmt::print("tau     mean cost    std cost   switch    failures\n");
  fmt::print("-----  ----------  ----------  -------  ----------\n");
  for (const auto& r : records)
    fmt::print("{:<5.2f}  {:>10.2f}  {:>10.2f}  {:>7.0f}  {:>10.3f}\n", *r.tau, r.mean_cost(),
               r.std_cost(), r.mean_switch_cost(), r.mean_failures());
  fmt::print("wrote {}\n", (fs::path(g.out_dir) / "sweep_metrics.csv").string());
  return 0;
}

int cmd_report(const GlobalOpts& g, const std::vector<std::string>& record_paths,
               const std::string& csv_out) {
  std::vector<psps::MetricsRecord> records;
  for (const std::string& path : record_paths) {
    std::ifstream in(path);
    if (!in) throw psps::ParseError(fmt::format("cannot open metrics record '{}'", path));
    json doc;
    in >> doc;
    records.push_back(psps::MetricsRecord::from_json(doc));
  }
  fmt::print("{}", psps::report_table(records));
  const fs::path out =
      csv_out.empty() ? fs::path(g.out_dir) / "report.csv" : fs::path(csv_out);
  write_text(out, psps::report_csv(records));
  fmt::print("wrote {}\n", out.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PSPS switching lab: episodic grid simulator, dispatch LP and PPO trainer"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--scenario", g.scenario_path, "scenario JSON file")->envname("PSPS_SCENARIO");
  app.add_option("--seed", g.seed, "master seed (0 = scenario default)");
  app.add_option("--out-dir", g.out_dir, "directory for emitted files");
  app.add_option("--workers", g.workers, "worker threads (0 = hardware)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a PPO switching policy");
  psps::PpoConfig cfg;
  std::string checkpoint_path, log_path;
  train_cmd->add_option("--episodes", cfg.episodes, "training episodes");
  train_cmd->add_option("--eval-interval", cfg.eval_interval,
                        "deterministic eval every N episodes (0 = off)");
  train_cmd->add_option("--eval-episodes", cfg.eval_episodes, "episodes per periodic eval");
  train_cmd->add_option("--hidden", cfg.hidden, "hidden layer width");
  train_cmd->add_option("--learning-rate", cfg.learning_rate, "optimizer step size");
  train_cmd->add_option("--clip-eps", cfg.clip_eps, "PPO clip coefficient");
  train_cmd->add_option("--entropy-coef", cfg.c_ent, "entropy bonus coefficient");
  train_cmd->add_option("--value-coef", cfg.c_vf, "value loss coefficient");
  train_cmd->add_option("--gamma", cfg.gamma_rl, "discount factor");
  train_cmd->add_option("--gae-lambda", cfg.gae_lambda, "GAE lambda");
  train_cmd->add_option("--update-epochs", cfg.update_epochs, "gradient epochs per episode");
  train_cmd->add_option("--minibatch", cfg.minibatch, "minibatch size (0 = full trajectory)");
  train_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint output path");
  train_cmd->add_option("--log", log_path, "training log output path (JSONL)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint or static policy");
  std::string eval_checkpoint, eval_preset, eval_closed, eval_out;
  int eval_episodes = 0;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "policy checkpoint path");
  eval_cmd->add_option("--static", eval_preset, "static preset name");
  eval_cmd->add_option("--closed", eval_closed, "explicit closed line ids, e.g. '3,17,19'");
  eval_cmd->add_option("--episodes", eval_episodes, "episodes (default: scenario setting)");
  eval_cmd->add_option("--out", eval_out, "metrics record output path");

  // baseline (static-only evaluate)
  auto* base_cmd = app.add_subcommand("baseline", "evaluate a named or explicit fixed topology");
  std::string base_preset, base_closed, base_out;
  int base_episodes = 0;
  base_cmd->add_option("--name", base_preset, "static preset name");
  base_cmd->add_option("--closed", base_closed, "explicit closed line ids");
  base_cmd->add_option("--episodes", base_episodes, "episodes (default: scenario setting)");
  base_cmd->add_option("--out", base_out, "metrics record output path");

  // oracle
  auto* oracle_cmd =
      app.add_subcommand("oracle", "rank all feasible static topologies by Monte Carlo cost");
  int oracle_episodes = 100;
  std::uint64_t max_topologies = 500;
  std::string oracle_out;
  oracle_cmd->add_option("--episodes-per-config", oracle_episodes, "episodes per topology");
  oracle_cmd->add_option("--max-topologies", max_topologies, "refuse above this many");
  oracle_cmd->add_option("--out", oracle_out, "ranking CSV output path");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate across step-model thresholds");
  std::string sweep_taus, sweep_ckpt, sweep_preset, sweep_closed;
  int sweep_episodes = 0;
  sweep_cmd->add_option("--taus", sweep_taus, "comma list (default 0.0..1.0 step 0.1)");
  sweep_cmd->add_option("--checkpoint-pattern", sweep_ckpt,
                        "checkpoint path with a {tau} placeholder");
  sweep_cmd->add_option("--static", sweep_preset, "static preset name");
  sweep_cmd->add_option("--closed", sweep_closed, "explicit closed line ids");
  sweep_cmd->add_option("--episodes", sweep_episodes, "episodes per tau");

  // enumerate-topologies
  auto* enum_cmd = app.add_subcommand("enumerate-topologies",
                                      "show constraint groups and the feasible topology count");
  std::string enum_network, enum_json;
  bool enum_list = false;
  enum_cmd->add_option("--network", enum_network, "network file (or use --scenario)");
  enum_cmd->add_flag("--list", enum_list, "also list every feasible topology");
  enum_cmd->add_option("--json", enum_json, "write the machine-readable listing here");

  // solve-pf
  auto* pf_cmd = app.add_subcommand("solve-pf", "solve one dispatch LP");
  std::string pf_network, pf_closed, pf_failed, pf_json;
  int pf_hour = 1;
  pf_cmd->add_option("--network", pf_network, "network file")->required();
  pf_cmd->add_option("--closed", pf_closed, "closed switchable line ids");
  pf_cmd->add_option("--failed", pf_failed, "failed line ids");
  pf_cmd->add_option("--hour", pf_hour, "1-based hour");
  pf_cmd->add_option("--json", pf_json, "write the solution record here");

  // report
  auto* report_cmd = app.add_subcommand("report", "combine metrics records into one table");
  std::vector<std::string> report_files;
  std::string report_csv_out;
  report_cmd->add_option("records", report_files, "metrics record JSON files")->required();
  report_cmd->add_option("--csv", report_csv_out, "comparison CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(g, cfg, checkpoint_path, log_path);
    if (eval_cmd->parsed())
      return cmd_evaluate(g, eval_checkpoint, eval_preset, eval_closed, eval_episodes, eval_out);
    if (base_cmd->parsed())
      return cmd_evaluate(g, "", base_preset, base_closed, base_episodes, base_out);
    if (oracle_cmd->parsed()) return cmd_oracle(g, oracle_episodes, max_topologies, oracle_out);
    if (sweep_cmd->parsed())
      return cmd_sweep(g, sweep_taus, sweep_ckpt, sweep_preset, sweep_closed, sweep_episodes);
    if (enum_cmd->parsed()) return cmd_enumerate(g, enum_network, enum_list, enum_json);
    if (pf_cmd->parsed())
      return cmd_solve_pf(g, pf_network, pf_closed, pf_failed, pf_hour, pf_json);
    if (report_cmd->parsed()) return cmd_report(g, report_files, report_csv_out);
  } catch (const psps::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const psps::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const psps::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const psps::StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
