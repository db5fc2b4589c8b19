#include "psps/powerflow.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace psps {

double PfSolution::total_p_sub() const {
  double s = 0.0;
  for (double p : p_sub) s += p;
  return s;
}

double PfSolution::total_shed_terms() const {
  double s = 0.0;
  for (std::size_t b = 0; b < dp_plus.size(); ++b)
    s += dp_plus[b] + dp_minus[b] + dq_plus[b] + dq_minus[b];
  return s;
}

double big_m(const Network& net) {
  double v_hi = 0.0, v_lo = lp::kInf;
  for (const Bus& b : net.buses) {
    v_hi = std::max(v_hi, b.v_max_sq);
    v_lo = std::min(v_lo, b.v_min_sq);
  }
  double drop = 0.0;
  for (const Line& l : net.lines)
    drop = std::max(drop, (l.r + l.x) * l.f_max / net.base_mva);
  return (v_hi - v_lo) + 2.0 * drop;
}

namespace {

void add_row(LpProblem& lp, RowTag tag, lp::Row row) {
  lp.problem.rows.push_back(std::move(row));
  lp.row_tags.push_back(tag);
}

lp::Row le(std::vector<std::pair<int, double>> terms, double rhs, bool lazy = false) {
  return lp::Row{std::move(terms), lp::Sense::kLe, rhs, lazy};
}

lp::Row eq(std::vector<std::pair<int, double>> terms, double rhs) {
  return lp::Row{std::move(terms), lp::Sense::kEq, rhs, false};
}

}  // namespace

LpProblem build_lp(const Network& net, const SwitchConfig& config, const Bitset& availability,
                   int hour, double switch_ops_cost) {
  if (hour < 1 || hour > net.horizon)
    throw ValidationError(fmt::format("hour {} outside [1, {}]", hour, net.horizon));
  if (config.closed.size() != static_cast<std::size_t>(net.n_switchable()))
    throw ConfigError("switch config size does not match the switchable-line count");
  if (availability.size() != static_cast<std::size_t>(net.n_lines()))
    throw ConfigError("availability size does not match the line count");
  const int t = hour - 1;
  const int n_lines = net.n_lines();
  const int n_buses = net.n_buses();
  const int n_sub = static_cast<int>(net.substations.size());

  LpProblem lp;
  lp.layout = VarLayout{n_lines, n_buses, n_sub};
  const VarLayout& L = lp.layout;
  lp.problem.n_vars = L.n_vars();
  lp.problem.cost.assign(L.n_vars(), 0.0);
  lp.problem.lo.assign(L.n_vars(), -lp::kInf);
  lp.problem.hi.assign(L.n_vars(), lp::kInf);
  lp.problem.cost_constant = switch_ops_cost;

  for (int s = 0; s < n_sub; ++s) lp.problem.cost[L.p_sub(s)] = net.c_energy;
  for (int b = 0; b < n_buses; ++b) {
    for (int k = 0; k < 4; ++k) {
      lp.problem.cost[L.shed_base() + 4 * b + k] = net.c_load_loss;
      lp.problem.lo[L.shed_base() + 4 * b + k] = 0.0;  // the nonnegativity half of (h)
    }
  }

  // Incidence: flow f_l is oriented from -> to, so it enters to(l) and leaves fr(l).
  std::vector<std::vector<std::pair<int, double>>> bal_p(n_buses), bal_q(n_buses);
  for (int l = 0; l < n_lines; ++l) {
    const int bf = net.bus_index(net.lines[l].from_bus);
    const int bt = net.bus_index(net.lines[l].to_bus);
    bal_p[bt].emplace_back(L.fp(l), 1.0);
    bal_p[bf].emplace_back(L.fp(l), -1.0);
    bal_q[bt].emplace_back(L.fq(l), 1.0);
    bal_q[bf].emplace_back(L.fq(l), -1.0);
  }

  std::vector<int> sub_of_bus(n_buses, -1);
  for (int s = 0; s < n_sub; ++s) sub_of_bus[net.substations[s]] = s;

  for (int b = 0; b < n_buses; ++b) {
    auto terms_p = bal_p[b];
    auto terms_q = bal_q[b];
    terms_p.emplace_back(L.dp_plus(b), -1.0);
    terms_p.emplace_back(L.dp_minus(b), 1.0);
    terms_q.emplace_back(L.dq_plus(b), -1.0);
    terms_q.emplace_back(L.dq_minus(b), 1.0);
    const int s = sub_of_bus[b];
    if (s >= 0) {
      terms_p.emplace_back(L.p_sub(s), 1.0);
      terms_q.emplace_back(L.q_sub(s), 1.0);
      add_row(lp, RowTag::kSubBalanceP, eq(std::move(terms_p), net.demand_p[b][t]));
      add_row(lp, RowTag::kSubBalanceQ, eq(std::move(terms_q), net.demand_q[b][t]));
    } else {
      add_row(lp, RowTag::kLoadBalanceP, eq(std::move(terms_p), net.demand_p[b][t]));
      add_row(lp, RowTag::kLoadBalanceQ, eq(std::move(terms_q), net.demand_q[b][t]));
    }
  }

  const double m_const = big_m(net);
  for (int l = 0; l < n_lines; ++l) {
    const Line& line = net.lines[l];
    const int bf = net.bus_index(line.from_bus);
    const int bt = net.bus_index(line.to_bus);
    const double rr = 2.0 * line.r / net.base_mva;
    const double xx = 2.0 * line.x / net.base_mva;
    const bool avail = availability.get(l);
    const int pos = line.switchable ? net.switch_position(l) : -1;
    // A failed line is treated as open no matter what was commanded.
    const bool z_eff = line.switchable ? (config.closed.get(pos) && avail) : false;

    const std::vector<std::pair<int, double>> drop_pos = {
        {L.v(bf), -1.0}, {L.v(bt), 1.0}, {L.fp(l), rr}, {L.fq(l), xx}};
    const std::vector<std::pair<int, double>> drop_neg = {
        {L.v(bf), 1.0}, {L.v(bt), -1.0}, {L.fp(l), -rr}, {L.fq(l), -xx}};

    if (line.switchable) {
      const double gate = (1.0 - (z_eff ? 1.0 : 0.0)) * m_const;
      add_row(lp, RowTag::kVoltSwitchable, le(drop_pos, gate));
      add_row(lp, RowTag::kVoltSwitchable, le(drop_neg, gate));
      const double cap = line.f_max * (z_eff ? 1.0 : 0.0);
      add_row(lp, RowTag::kThermalSwP, le({{L.fp(l), 1.0}}, cap));
      add_row(lp, RowTag::kThermalSwP, le({{L.fp(l), -1.0}}, cap));
      add_row(lp, RowTag::kThermalSwQ, le({{L.fq(l), 1.0}}, cap));
      add_row(lp, RowTag::kThermalSwQ, le({{L.fq(l), -1.0}}, cap));
    }

    // A voltage pair only ties its endpoints while the line is energized: an
    // open switchable line must not do so even though it is still available,
    // so for switchable lines this gate uses the effective status too.
    const bool energized = line.switchable ? z_eff : avail;
    const double gate_av = (1.0 - (energized ? 1.0 : 0.0)) * m_const;
    add_row(lp, RowTag::kVoltAllLines, le(drop_pos, gate_av));
    add_row(lp, RowTag::kVoltAllLines, le(drop_neg, gate_av));
    const double cap_av = line.f_max * (avail ? 1.0 : 0.0);
    add_row(lp, RowTag::kThermalAllP, le({{L.fp(l), 1.0}}, cap_av));
    add_row(lp, RowTag::kThermalAllP, le({{L.fp(l), -1.0}}, cap_av));
    add_row(lp, RowTag::kThermalAvQ, le({{L.fq(l), 1.0}}, cap_av));
    add_row(lp, RowTag::kThermalAvQ, le({{L.fq(l), -1.0}}, cap_av));

    // Regular-octagon apparent-power cut, e in {1..4}; activated lazily.
    for (int e = 1; e <= 4; ++e) {
      const double cot_e = 1.0 / std::tan((0.5 - e) * M_PI / 4.0);
      const double cos_e = std::cos(e * M_PI / 4.0);
      const double sin_e = std::sin(e * M_PI / 4.0);
      const double rhs = sin_e * line.f_max - cot_e * cos_e * line.f_max;
      add_row(lp, RowTag::kOctagon,
              le({{L.fq(l), 1.0}, {L.fp(l), -cot_e}}, rhs, /*lazy=*/true));
      add_row(lp, RowTag::kOctagon,
              le({{L.fq(l), -1.0}, {L.fp(l), -cot_e}}, rhs, /*lazy=*/true));
    }
  }

  for (int b = 0; b < n_buses; ++b) {
    const Bus& bus = net.buses[b];
    if (bus.kind == BusKind::kSubstation)
      add_row(lp, RowTag::kVoltRef, eq({{L.v(b), 1.0}}, net.v_ref_sq));
    add_row(lp, RowTag::kVoltBox, le({{L.v(b), 1.0}}, bus.v_max_sq));
    add_row(lp, RowTag::kVoltBox, le({{L.v(b), -1.0}}, -bus.v_min_sq));
  }

  for (int s = 0; s < n_sub; ++s) {
    const Bus& bus = net.buses[net.substations[s]];
    add_row(lp, RowTag::kInjectionP, le({{L.p_sub(s), 1.0}}, bus.p_max_inj));
    add_row(lp, RowTag::kInjectionP, le({{L.p_sub(s), -1.0}}, 0.0));
    add_row(lp, RowTag::kInjectionQ, le({{L.q_sub(s), 1.0}}, bus.q_max_inj));
    add_row(lp, RowTag::kInjectionQ, le({{L.q_sub(s), -1.0}}, -bus.q_min_inj));
  }

  for (int b = 0; b < n_buses; ++b) {
    add_row(lp, RowTag::kShedCap, le({{L.dp_minus(b), 1.0}}, net.demand_p[b][t]));
    add_row(lp, RowTag::kShedCap, le({{L.dq_minus(b), 1.0}}, net.demand_q[b][t]));
  }

  return lp;
}

PfSolution solve_lp(const LpProblem& lp) {
  const lp::Solution raw = lp::solve(lp.problem);
  if (raw.status != lp::Status::kOptimal) {
    const char* what = raw.status == lp::Status::kInfeasible  ? "infeasible"
                       : raw.status == lp::Status::kUnbounded ? "unbounded"
                                                               : "iteration limit";
    throw SolverError(fmt::format(
        "dispatch LP reported {} after {} iterations ({} rows, {} vars); shedding keeps "
        "this LP feasible, so this is an internal error",
        what, raw.iterations, lp.problem.rows.size(), lp.problem.n_vars));
  }
  const VarLayout& L = lp.layout;
  PfSolution out;
  out.status = PfSolution::Status::kOptimal;
  out.objective = raw.objective;
  out.f_p.resize(L.n_lines);
  out.f_q.resize(L.n_lines);
  for (int l = 0; l < L.n_lines; ++l) {
    out.f_p[l] = raw.x[L.fp(l)];
    out.f_q[l] = raw.x[L.fq(l)];
  }
  out.v.resize(L.n_buses);
  for (int b = 0; b < L.n_buses; ++b) out.v[b] = raw.x[L.v(b)];
  out.p_sub.resize(L.n_sub);
  out.q_sub.resize(L.n_sub);
  for (int s = 0; s < L.n_sub; ++s) {
    out.p_sub[s] = raw.x[L.p_sub(s)];
    out.q_sub[s] = raw.x[L.q_sub(s)];
  }
  out.dp_plus.resize(L.n_buses);
  out.dp_minus.resize(L.n_buses);
  out.dq_plus.resize(L.n_buses);
  out.dq_minus.resize(L.n_buses);
  for (int b = 0; b < L.n_buses; ++b) {
    out.dp_plus[b] = raw.x[L.dp_plus(b)];
    out.dp_minus[b] = raw.x[L.dp_minus(b)];
    out.dq_plus[b] = raw.x[L.dq_plus(b)];
    out.dq_minus[b] = raw.x[L.dq_minus(b)];
  }
  return out;
}

namespace {

CacheKey make_key(const SwitchConfig& config, const Bitset& avail, int hour) {
  return CacheKey{config.closed.words(), avail.words(), hour};
}

}  // namespace

void SolutionCache::prepopulate(const Network& net, const std::vector<SwitchGroup>& groups,
                                int workers) {
  std::vector<SwitchConfig> configs;
  for_each_choice_tuple(groups, [&](const std::vector<int>& c) {
    configs.push_back(config_from_choices(net, groups, c));
  });
  prepopulate_for(net, configs, workers);
}

void SolutionCache::prepopulate_for(const Network& net, const std::vector<SwitchConfig>& configs,
                                    int workers) {
  const Bitset avail = full_availability(net);
  struct Job {
    SwitchConfig config;
    int hour;
  };
  std::vector<Job> jobs;
  jobs.reserve(configs.size() * static_cast<std::size_t>(net.horizon));
  for (const SwitchConfig& cfg : configs)
    for (int hour = 1; hour <= net.horizon; ++hour) jobs.push_back({cfg, hour});

  std::vector<PfSolution> results(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    results[i] = solve_lp(build_lp(net, jobs[i].config, avail, jobs[i].hour, 0.0));
  });

  map_.reserve(map_.size() + jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i)
    map_.emplace(make_key(jobs[i].config, avail, jobs[i].hour), std::move(results[i]));
}

const PfSolution* SolutionCache::find(const Network&, const SwitchConfig& config,
                                      const Bitset& avail, int hour) const {
  auto it = map_.find(make_key(config, avail, hour));
  return it == map_.end() ? nullptr : &it->second;
}

PfSolution solve_cached(const Network& net, const SwitchConfig& config, const Bitset& availability,
                        int hour, const SolutionCache& cache) {
  if (availability.all()) {
    if (const PfSolution* hit = cache.find(net, config, availability, hour)) return *hit;
  }
  return solve_lp(build_lp(net, config, availability, hour, 0.0));
}

}  // namespace psps
