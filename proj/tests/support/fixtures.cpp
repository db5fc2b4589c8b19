#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "psps/rng.hpp"

namespace psps::testing {

Bus substation(int id, double p_max, double q_min, double q_max) {
  Bus b;
  b.id = id;
  b.kind = BusKind::kSubstation;
  b.v_min_sq = 0.81;
  b.v_max_sq = 1.21;
  b.p_max_inj = p_max;
  b.q_min_inj = q_min;
  b.q_max_inj = q_max;
  return b;
}

Bus load_bus(int id) {
  Bus b;
  b.id = id;
  b.kind = BusKind::kLoad;
  b.v_min_sq = 0.81;
  b.v_max_sq = 1.21;
  return b;
}

Line line(int id, int from, int to, double f_max, bool switchable, bool wildfire, double r,
          double x) {
  Line l;
  l.id = id;
  l.from_bus = from;
  l.to_bus = to;
  l.r = r;
  l.x = x;
  l.f_max = f_max;
  l.switchable = switchable;
  l.wildfire_area = wildfire;
  return l;
}

Network make_network(std::vector<Bus> buses, std::vector<Line> lines, int horizon,
                     double demand_p, double demand_q) {
  Network net;
  net.buses = std::move(buses);
  net.lines = std::move(lines);
  net.horizon = horizon;
  net.base_mva = 10.0;
  net.v_ref_sq = 1.0;
  net.c_energy = 10.0;
  net.c_switch = 100.0;
  net.c_load_loss = 100.0;
  net.finalize();
  net.demand_p.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  net.demand_q.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  for (int b = 0; b < net.n_buses(); ++b) {
    if (net.buses[b].kind == BusKind::kSubstation) continue;
    for (int t = 0; t < horizon; ++t) {
      net.demand_p[b][t] = demand_p;
      net.demand_q[b][t] = demand_q;
    }
  }
  for (int l : net.wildfire_lines) {
    net.risk.gamma_peak[l] = 0.01;
    net.risk.beta_peak[l] = 0.29 / net.lines[l].f_max;
  }
  for (int h = 12; h <= std::min(20, horizon); ++h) net.risk.peak_hours.insert(h);
  if (net.risk.peak_hours.empty()) net.risk.peak_hours.insert(1);
  net.risk.offpeak_fraction = 0.2;
  validate_network(net);
  return net;
}

Network two_bus(double demand, double f_max) {
  return make_network({substation(0), load_bus(1)}, {line(0, 0, 1, f_max)},
                      /*horizon=*/4, demand, 0.25 * demand);
}

Network small_switchable() {
  std::vector<Bus> buses{substation(0)};
  for (int b = 1; b <= 4; ++b) buses.push_back(load_bus(b));
  std::vector<Line> lines{
      line(1, 0, 1, 12.0),
      line(2, 1, 2, 10.0, false, true),
      line(3, 3, 4, 8.0),
      line(10, 2, 3, 6.0, true, true),
      line(11, 1, 3, 6.0, true, false),
  };
  return make_network(std::move(buses), std::move(lines), /*horizon=*/6, 1.0, 0.2);
}

namespace {

struct Builder54 {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<int> fixed_id_pool;
  std::size_t next_fixed = 0;

  int take_fixed_id() { return fixed_id_pool[next_fixed++]; }

  void fixed(int from, int to, double f_max, bool wildfire = false) {
    lines.push_back(line(take_fixed_id(), from, to, f_max, false, wildfire, 0.008, 0.016));
  }
};

}  // namespace

Network synthetic54(int horizon) {
  // Eight fixed-line islands joined by five switchable groups:
  //   A{1,4..12} -- group {9,37} -- D{31..36}
  //   B{2,13..21} -- group {17,52} -- E{37..42} -- group {5,34} -- G{49..51}
  //   C{3,22..30} -- group {13,19,47} -- F{43..48} -- group {3,27} -- H{52..54}
  // The wildfire area covers D, G and the feeder spur of A that serves them.
  Builder54 bld;
  const std::vector<int> switchable_ids{3, 5, 9, 13, 17, 19, 27, 34, 37, 47, 52};
  for (int id = 1; id <= 57; ++id)
    if (std::find(switchable_ids.begin(), switchable_ids.end(), id) == switchable_ids.end())
      bld.fixed_id_pool.push_back(id);

  bld.buses.push_back(substation(1, 60.0, -40.0, 40.0));
  bld.buses.push_back(substation(2, 60.0, -40.0, 40.0));
  bld.buses.push_back(substation(3, 60.0, -40.0, 40.0));
  for (int b = 4; b <= 54; ++b) bld.buses.push_back(load_bus(b));

  // Island A: spine 1-4-5-6, wildfire spur 6-7-8 and 6-10, 10-11, 10-12.
  // Wildfire feeder capacities keep local-only loading under 10% so isolating
  // D leaves them safe even at the lowest step threshold in the sweeps.
  bld.fixed(1, 4, 30.0);
  bld.fixed(4, 5, 28.0);
  bld.fixed(5, 6, 30.0, true);
  bld.fixed(6, 7, 15.0, true);
  bld.fixed(7, 8, 15.0);
  bld.fixed(6, 10, 16.0, true);
  bld.fixed(10, 11, 15.0);
  bld.fixed(10, 12, 8.0);
  bld.fixed(4, 9, 8.0);
  // Island B: 2-13-...-21.
  bld.fixed(2, 13, 30.0);
  bld.fixed(13, 14, 25.0);
  bld.fixed(14, 15, 22.0);
  bld.fixed(15, 16, 12.0);
  bld.fixed(14, 17, 12.0);
  bld.fixed(17, 18, 10.0);
  bld.fixed(13, 19, 20.0);
  bld.fixed(19, 20, 18.0);
  bld.fixed(19, 21, 8.0);
  // Island C: 3-22-...-30.
  bld.fixed(3, 22, 30.0);
  bld.fixed(22, 23, 25.0);
  bld.fixed(23, 24, 22.0);
  bld.fixed(24, 25, 12.0);
  bld.fixed(23, 26, 14.0);
  bld.fixed(26, 27, 20.0);
  bld.fixed(27, 28, 10.0);
  bld.fixed(27, 29, 18.0);
  bld.fixed(28, 30, 8.0);
  // Island D (wildfire cluster), 31..36.
  bld.fixed(31, 32, 10.0, true);
  bld.fixed(32, 33, 10.0, true);
  bld.fixed(33, 34, 10.0, true);
  bld.fixed(32, 35, 8.0, true);
  bld.fixed(35, 36, 8.0, true);
  // Island E, 37..42.
  bld.fixed(37, 38, 14.0);
  bld.fixed(38, 39, 12.0);
  bld.fixed(39, 40, 10.0);
  bld.fixed(38, 41, 10.0);
  bld.fixed(41, 42, 8.0);
  // Island F, 43..48.
  bld.fixed(43, 44, 14.0);
  bld.fixed(44, 45, 12.0);
  bld.fixed(45, 46, 10.0);
  bld.fixed(44, 47, 10.0);
  bld.fixed(47, 48, 8.0);
  // Island G (wildfire cluster), 49..51.
  bld.fixed(49, 50, 8.0, true);
  bld.fixed(50, 51, 8.0, true);
  // Island H, 52..54.
  bld.fixed(52, 53, 8.0);
  bld.fixed(53, 54, 8.0);

  // Switchable groups (ids fixed by the published numbering).
  bld.lines.push_back(line(9, 8, 31, 12.0, true, true, 0.01, 0.02));    // A-D
  bld.lines.push_back(line(37, 11, 34, 12.0, true, true, 0.01, 0.02));  // A-D
  bld.lines.push_back(line(17, 15, 37, 12.0, true, false, 0.01, 0.02));  // B-E
  bld.lines.push_back(line(52, 20, 40, 12.0, true, false, 0.01, 0.02));  // B-E
  bld.lines.push_back(line(13, 24, 43, 12.0, true, false, 0.01, 0.02));  // C-F
  bld.lines.push_back(line(19, 27, 45, 12.0, true, false, 0.01, 0.02));  // C-F
  bld.lines.push_back(line(47, 29, 47, 12.0, true, false, 0.01, 0.02));  // C-F
  bld.lines.push_back(line(5, 39, 49, 10.0, true, true, 0.01, 0.02));    // E-G
  bld.lines.push_back(line(34, 42, 50, 10.0, true, true, 0.01, 0.02));   // E-G
  bld.lines.push_back(line(3, 46, 52, 10.0, true, false, 0.01, 0.02));   // F-H
  bld.lines.push_back(line(27, 48, 53, 10.0, true, false, 0.01, 0.02));  // F-H

  Network net;
  net.buses = std::move(bld.buses);
  net.lines = std::move(bld.lines);
  net.horizon = horizon;
  net.base_mva = 10.0;
  net.v_ref_sq = 1.0;
  net.c_energy = 10.0;
  net.c_switch = 100.0;
  net.c_load_loss = 100.0;
  net.finalize();

  // Diurnal profile peaking through the high-risk window.
  std::vector<double> profile(horizon);
  for (int t = 0; t < horizon; ++t) {
    const double hour = t + 1.0;
    profile[t] = 0.65 + 0.35 * std::exp(-0.5 * std::pow((hour - 16.0) / 5.0, 2.0));
  }
  const auto base_p = [](int bus) -> double {
    if (bus <= 3) return 0.0;
    if (bus >= 31 && bus <= 36) return 1.1;  // island D
    if (bus >= 49 && bus <= 51) return 1.0;  // island G
    return 0.4 + 0.05 * (bus % 5);
  };
  net.demand_p.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  net.demand_q.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  for (int b = 0; b < net.n_buses(); ++b) {
    const double base = base_p(net.buses[b].id);
    for (int t = 0; t < horizon; ++t) {
      net.demand_p[b][t] = base * profile[t];
      net.demand_q[b][t] = 0.25 * base * profile[t];
    }
  }

  for (int l : net.wildfire_lines) {
    net.risk.gamma_peak[l] = 0.002;
    net.risk.beta_peak[l] = 0.29 / net.lines[l].f_max;
  }
  for (int h = 12; h <= std::min(20, horizon); ++h) net.risk.peak_hours.insert(h);
  net.risk.offpeak_fraction = 0.2;

  validate_network(net);
  return net;
}

Network toy6(int horizon) {
  // Islands {1,2} {3,4} {5} {6}. Feeder pair 3/5 into the {3,4} cluster: line
  // 3 is a tight wildfire line, line 5 a roomy safe one. Bus 5 hangs off the
  // wildfire spine line 2, so serving it pushes that line past the half-load
  // threshold at peak; bus 6 is always safe to serve.
  std::vector<Bus> buses{substation(1, 30.0, -15.0, 15.0)};
  for (int b = 2; b <= 6; ++b) buses.push_back(load_bus(b));
  std::vector<Line> lines{
      line(1, 1, 2, 10.0),
      line(2, 3, 4, 5.0, false, true),
      line(3, 2, 4, 8.0, true, false),
      line(4, 3, 5, 2.5, true, false),
      line(5, 2, 3, 4.0, true, true),
      line(6, 3, 6, 2.0, true, false),
  };
  Network net;
  net.buses = std::move(buses);
  net.lines = std::move(lines);
  net.horizon = horizon;
  net.base_mva = 10.0;
  net.v_ref_sq = 1.0;
  net.c_energy = 10.0;
  net.c_switch = 100.0;
  net.c_load_loss = 100.0;
  net.finalize();

  std::vector<double> profile(horizon);
  for (int t = 0; t < horizon; ++t)
    profile[t] = 0.75 + 0.25 * std::exp(-0.5 * std::pow((t + 1.0 - 16.0) / 5.0, 2.0));
  const std::vector<std::pair<int, double>> base{{2, 1.0}, {3, 1.2}, {4, 1.0},
                                                 {5, 1.2}, {6, 0.4}};
  net.demand_p.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  net.demand_q.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  for (auto [bus_id, p] : base) {
    const int b = net.bus_index(bus_id);
    for (int t = 0; t < horizon; ++t) {
      net.demand_p[b][t] = p * profile[t];
      net.demand_q[b][t] = 0.25 * p * profile[t];
    }
  }
  for (int l : net.wildfire_lines) {
    net.risk.gamma_peak[l] = 0.005;
    net.risk.beta_peak[l] = 0.945 / net.lines[l].f_max;  // plateau 0.95 at capacity
  }
  // Constant risk: an overloaded wildfire line dies almost at once, so the
  // cost of a risky feeder choice is visible within a step or two.
  for (int h = 12; h <= std::min(20, horizon); ++h) net.risk.peak_hours.insert(h);
  if (net.risk.peak_hours.empty()) net.risk.peak_hours.insert(1);
  net.risk.offpeak_fraction = 1.0;
  validate_network(net);
  return net;
}

namespace {

struct IslandBuilder {
  std::vector<Bus>& buses;
  std::vector<Line>& lines;
  std::vector<int> fixed_pool;
  std::size_t next_fixed = 0;

  void fixed(int from, int to, double f_max, bool wildfire = false) {
    lines.push_back(line(fixed_pool[next_fixed++], from, to, f_max, false, wildfire, 0.006,
                         0.012));
  }

  // Chain first..last hanging off root, with a trunk capacity tapering to tip.
  void chain(int root, int first, int last, double trunk_f, bool wildfire = false) {
    int prev = root;
    for (int b = first; b <= last; ++b) {
      const double span = static_cast<double>(last - first + 1);
      const double f = trunk_f * (1.0 - 0.5 * (b - first) / span);
      fixed(prev, b, f, wildfire);
      prev = b;
    }
  }
};

}  // namespace

Network synthetic138(int horizon) {
  // Eight fixed islands joined by five groups whose member ids match the
  // published closed/open sets:
  //   {37,131}: A-D   {110,140}: B-E   {2,136,141}: C-F
  //   {18,137,142}: B-G   {30,138}: C-H
  // The wildfire area is the D cluster, its feeders out of island A, and the
  // A spur those feeders hang from.
  const std::vector<int> switchable_ids{2, 18, 30, 37, 110, 131, 136, 137, 138, 140, 141, 142};
  std::vector<Bus> buses{substation(1, 120.0, -80.0, 80.0), substation(2, 120.0, -80.0, 80.0),
                         substation(3, 120.0, -80.0, 80.0)};
  for (int b = 4; b <= 138; ++b) buses.push_back(load_bus(b));
  std::vector<Line> lines;
  IslandBuilder bld{buses, lines, {}, 0};
  for (int id = 1; id <= 142; ++id)
    if (std::find(switchable_ids.begin(), switchable_ids.end(), id) == switchable_ids.end())
      bld.fixed_pool.push_back(id);

  // Island A: sub 1, buses 4..43 (41 buses). Wildfire spur 40..43.
  bld.chain(1, 4, 15, 40.0);
  bld.chain(5, 16, 27, 25.0);
  bld.chain(6, 28, 39, 25.0);
  bld.fixed(7, 40, 30.0, true);  // spur head: local load stays under a tenth
  bld.fixed(40, 41, 28.0, true);
  bld.fixed(40, 42, 28.0);
  bld.fixed(42, 43, 14.0);
  // Island B: sub 2, buses 44..78 (36 buses).
  bld.chain(2, 44, 55, 40.0);
  bld.chain(45, 56, 66, 25.0);
  bld.chain(46, 67, 78, 25.0);
  // Island C: sub 3, buses 79..108 (31 buses).
  bld.chain(3, 79, 90, 40.0);
  bld.chain(80, 91, 100, 25.0);
  bld.chain(81, 101, 108, 25.0);
  // Island D (wildfire cluster): buses 109..118.
  bld.chain(109, 110, 118, 12.0, true);
  // Island E: buses 119..126.
  bld.chain(119, 120, 126, 12.0);
  // Island F: buses 127..132.
  bld.chain(127, 128, 132, 10.0);
  // Island G: buses 133..135.
  bld.chain(133, 134, 135, 8.0);
  // Island H: buses 136..138.
  bld.chain(136, 137, 138, 8.0);

  // Switchable groups.
  lines.push_back(line(37, 41, 109, 14.0, true, true, 0.008, 0.016));    // A-D
  lines.push_back(line(131, 43, 112, 14.0, true, true, 0.008, 0.016));   // A-D
  lines.push_back(line(110, 56, 119, 14.0, true, false, 0.008, 0.016));  // B-E
  lines.push_back(line(140, 67, 121, 14.0, true, false, 0.008, 0.016));  // B-E
  lines.push_back(line(2, 91, 127, 12.0, true, false, 0.008, 0.016));    // C-F
  lines.push_back(line(136, 101, 129, 12.0, true, false, 0.008, 0.016)); // C-F
  lines.push_back(line(141, 104, 131, 12.0, true, false, 0.008, 0.016)); // C-F
  lines.push_back(line(18, 57, 133, 8.0, true, false, 0.008, 0.016));    // B-G
  lines.push_back(line(137, 70, 134, 8.0, true, false, 0.008, 0.016));   // B-G
  lines.push_back(line(142, 77, 135, 8.0, true, false, 0.008, 0.016));   // B-G
  lines.push_back(line(30, 92, 136, 8.0, true, false, 0.008, 0.016));    // C-H
  lines.push_back(line(138, 106, 137, 8.0, true, false, 0.008, 0.016));  // C-H

  Network net;
  net.buses = std::move(buses);
  net.lines = std::move(lines);
  net.horizon = horizon;
  net.base_mva = 10.0;
  net.v_ref_sq = 1.0;
  net.c_energy = 200.0;
  net.c_switch = 200.0;
  net.c_load_loss = 2000.0;
  net.finalize();

  std::vector<double> profile(horizon);
  for (int t = 0; t < horizon; ++t)
    profile[t] = 0.65 + 0.35 * std::exp(-0.5 * std::pow((t + 1.0 - 16.0) / 5.0, 2.0));
  const auto base_p = [](int bus) -> double {
    if (bus <= 3) return 0.0;
    if (bus >= 109 && bus <= 118) return 0.9;  // island D
    if (bus >= 40 && bus <= 43) return 0.5;    // the A spur
    return 0.3 + 0.04 * (bus % 6);
  };
  net.demand_p.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  net.demand_q.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  for (int b = 0; b < net.n_buses(); ++b) {
    const double base = base_p(net.buses[b].id);
    for (int t = 0; t < horizon; ++t) {
      net.demand_p[b][t] = base * profile[t];
      net.demand_q[b][t] = 0.25 * base * profile[t];
    }
  }
  for (int l : net.wildfire_lines) {
    net.risk.gamma_peak[l] = 0.002;
    net.risk.beta_peak[l] = 0.29 / net.lines[l].f_max;
  }
  for (int h = 12; h <= std::min(20, horizon); ++h) net.risk.peak_hours.insert(h);
  net.risk.offpeak_fraction = 0.2;
  validate_network(net);
  return net;
}

Network random_radial(std::uint64_t seed, int n_buses, int horizon) {
  Rng rng(seed, {0xbadcafeull});
  std::vector<Bus> buses{substation(1, 40.0, -20.0, 20.0)};
  for (int b = 2; b <= n_buses; ++b) buses.push_back(load_bus(b));
  std::vector<Line> lines;
  int next_id = 1;
  for (int b = 2; b <= n_buses; ++b) {
    const int parent = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(b - 1)));
    lines.push_back(line(next_id++, parent, b, 2.0 + 4.0 * rng.uniform(), false,
                         rng.uniform() < 0.3, 0.005 + 0.02 * rng.uniform(),
                         0.01 + 0.03 * rng.uniform()));
  }
  // A couple of switchable chords exercise the z gating.
  const int chords = n_buses >= 5 ? 2 : 1;
  for (int c = 0; c < chords; ++c) {
    int a = 1 + static_cast<int>(rng.below(n_buses));
    int b = 1 + static_cast<int>(rng.below(n_buses));
    if (a == b) b = a == n_buses ? 1 : a + 1;
    lines.push_back(line(next_id++, a, b, 2.0 + 3.0 * rng.uniform(), true,
                         rng.uniform() < 0.5, 0.01, 0.02));
  }

  Network net;
  net.buses = std::move(buses);
  net.lines = std::move(lines);
  net.horizon = horizon;
  net.base_mva = 10.0;
  net.v_ref_sq = 1.0;
  net.c_energy = 10.0;
  net.c_switch = 100.0;
  net.c_load_loss = 100.0;
  net.finalize();
  net.demand_p.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  net.demand_q.assign(net.n_buses(), std::vector<double>(horizon, 0.0));
  for (int b = 0; b < net.n_buses(); ++b) {
    if (net.buses[b].kind == BusKind::kSubstation) continue;
    for (int t = 0; t < horizon; ++t) {
      net.demand_p[b][t] = 0.5 + 1.5 * rng.uniform();
      net.demand_q[b][t] = 0.1 + 0.4 * rng.uniform();
    }
  }
  for (int l : net.wildfire_lines) {
    net.risk.gamma_peak[l] = 0.02;
    net.risk.beta_peak[l] = 0.2 / net.lines[l].f_max;
  }
  net.risk.peak_hours.insert(1);
  net.risk.offpeak_fraction = 0.5;
  validate_network(net);
  return net;
}

Scenario make_scenario(Network net, FailureModel model, std::vector<int> initial_closed,
                       std::uint64_t seed) {
  Scenario sc;
  sc.name = "inline-test";
  sc.network = std::move(net);
  sc.failure_model = std::move(model);
  sc.initial_closed_ids = std::move(initial_closed);
  sc.seed = seed;
  sc.fingerprint = scenario_fingerprint(sc);
  return sc;
}

std::string data_path(const std::string& name) {
  return std::string(PSPS_DATA_DIR) + "/" + name;
}

}  // namespace psps::testing
