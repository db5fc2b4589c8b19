#pragma once

#include <string>
#include <vector>

#include "psps/environment.hpp"
#include "psps/grid.hpp"

namespace psps::testing {

/// Bus/line builders so tests can assemble networks without JSON files.
Bus substation(int id, double p_max = 100.0, double q_min = -100.0, double q_max = 100.0);
Bus load_bus(int id);
Line line(int id, int from, int to, double f_max, bool switchable = false,
          bool wildfire = false, double r = 0.01, double x = 0.02);

/// Flat-demand network: every load bus draws (p, q) at every hour.
Network make_network(std::vector<Bus> buses, std::vector<Line> lines, int horizon = 4,
                     double demand_p = 1.0, double demand_q = 0.25);

/// 1 substation (bus 0), 1 load (bus 1), one fixed line between them.
Network two_bus(double demand = 5.0, double f_max = 10.0);

/// Substation 0; loads 1..4 on a fixed spine; two switchable lines 10, 11
/// forming one group (both bridge the same pair of fixed islands), wildfire
/// flags on line 10 and the spine line 2.
Network small_switchable();

/// Group structure of sizes (2,2,3,2,2) using the published line numbering;
/// 54 buses, 57 lines, 11 switchable, 14 wildfire-area.
Network synthetic54(int horizon = 24);

/// Six-bus teaching case: 12 feasible topologies, one risky/safe feeder pair
/// into the load cluster and a marginal spur behind a wildfire line.
Network toy6(int horizon = 24);

/// 138 buses, 142 lines, 12 switchable in groups (2,2,3,3,2) matching the
/// published closed/open sets, 13 wildfire-area lines.
Network synthetic138(int horizon = 24);

/// Deterministic pseudo-random radial test network for oracle comparisons:
/// a random spanning tree over n_buses plus shed-prone demands.
Network random_radial(std::uint64_t seed, int n_buses, int horizon = 2);

Scenario make_scenario(Network net, FailureModel model, std::vector<int> initial_closed = {},
                       std::uint64_t seed = 1);

std::string data_path(const std::string& name);

}  // namespace psps::testing
