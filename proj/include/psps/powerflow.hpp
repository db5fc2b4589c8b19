#pragma once

#include <unordered_map>
#include <vector>

#include "psps/common.hpp"
#include "psps/grid.hpp"
#include "psps/simplex.hpp"
#include "psps/topology.hpp"

namespace psps {

/// Families of the stage-t dispatch LP, one tag per row (used by tests and
/// diagnostics; the solver itself only reads the row data).
enum class RowTag {
  kSubBalanceP,
  kSubBalanceQ,
  kLoadBalanceP,
  kLoadBalanceQ,
  kVoltSwitchable,   // big-M pair gated by the (effective) switch status
  kVoltAllLines,     // big-M pair gated by availability
  kVoltRef,          // v fixed at the substation reference
  kVoltBox,
  kThermalSwP,
  kThermalSwQ,
  kThermalAllP,      // availability gate on active flow
  kThermalAvQ,       // availability gate on reactive flow (see build_lp notes)
  kOctagon,          // apparent-power half-planes, e in {1..4}, both signs
  kInjectionP,
  kInjectionQ,
  kShedCap,          // shed bounded by demand
};

/// Dense index layout of the dispatch LP variables.
struct VarLayout {
  int n_lines = 0, n_buses = 0, n_sub = 0;

  int n_vars() const { return 2 * n_lines + n_buses + 2 * n_sub + 4 * n_buses; }
  int fp(int l) const { return 2 * l; }
  int fq(int l) const { return 2 * l + 1; }
  int v(int b) const { return 2 * n_lines + b; }
  int p_sub(int s) const { return 2 * n_lines + n_buses + 2 * s; }
  int q_sub(int s) const { return 2 * n_lines + n_buses + 2 * s + 1; }
  int shed_base() const { return 2 * n_lines + n_buses + 2 * n_sub; }
  int dp_plus(int b) const { return shed_base() + 4 * b; }
  int dp_minus(int b) const { return shed_base() + 4 * b + 1; }
  int dq_plus(int b) const { return shed_base() + 4 * b + 2; }
  int dq_minus(int b) const { return shed_base() + 4 * b + 3; }
};

struct LpProblem {
  lp::Problem problem;
  VarLayout layout;
  std::vector<RowTag> row_tags;  // parallel to problem.rows
};

struct PfSolution {
  enum class Status { kOptimal, kInfeasible };
  Status status = Status::kInfeasible;
  std::vector<double> f_p, f_q;  // per line, MW / MVAr
  std::vector<double> v;         // per bus, per-unit^2
  std::vector<double> p_sub, q_sub;                          // per substation
  std::vector<double> dp_plus, dp_minus, dq_plus, dq_minus;  // per bus
  double objective = 0.0;  // LP value: energy + load-loss cost (+ any constant)

  double total_p_sub() const;
  double total_shed_terms() const;  // sum of all four delta-D families
};

/// Uniform big-M constant: an upper bound on |voltage drop mismatch| over the
/// variable boxes, so a gated row can never bind.
double big_m(const Network& net);

/// Builds the hour-t dispatch LP.
///
/// Constraint families follow the linearized-AC formulation; two artifact
/// conventions apply. (1) A failed line is open regardless of its commanded
/// switch status: switchable-line gates use z AND availability. (2) On top of
/// the availability gate on active flow, reactive flow gets the same gate
/// (kThermalAvQ) so a failed line carries no flow of either kind; the paper
/// family bounds only f_p. Voltage-drop terms are scaled by 1/base_mva since
/// flows are in MW while impedances are per-unit.
LpProblem build_lp(const Network& net, const SwitchConfig& config, const Bitset& availability,
                   int hour, double switch_ops_cost);

/// Solves the LP. Deterministic: identical input yields a bit-identical
/// solution. Throws SolverError if the solver fails (shedding keeps the
/// dispatch LP feasible, so failure means an internal problem).
PfSolution solve_lp(const LpProblem& lp);

struct CacheKey {
  std::vector<std::uint64_t> closed;
  std::vector<std::uint64_t> avail;
  int hour = 0;
  bool operator==(const CacheKey& o) const {
    return hour == o.hour && closed == o.closed && avail == o.avail;
  }
};

struct CacheKeyHash {
  std::size_t operator()(const CacheKey& k) const {
    std::uint64_t h = 0x2545f4914f6cdd1dull ^ static_cast<std::uint64_t>(k.hour);
    for (auto w : k.closed) h = (h ^ w) * 0x100000001b3ull;
    for (auto w : k.avail) h = (h ^ w) * 0x100000001b3ull;
    return static_cast<std::size_t>(h);
  }
};

/// Pre-solved dispatch solutions for every enumerated topology and hour at
/// full availability. Read-only after prepopulate; safe for concurrent reads.
/// Cached objectives are dispatch-only (switching cost is added by the caller
/// from the commanded operations, it is not part of the cache key).
class SolutionCache {
 public:
  /// Every enumerated topology x every hour.
  void prepopulate(const Network& net, const std::vector<SwitchGroup>& groups, int workers);
  /// Just the given configurations x every hour (enough for fixed policies).
  void prepopulate_for(const Network& net, const std::vector<SwitchConfig>& configs,
                       int workers);
  const PfSolution* find(const Network& net, const SwitchConfig& config, const Bitset& avail,
                         int hour) const;
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<CacheKey, PfSolution, CacheKeyHash> map_;
};

/// Cache hit for full availability, fresh deterministic solve otherwise.
PfSolution solve_cached(const Network& net, const SwitchConfig& config, const Bitset& availability,
                        int hour, const SolutionCache& cache);

}  // namespace psps
