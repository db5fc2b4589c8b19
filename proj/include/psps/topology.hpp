#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "psps/common.hpp"
#include "psps/grid.hpp"

namespace psps {

/// Commanded on/off assignment over switchable lines. Bit i corresponds to
/// Network::switchable_lines[i]; 1 = closed.
struct SwitchConfig {
  Bitset closed;

  bool operator==(const SwitchConfig& o) const { return closed == o.closed; }
};

/// A set of switchable lines that pairwise form a loop with the fixed lines:
/// at most one of them may be closed at a time. Lines are network line
/// indices, sorted ascending (hence by id).
struct SwitchGroup {
  std::vector<int> lines;

  int n_configs() const { return static_cast<int>(lines.size()) + 1; }
};

/// Splits the switchable lines into independent at-most-one-closed groups.
///
/// Groups are sorted by their smallest member; members sorted ascending.
/// Throws StructuralError when the loop structure does not decompose: a
/// switchable line that already forms a loop with the fixed lines alone, or
/// loops that overlap across groups.
std::vector<SwitchGroup> decompose_groups(const Network& net);

/// Product over groups of (|lines| + 1); 1 for an empty list.
std::uint64_t count_topologies(const std::vector<SwitchGroup>& groups);

/// Builds the configuration for one choice per group: k = 0 opens every line
/// in the group, k = j (1-based) closes the group's j-th line.
SwitchConfig config_from_choices(const Network& net, const std::vector<SwitchGroup>& groups,
                                 const std::vector<int>& choices);

/// True iff the available lines that are fixed or (switchable and closed)
/// contain no cycle. Connectivity is not required.
bool is_radial(const Network& net, const SwitchConfig& config, const Bitset& availability);

/// Invokes fn with every choice tuple, in lexicographic order.
void for_each_choice_tuple(const std::vector<SwitchGroup>& groups,
                           const std::function<void(const std::vector<int>&)>& fn);

/// Resolves an explicit closed-line id set to one choice per group. Throws
/// ConfigError if a line is unknown/not switchable or two closed lines share
/// a group.
std::vector<int> choices_from_closed_ids(const Network& net,
                                         const std::vector<SwitchGroup>& groups,
                                         const std::vector<int>& closed_line_ids);

Bitset full_availability(const Network& net);

}  // namespace psps
