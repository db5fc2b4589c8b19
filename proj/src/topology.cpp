#include "psps/topology.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

namespace psps {

namespace {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), rank_(n, 0) {
    for (int i = 0; i < n; ++i) parent_[i] = i;
  }

  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }

  /// Returns false if a and b were already connected (the edge closes a cycle).
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

}  // namespace

std::vector<SwitchGroup> decompose_groups(const Network& net) {
  UnionFind base(net.n_buses());
  for (const Line& l : net.lines) {
    if (l.switchable) continue;
    if (!base.merge(net.bus_index(l.from_bus), net.bus_index(l.to_bus)))
      throw StructuralError(fmt::format(
          "fixed (non-switchable) lines already contain a cycle through line {}; no "
          "switch configuration can be radial",
          l.id));
  }

  // Map each switchable line to the pair of fixed-line components it joins.
  // Lines joining the same pair form one at-most-one-closed group.
  std::map<std::pair<int, int>, std::vector<int>> by_component_pair;
  for (int li : net.switchable_lines) {
    const Line& l = net.lines[li];
    int a = base.find(net.bus_index(l.from_bus));
    int b = base.find(net.bus_index(l.to_bus));
    if (a == b)
      throw StructuralError(fmt::format(
          "switchable line {} forms a loop with the fixed lines alone; closing it can "
          "never be radial, so the independent-group decomposition does not apply",
          l.id));
    if (a > b) std::swap(a, b);
    by_component_pair[{a, b}].push_back(li);
  }

  // Distinct component pairs must themselves form a forest; otherwise closing
  // one line from each of the groups around the cycle creates a loop even
  // though every group constraint is honored.
  UnionFind meta(net.n_buses());
  for (const auto& [pair, lines] : by_component_pair) {
    if (!meta.merge(pair.first, pair.second)) {
      std::string ids;
      for (int li : lines) ids += (ids.empty() ? "" : ", ") + std::to_string(net.lines[li].id);
      throw StructuralError(fmt::format(
          "switchable-line loops overlap: the group containing line(s) {} closes a cycle "
          "together with other groups, violating the independent-group assumption",
          ids));
    }
  }

  std::vector<SwitchGroup> groups;
  groups.reserve(by_component_pair.size());
  for (auto& [pair, lines] : by_component_pair) {
    std::sort(lines.begin(), lines.end());
    groups.push_back(SwitchGroup{std::move(lines)});
  }
  std::sort(groups.begin(), groups.end(),
            [](const SwitchGroup& a, const SwitchGroup& b) { return a.lines[0] < b.lines[0]; });
  return groups;
}

std::uint64_t count_topologies(const std::vector<SwitchGroup>& groups) {
  std::uint64_t total = 1;
  for (const SwitchGroup& g : groups) {
    const auto n = static_cast<std::uint64_t>(g.n_configs());
    if (total > UINT64_MAX / n)
      throw StructuralError("topology count overflows 64 bits");
    total *= n;
  }
  return total;
}

SwitchConfig config_from_choices(const Network& net, const std::vector<SwitchGroup>& groups,
                                 const std::vector<int>& choices) {
  if (choices.size() != groups.size())
    throw ConfigError(fmt::format("expected {} group choices, got {}", groups.size(),
                                  choices.size()));
  SwitchConfig cfg{Bitset(net.switchable_lines.size())};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const int k = choices[g];
    if (k < 0 || k >= groups[g].n_configs())
      throw ConfigError(fmt::format("choice {} out of range [0, {}) for group {}", k,
                                    groups[g].n_configs(), g));
    if (k == 0) continue;  // all lines in the group stay open
    const int line_idx = groups[g].lines[k - 1];
    cfg.closed.set(net.switch_position(line_idx), true);
  }
  return cfg;
}

bool is_radial(const Network& net, const SwitchConfig& config, const Bitset& availability) {
  UnionFind uf(net.n_buses());
  for (int li = 0; li < net.n_lines(); ++li) {
    if (!availability.get(li)) continue;
    const Line& l = net.lines[li];
    if (l.switchable && !config.closed.get(net.switch_position(li))) continue;
    if (!uf.merge(net.bus_index(l.from_bus), net.bus_index(l.to_bus))) return false;
  }
  return true;
}

void for_each_choice_tuple(const std::vector<SwitchGroup>& groups,
                           const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> choices(groups.size(), 0);
  for (;;) {
    fn(choices);
    std::size_t g = groups.size();
    while (g > 0) {
      --g;
      if (++choices[g] < groups[g].n_configs()) break;
      choices[g] = 0;
      if (g == 0) return;
    }
    if (groups.empty()) return;
  }
}

std::vector<int> choices_from_closed_ids(const Network& net,
                                         const std::vector<SwitchGroup>& groups,
                                         const std::vector<int>& closed_line_ids) {
  std::vector<int> choices(groups.size(), 0);
  for (int id : closed_line_ids) {
    const int li = net.line_index(id);
    if (!net.lines[li].switchable)
      throw ConfigError(fmt::format("line {} is not switchable", id));
    bool placed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto it = std::find(groups[g].lines.begin(), groups[g].lines.end(), li);
      if (it == groups[g].lines.end()) continue;
      if (choices[g] != 0)
        throw ConfigError(fmt::format(
            "closed set selects two lines from one at-most-one-closed group (line {})", id));
      choices[g] = static_cast<int>(it - groups[g].lines.begin()) + 1;
      placed = true;
      break;
    }
    if (!placed)
      throw ConfigError(fmt::format("switchable line {} not found in any group", id));
  }
  return choices;
}

Bitset full_availability(const Network& net) {
  return Bitset(static_cast<std::size_t>(net.n_lines()), true);
}

}  // namespace psps
