#include "psps/failure.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace psps {

FailureModel FailureModel::linear() {
  FailureModel m;
  m.kind = FailureKind::kLinear;
  return m;
}

FailureModel FailureModel::step(const Network& net, double tau_value) {
  if (tau_value < 0.0 || tau_value > 1.0)
    throw ConfigError(fmt::format("step threshold tau = {} outside [0, 1]", tau_value));
  FailureModel m;
  m.kind = FailureKind::kStep;
  m.tau.assign(net.lines.size(), tau_value);
  return m;
}

FailureModel FailureModel::custom(std::vector<std::pair<double, double>> knots) {
  if (knots.empty()) throw ConfigError("custom failure curve needs at least one knot");
  if (!std::is_sorted(knots.begin(), knots.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; }))
    throw ConfigError("custom failure curve knots must be sorted by flow fraction");
  FailureModel m;
  m.kind = FailureKind::kCustomCurve;
  m.curve = std::move(knots);
  return m;
}

namespace {

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

double curve_value(const std::vector<std::pair<double, double>>& knots, double x) {
  if (x > knots.back().first) return knots.back().second;
  // Largest knot strictly below x; interpolate up to the first knot at or
  // above it. Duplicated abscissae make the value left-continuous at jumps.
  int j = -1;
  for (int i = 0; i < static_cast<int>(knots.size()); ++i) {
    if (knots[i].first < x)
      j = i;
    else
      break;
  }
  if (j < 0) return knots.front().second;
  const auto [x0, p0] = knots[j];
  const auto [x1, p1] = knots[j + 1];
  return p0 + (p1 - p0) * (x - x0) / (x1 - x0);
}

}  // namespace

double failure_prob(const FailureModel& model, int line_idx, double flow_abs, double f_max,
                    double gamma, double beta) {
  switch (model.kind) {
    case FailureKind::kLinear:
      return clamp01(gamma + beta * flow_abs);
    case FailureKind::kStep: {
      const double tau = model.tau.empty() ? 1.0 : model.tau[line_idx];
      if (flow_abs > tau * f_max) return clamp01(gamma + beta * f_max);
      return clamp01(gamma);
    }
    case FailureKind::kCustomCurve:
      return clamp01(curve_value(model.curve, f_max > 0.0 ? flow_abs / f_max : 0.0));
  }
  return 0.0;
}

Availability sample_transitions(const Availability& availability,
                                const std::vector<double>& f_p, const FailureModel& model,
                                const Network& net, const RiskParams& risk,
                                std::vector<Rng>& line_streams) {
  Availability next = availability;
  for (int l = 0; l < net.n_lines(); ++l) {
    if (!availability.get(l)) continue;  // failures absorb for the rest of the episode
    const double p =
        net.lines[l].wildfire_area
            ? failure_prob(model, l, std::abs(f_p[l]), net.lines[l].f_max, risk.gamma[l],
                           risk.beta[l])
            : model.background_prob;
    const double u = line_streams[l].uniform();
    if (u < p) next.set(l, false);
  }
  return next;
}

}  // namespace psps
