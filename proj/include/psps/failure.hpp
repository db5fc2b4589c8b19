#pragma once

#include <utility>
#include <vector>

#include "psps/common.hpp"
#include "psps/grid.hpp"
#include "psps/rng.hpp"

namespace psps {

enum class FailureKind { kLinear, kStep, kCustomCurve };

/// Flow-dependent ignition/failure probability model.
///
/// linear: clamp(gamma + beta * |f|, 0, 1)
/// step:   gamma below tau * f_max (inclusive), clamp(gamma + beta * f_max, 0, 1) above
/// custom: piecewise-linear table over the flow fraction |f| / f_max,
///         left-continuous at knots; a duplicated abscissa expresses an exact
///         jump. The custom table ignores (gamma, beta) and is not scaled by
///         the peak/off-peak schedule.
struct FailureModel {
  FailureKind kind = FailureKind::kLinear;
  std::vector<double> tau;        // per line; used by the step kind
  double background_prob = 0.0;   // lines outside the wildfire area
  std::vector<std::pair<double, double>> curve;  // (flow fraction, probability), sorted

  static FailureModel linear();
  static FailureModel step(const Network& net, double tau_value);
  static FailureModel custom(std::vector<std::pair<double, double>> knots);
};

/// Failure probability of one line at the given |flow|. gamma/beta are the
/// effective hour values from the risk schedule. Result always lies in [0, 1].
double failure_prob(const FailureModel& model, int line_idx, double flow_abs, double f_max,
                    double gamma, double beta);

using Availability = Bitset;

/// One Bernoulli draw per available line; failed lines stay failed. Wildfire
/// lines use the model at their |f_p|, other lines the background probability.
/// line_streams holds one keyed stream per line so the outcome is independent
/// of iteration order; exactly one draw per available line is consumed.
Availability sample_transitions(const Availability& availability,
                                const std::vector<double>& f_p, const FailureModel& model,
                                const Network& net, const RiskParams& risk,
                                std::vector<Rng>& line_streams);

}  // namespace psps
