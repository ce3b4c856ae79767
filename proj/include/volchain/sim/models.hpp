#pragma once

#include <deque>
#include <random>
#include <span>

#include "volchain/domain/types.hpp"

namespace volchain::sim {

/// What a device knows about the path to it when it estimates a task.
struct NetState {
  double hops = 1.0;
  double hop_latency_s = 0.0;
  double bandwidth_bps = 54e6;
  double block_bits = 1e6;
  std::size_t concurrent_transfers = 0;  // other transfers sharing the access point
  double backlog_s = 0.0;                // queued work ahead of this task
};

/// Input transfer time: per-hop latency plus serialization of `alpha`
/// blocks at a fair share of the access point bandwidth.
double transfer_time(double alpha, const NetState& net);

struct QualityModel {
  double base = 0.6;
  double span = 0.4;
};

/// base + span x comp_char(capabilities, required capability + characteristics).
double base_quality(const Participant& p, const Task& t, const QualityModel& model, const RewardParams& params);

/// Raw time and energy figures behind an outcome.
struct Prediction {
  double transfer_s = 0.0;
  double wait_s = 0.0;
  double compute_s = 0.0;
  double compute_j = 0.0;
  double radio_j = 0.0;
  ActualOutcome outcome;
};

/// Fills the normalized outcome fields from the raw figures: completion
/// time is transfer + wait + compute, workload is compute time over the
/// deadline (capped at 1), energy is E / (E + alpha x zeta).
void normalize(Prediction& pr, const Task& t);

/// Deterministic estimate of running `t` on `p`. Throws ContractViolation
/// when p lacks the required capability.
Prediction predict_outcome(const Participant& p, const Task& t, const NetState& net, const QualityModel& quality,
                           const RewardParams& params);

struct NoiseModel {
  double time_sigma = 0.1;
  double energy_sigma = 0.1;
  double quality_sigma = 0.05;
};

/// Draws a realization around a prediction: compute time and energy scale
/// by independent lognormal factors exp(N(0, sigma)), quality moves by a
/// gaussian truncated to [0,1]. With every sigma at 0 the prediction is
/// returned unchanged.
Prediction realize_outcome(const Prediction& predicted, const Task& t, const NoiseModel& noise, std::mt19937_64& rng);

struct Mover {
  Position position;
  Position waypoint;
  double speed = 1.0;
};

struct MobilityArea {
  double width = 1000.0;
  double height = 1000.0;
  double speed_min = 1.0;
  double speed_max = 2.0;
};

Position random_point(const MobilityArea& area, std::mt19937_64& rng);

/// Random waypoint: every mover heads for its waypoint at its speed; a mover
/// that arrives stops there for the rest of the step and draws a new
/// waypoint and speed. Throws ContractViolation unless dt > 0.
void step_mobility(std::span<Mover> movers, double dt, const MobilityArea& area, std::mt19937_64& rng);

struct Invitation {
  double predicted_gain = 0.0;
  bool preference_match = true;
  bool last_resort = false;
  bool threat = false;
};

struct ParticipationPolicy {
  std::size_t gain_window = 5;
  double gain_floor = -0.5;
  double loss_tolerance = 0.5;
};

/// Moving average of the most recent `window` realized gains; 0 when none.
double recent_gain(const std::deque<double>& history, std::size_t window);

/// Whether a device with the given disposition takes an invitation.
/// Cooperative devices take positive-gain work while their recent gains stay
/// above the floor; partially cooperative ones also need a preference
/// match; neutral ones only answer a last-resort call; highly cooperative
/// ones accept anything without a threat up to a bounded loss; the two
/// non-cooperative dispositions always decline.
bool participation_decision(const Participant& p, const Invitation& inv, const ParticipationPolicy& policy);

}  // namespace volchain::sim
