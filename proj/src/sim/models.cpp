#include "volchain/sim/models.hpp"

#include <algorithm>
#include <cmath>

#include "volchain/domain/errors.hpp"
#include "volchain/similarity/similarity.hpp"

namespace volchain::sim {

double transfer_time(double alpha, const NetState& net) {
  const double share = net.bandwidth_bps / (1.0 + static_cast<double>(net.concurrent_transfers));
  return net.hops * net.hop_latency_s + alpha * net.block_bits / share;
}

double base_quality(const Participant& p, const Task& t, const QualityModel& model, const RewardParams& params) {
  const auto wanted = t.required_capability.united(t.characteristics);
  return model.base + model.span * similarity::comp_char(p.capabilities, wanted, params);
}

void normalize(Prediction& pr, const Task& t) {
  auto& o = pr.outcome;
  o.completion_time = pr.transfer_s + pr.wait_s + pr.compute_s;
  o.workload_delta = t.deadline_gamma > 0.0 ? std::min(1.0, pr.compute_s / t.deadline_gamma) : 1.0;
  const double energy = pr.compute_j + pr.radio_j;
  const double nominal = t.size_alpha * t.energy_zeta;
  o.energy_used = energy + nominal > 0.0 ? energy / (energy + nominal) : 0.0;
}

Prediction predict_outcome(const Participant& p, const Task& t, const NetState& net, const QualityModel& quality,
                           const RewardParams& params) {
  if (!similarity::capability_match(p, t)) {
    throw ContractViolation("participant '" + p.id.str() + "' cannot run task '" + t.id.str() + "'");
  }
  Prediction pr;
  const double cycles = t.size_alpha * t.intensity_delta;
  pr.transfer_s = transfer_time(t.size_alpha, net);
  pr.wait_s = net.backlog_s;
  pr.compute_s = cycles / p.hardware.cpu_rate;
  pr.compute_j = cycles * p.hardware.energy_per_cycle;
  // The device sends its output block(s) once done.
  const double airtime = t.size_alpha * net.block_bits / net.bandwidth_bps;
  pr.radio_j = p.hardware.tx_power * airtime;
  pr.outcome.achieved_q = std::clamp(base_quality(p, t, quality, params), 0.0, 1.0);
  pr.outcome.completed = true;
  normalize(pr, t);
  return pr;
}

Prediction realize_outcome(const Prediction& predicted, const Task& t, const NoiseModel& noise, std::mt19937_64& rng) {
  Prediction r = predicted;
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (noise.time_sigma > 0.0) r.compute_s *= std::exp(noise.time_sigma * gauss(rng));
  if (noise.energy_sigma > 0.0) r.compute_j *= std::exp(noise.energy_sigma * gauss(rng));
  if (noise.quality_sigma > 0.0) {
    const double mean = predicted.outcome.achieved_q;
    double q = mean;
    // Rejection sampling; the clamp only matters if 64 draws all miss.
    for (int i = 0; i < 64; ++i) {
      q = mean + noise.quality_sigma * gauss(rng);
      if (q >= 0.0 && q <= 1.0) break;
    }
    r.outcome.achieved_q = std::clamp(q, 0.0, 1.0);
  }
  normalize(r, t);
  return r;
}

Position random_point(const MobilityArea& area, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> x(0.0, area.width);
  std::uniform_real_distribution<double> y(0.0, area.height);
  const double px = x(rng);
  return {px, y(rng)};
}

void step_mobility(std::span<Mover> movers, double dt, const MobilityArea& area, std::mt19937_64& rng) {
  if (!(dt > 0.0)) throw ContractViolation("mobility step needs dt > 0");
  std::uniform_real_distribution<double> speed(area.speed_min, area.speed_max);
  for (auto& m : movers) {
    const double dx = m.waypoint.x - m.position.x;
    const double dy = m.waypoint.y - m.position.y;
    const double left = std::hypot(dx, dy);
    const double reach = m.speed * dt;
    if (reach >= left) {
      m.position = m.waypoint;
      m.waypoint = random_point(area, rng);
      m.speed = speed(rng);
    } else {
      m.position.x += dx / left * reach;
      m.position.y += dy / left * reach;
    }
    m.position.x = std::clamp(m.position.x, 0.0, area.width);
    m.position.y = std::clamp(m.position.y, 0.0, area.height);
  }
}

double recent_gain(const std::deque<double>& history, std::size_t window) {
  if (history.empty() || window == 0) return 0.0;
  const std::size_t n = std::min(window, history.size());
  double sum = 0.0;
  for (std::size_t i = history.size() - n; i < history.size(); ++i) sum += history[i];
  return sum / static_cast<double>(n);
}

bool participation_decision(const Participant& p, const Invitation& inv, const ParticipationPolicy& policy) {
  if (inv.threat) return false;
  const bool history_ok = p.gain_history.empty() || recent_gain(p.gain_history, policy.gain_window) >= policy.gain_floor;
  const bool worth_it = inv.predicted_gain > 0.0 && history_ok;
  switch (p.disposition) {
    case CoopCategory::HighlyCooperative: return inv.predicted_gain >= -policy.loss_tolerance;
    case CoopCategory::Cooperative: return worth_it;
    case CoopCategory::PartiallyCooperative: return worth_it && inv.preference_match;
    case CoopCategory::Neutral: return worth_it && inv.last_resort;
    case CoopCategory::NonCooperative:
    case CoopCategory::HighlyNonCooperative: return false;
  }
  return false;
}

}  // namespace volchain::sim
