#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "volchain/domain/credits.hpp"
#include "volchain/domain/feature_set.hpp"
#include "volchain/domain/ids.hpp"

namespace volchain {

/// Acceptable quality band of a request, on the normalized [0,1] QoS index.
struct QoSSpec {
  double floor = 0.0;
  double ceiling = 1.0;

  bool contains(double q) const noexcept { return floor <= q && q <= ceiling; }
  friend bool operator==(const QoSSpec&, const QoSSpec&) = default;
};

enum class Priority { low, normal, high };

struct OtherRequirements {
  double cost_cap = 0.0;
  Priority priority = Priority::normal;
  friend bool operator==(const OtherRequirements&, const OtherRequirements&) = default;
};

struct Task {
  TaskId id;
  double size_alpha = 1.0;        // data blocks
  std::vector<TaskId> deps_beta;  // tasks that must finish first
  double deadline_gamma = 1.0;    // sim seconds, relative to the task becoming ready
  double intensity_delta = 1.0;   // processor cycles per data block
  double energy_zeta = 1.0;       // nominal joules per data block
  FeatureSet characteristics;
  FeatureSet required_capability;
  bool sensitive = false;

  friend bool operator==(const Task&, const Task&) = default;
};

struct ServiceRequest {
  RequestId id;
  ParticipantId requester;
  FeatureSet description_d;
  QoSSpec qos_q;
  OtherRequirements other_o;
  std::vector<Task> tasks;
  double arrival_time = 0.0;

  const Task* find_task(const TaskId& id) const;
  friend bool operator==(const ServiceRequest&, const ServiceRequest&) = default;
};

/// Realized execution levels of one task.
///
/// workload_delta and energy_used are dimensionless fractions in [0,1]
/// (cycle usage relative to the deadline window, energy relative to the
/// nominal task energy) so that the workload sum mixes like quantities.
struct ActualOutcome {
  double achieved_q = 0.0;
  double completion_time = 0.0;
  double workload_delta = 0.0;
  double energy_used = 0.0;
  bool completed = false;

  friend bool operator==(const ActualOutcome&, const ActualOutcome&) = default;
};

struct HardwareProfile {
  double cpu_rate = 1e9;           // cycles / s
  double energy_per_cycle = 1e-9;  // J / cycle
  double storage = 1000.0;         // data blocks
  double tx_power = 0.02;          // W
  double idle_power = 0.001;       // W

  friend bool operator==(const HardwareProfile&, const HardwareProfile&) = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

double distance(const Position& a, const Position& b);

/// Cooperation ranks, ordered from worst to best.
enum class CoopCategory {
  HighlyNonCooperative = 0,
  NonCooperative = 1,
  Neutral = 2,
  PartiallyCooperative = 3,
  Cooperative = 4,
  HighlyCooperative = 5,
};
inline constexpr std::size_t kCategoryCount = 6;

std::string_view to_string(CoopCategory c);
std::optional<CoopCategory> parse_category(std::string_view s);

enum class ParticipantStatus { active, banned, withdrawn };
std::string_view to_string(ParticipantStatus s);
std::optional<ParticipantStatus> parse_status(std::string_view s);

std::string_view to_string(Priority p);
std::optional<Priority> parse_priority(std::string_view s);

/// One cooperation invitation as remembered by the invited participant.
struct InvitationRecord {
  double offered_reward = 0.0;
  bool accepted = false;
  friend bool operator==(const InvitationRecord&, const InvitationRecord&) = default;
};

struct Participant {
  ParticipantId id;
  FeatureSet capabilities;
  FeatureSet preferences;
  HardwareProfile hardware;
  Position position;
  double coop_score_c = 0.5;
  CoopCategory category = CoopCategory::Neutral;
  // How the device actually behaves; the fog only observes `category`.
  CoopCategory disposition = CoopCategory::Neutral;
  ParticipantStatus status = ParticipantStatus::active;
  bool is_miner = false;
  // Whether the capabilities were advertised to the fog registry.
  bool registered = true;
  Credits rewards_accumulated;
  std::deque<double> gain_history;
  std::size_t decline_count = 0;
  std::deque<InvitationRecord> invitations;

  friend bool operator==(const Participant&, const Participant&) = default;
};

enum class NonmatchMode { union_count, symdiff_count };
std::string_view to_string(NonmatchMode m);
std::optional<NonmatchMode> parse_nonmatch_mode(std::string_view s);

struct RewardParams {
  double tau_q = 1.0;
  double tau_gamma = 0.5;
  double sigma_q = 1.0;
  double sigma_gamma = 0.5;
  double phi = 0.3;
  double rho = 0.1;
  double w_match = 0.5;
  double w_nonmatch = 0.5;
  NonmatchMode nonmatch_mode = NonmatchMode::union_count;

  /// Throws ParameterError when an invariant is broken.
  void validate() const;
  friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

/// Append to a bounded history, dropping the oldest entries.
template <class T>
void push_bounded(std::deque<T>& history, T value, std::size_t capacity) {
  if (capacity == 0) return;
  history.push_back(std::move(value));
  while (history.size() > capacity) history.pop_front();
}

}  // namespace volchain
