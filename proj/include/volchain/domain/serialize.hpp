#pragma once

#include <string>
#include <string_view>

#include "volchain/domain/text_record.hpp"
#include "volchain/domain/types.hpp"

namespace volchain {

// Canonical text codecs for the domain types. Each `to_record` writes every
// field; each `*_from_record` reads them back and validates the invariants
// the type carries. Round-tripping a value through text is the identity for
// any value whose reals are already on the 9-significant-digit grid.

TextRecord to_record(const QoSSpec& v);
TextRecord to_record(const Task& v);
TextRecord to_record(const ServiceRequest& v);
TextRecord to_record(const ActualOutcome& v);
TextRecord to_record(const HardwareProfile& v);
TextRecord to_record(const Participant& v);
TextRecord to_record(const RewardParams& v);

QoSSpec qos_from_record(const TextRecord& r);
Task task_from_record(const TextRecord& r);
ServiceRequest request_from_record(const TextRecord& r);
ActualOutcome outcome_from_record(const TextRecord& r);
HardwareProfile hardware_from_record(const TextRecord& r);
Participant participant_from_record(const TextRecord& r);
RewardParams reward_params_from_record(const TextRecord& r);

template <class T>
std::string to_canonical_text(const T& value) {
  return to_record(value).to_text();
}

}  // namespace volchain
