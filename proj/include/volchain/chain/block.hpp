#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "volchain/chain/sha256.hpp"
#include "volchain/domain/text_record.hpp"
#include "volchain/domain/types.hpp"

namespace volchain::chain {

/// Countersignature of a block hash: sha256("<attester>:<hex hash>").
struct Attestation {
  std::string attester;
  Digest signature{};
  friend bool operator==(const Attestation&, const Attestation&) = default;
};

Attestation attest(std::string attester, const Digest& block_hash);
bool attestation_valid(const Attestation& a, const Digest& block_hash);

/// One task execution. Block 0 (genesis) carries the request itself, names
/// the serving fog as its participant and links to the all-zero digest.
struct Block {
  std::size_t index = 0;
  Digest prev_hash{};
  RequestId request;
  TaskId task;
  ParticipantId participant;
  std::optional<ParticipantId> miner;  // set when a miner found the participant
  FeatureSet input_features;
  FeatureSet output_features;
  ActualOutcome outcome;
  Credits reward_paid;
  double timestamp = 0.0;
  bool sensitive = false;
  std::optional<ServiceRequest> request_body;  // genesis only

  Digest hash{};
  // Signatures over `hash`; not part of the hashed content.
  std::vector<Attestation> attestations;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Every field except `hash` and the attestations, in canonical form.
TextRecord block_record(const Block& b);
Block block_from_record(const TextRecord& r);
Digest compute_hash(const Block& b);

enum class ChainStatus { forming, complete, failed };
std::string_view to_string(ChainStatus s);
std::optional<ChainStatus> parse_chain_status(std::string_view s);

struct Chain {
  RequestId request_id;
  ChainStatus status = ChainStatus::forming;
  std::string failure;  // reason when failed
  std::vector<Block> blocks;

  const Block& genesis() const { return blocks.front(); }
  const Digest& tip() const { return blocks.back().hash; }
  friend bool operator==(const Chain&, const Chain&) = default;
};

/// Fields the caller supplies for a new block; index, links and hash are
/// filled in by append_block.
struct BlockFields {
  TaskId task;
  ParticipantId participant;
  std::optional<ParticipantId> miner;
  FeatureSet input_features;
  FeatureSet output_features;
  ActualOutcome outcome;
  Credits reward_paid;
  double timestamp = 0.0;
  bool sensitive = false;
};

/// New forming chain holding only the genesis block.
Chain start_chain(const ServiceRequest& req, const ParticipantId& fog, double timestamp);

/// Hashes and links a new block. Throws StateError unless the chain is forming.
Block& append_block(Chain& chain, BlockFields fields);

void complete_chain(Chain& chain);
void fail_chain(Chain& chain, std::string reason);

/// True iff every block hash recomputes, every prev_hash links to its
/// predecessor, indices run 0..n-1, block 0 links to the zero digest and
/// carries the request, and every attestation signature is valid.
bool verify_chain(const Chain& chain);

/// Index of the first block that fails verification, if any.
std::optional<std::size_t> first_broken_block(const Chain& chain);

}  // namespace volchain::chain
