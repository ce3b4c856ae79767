#include "volchain/chain/block.hpp"

#include "volchain/domain/errors.hpp"
#include "volchain/domain/serialize.hpp"

namespace volchain::chain {

Attestation attest(std::string attester, const Digest& block_hash) {
  const auto sig = sha256(attester + ":" + to_hex(block_hash));
  return {std::move(attester), sig};
}

bool attestation_valid(const Attestation& a, const Digest& block_hash) {
  return !a.attester.empty() && sha256(a.attester + ":" + to_hex(block_hash)) == a.signature;
}

TextRecord block_record(const Block& b) {
  TextRecord r;
  r.set_uint("index", b.index);
  r.set("prev_hash", to_hex(b.prev_hash));
  r.set("request_id", b.request.str());
  r.set("task", b.task.str());
  r.set("participant", b.participant.str());
  r.set("miner", b.miner ? b.miner->str() : "");
  r.set_features("input", b.input_features);
  r.set_features("output", b.output_features);
  r.merge_prefixed("outcome", to_record(b.outcome));
  r.set_int("reward_paid_micros", b.reward_paid.micros());
  r.set_real("timestamp", b.timestamp);
  r.set_bool("sensitive", b.sensitive);
  r.set_bool("genesis", b.request_body.has_value());
  if (b.request_body) r.merge_prefixed("request", to_record(*b.request_body));
  return r;
}

Block block_from_record(const TextRecord& r) {
  Block b;
  b.index = r.get_uint("index");
  const auto prev = digest_from_hex(r.get("prev_hash"));
  if (!prev) throw ValidationError("prev_hash is not a lowercase SHA-256 hex digest");
  b.prev_hash = *prev;
  b.request = RequestId(r.get("request_id"));
  b.task = TaskId(r.get("task"));
  b.participant = ParticipantId(r.get("participant"));
  if (const auto& m = r.get("miner"); !m.empty()) b.miner = ParticipantId(m);
  b.input_features = r.get_features("input");
  b.output_features = r.get_features("output");
  b.outcome = outcome_from_record(r.sub("outcome"));
  b.reward_paid = Credits::from_micros(r.get_int("reward_paid_micros"));
  b.timestamp = r.get_real("timestamp");
  b.sensitive = r.get_bool("sensitive");
  if (r.get_bool("genesis")) b.request_body = request_from_record(r.sub("request"));
  if (block_record(b) != r) throw ValidationError("block record has unexpected or non-canonical fields");
  return b;
}

Digest compute_hash(const Block& b) { return sha256(block_record(b).to_text()); }

std::string_view to_string(ChainStatus s) {
  switch (s) {
    case ChainStatus::forming: return "forming";
    case ChainStatus::complete: return "complete";
    case ChainStatus::failed: return "failed";
  }
  return "forming";
}

std::optional<ChainStatus> parse_chain_status(std::string_view s) {
  if (s == "forming") return ChainStatus::forming;
  if (s == "complete") return ChainStatus::complete;
  if (s == "failed") return ChainStatus::failed;
  return std::nullopt;
}

Chain start_chain(const ServiceRequest& req, const ParticipantId& fog, double timestamp) {
  Chain c;
  c.request_id = req.id;
  Block g;
  g.index = 0;
  g.prev_hash = kZeroDigest;
  g.request = req.id;
  g.participant = fog;
  g.output_features = req.description_d;
  g.timestamp = timestamp;
  g.request_body = req;
  g.hash = compute_hash(g);
  c.blocks.push_back(std::move(g));
  return c;
}

Block& append_block(Chain& chain, BlockFields f) {
  if (chain.status != ChainStatus::forming) {
    throw StateError("cannot append to a " + std::string(to_string(chain.status)) + " chain");
  }
  if (chain.blocks.empty()) throw StateError("chain has no genesis block");
  Block b;
  b.index = chain.blocks.size();
  b.prev_hash = chain.tip();
  b.request = chain.request_id;
  b.task = std::move(f.task);
  b.participant = std::move(f.participant);
  b.miner = std::move(f.miner);
  b.input_features = std::move(f.input_features);
  b.output_features = std::move(f.output_features);
  b.outcome = f.outcome;
  b.reward_paid = f.reward_paid;
  b.timestamp = f.timestamp;
  b.sensitive = f.sensitive;
  b.hash = compute_hash(b);
  chain.blocks.push_back(std::move(b));
  return chain.blocks.back();
}

void complete_chain(Chain& chain) {
  if (chain.status != ChainStatus::forming) throw StateError("only a forming chain can complete");
  chain.status = ChainStatus::complete;
}

void fail_chain(Chain& chain, std::string reason) {
  if (chain.status != ChainStatus::forming) throw StateError("only a forming chain can fail");
  chain.status = ChainStatus::failed;
  chain.failure = std::move(reason);
}

std::optional<std::size_t> first_broken_block(const Chain& chain) {
  if (chain.blocks.empty()) return 0;
  for (std::size_t i = 0; i < chain.blocks.size(); ++i) {
    const auto& b = chain.blocks[i];
    const bool genesis = i == 0;
    if (b.index != i || b.request != chain.request_id) return i;
    if (genesis != b.request_body.has_value()) return i;
    if (genesis && b.request_body->id != chain.request_id) return i;
    if (b.prev_hash != (genesis ? kZeroDigest : chain.blocks[i - 1].hash)) return i;
    if (compute_hash(b) != b.hash) return i;
    for (const auto& a : b.attestations) {
      if (!attestation_valid(a, b.hash)) return i;
    }
  }
  return std::nullopt;
}

bool verify_chain(const Chain& chain) { return !first_broken_block(chain).has_value(); }

}  // namespace volchain::chain
