#include "volchain/chain/chain_io.hpp"

#include <vector>

#include "volchain/domain/errors.hpp"

namespace volchain::chain {

namespace {

std::string section_header(std::size_t i) { return "[block " + std::to_string(i) + "]"; }

std::string export_body(const Chain& chain, std::vector<std::size_t>* block_offsets) {
  if (chain.failure.find('\n') != std::string::npos) throw ValidationError("failure reason contains a newline");
  std::string out(kChainMagic);
  out += "\nrequest=" + chain.request_id.str();
  out += "\nstatus=" + std::string(to_string(chain.status));
  out += "\nfailure=" + chain.failure;
  out += "\nblocks=" + std::to_string(chain.blocks.size()) + "\n";
  for (std::size_t i = 0; i < chain.blocks.size(); ++i) {
    const auto& b = chain.blocks[i];
    if (block_offsets) block_offsets->push_back(out.size());
    out += section_header(i) + "\n";
    out += block_record(b).to_text();
    out += "hash=" + to_hex(b.hash) + "\n";
    for (const auto& a : b.attestations) out += "attestation=" + a.attester + ":" + to_hex(a.signature) + "\n";
  }
  return out;
}

struct Lines {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }
  std::optional<std::string_view> peek() const {
    if (done()) return std::nullopt;
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) return std::nullopt;
    return text.substr(pos, nl - pos);
  }
  std::optional<std::string_view> next() {
    auto line = peek();
    if (line) pos += line->size() + 1;
    return line;
  }
};

std::optional<std::string_view> value_of(std::string_view line, std::string_view key) {
  if (line.size() <= key.size() || line.substr(0, key.size()) != key || line[key.size()] != '=') return std::nullopt;
  return line.substr(key.size() + 1);
}

ChainCheck broken(std::optional<std::size_t> block, std::string reason) {
  return {ChainCheck::Result::broken, block, std::move(reason)};
}

// Parses into `out`; returns a non-ok check on the first problem.
ChainCheck parse(std::string_view text, Chain& out) {
  if (text.empty()) return {ChainCheck::Result::malformed, std::nullopt, "empty file"};
  Lines lines{text};
  const auto magic = lines.next();
  if (!magic || *magic != kChainMagic) {
    return {ChainCheck::Result::malformed, std::nullopt, "not a chain file (bad first line)"};
  }

  const auto header_field = [&](std::string_view key) -> std::optional<std::string_view> {
    const auto line = lines.next();
    return line ? value_of(*line, key) : std::nullopt;
  };
  const auto request = header_field("request");
  const auto status_text = header_field("status");
  const auto failure = header_field("failure");
  const auto count_text = header_field("blocks");
  if (!request || !status_text || !failure || !count_text) return broken(std::nullopt, "unreadable chain header");
  const auto status = parse_chain_status(*status_text);
  if (!status) return broken(std::nullopt, "unknown chain status");
  std::uint64_t count = 0;
  try {
    count = parse_uint(*count_text, "blocks");
  } catch (const ValidationError& e) {
    return broken(std::nullopt, e.what());
  }
  out.request_id = RequestId(std::string(*request));
  out.status = *status;
  out.failure = std::string(*failure);

  for (std::size_t i = 0;; ++i) {
    const auto head = lines.next();
    if (!head) return broken(i == 0 ? std::nullopt : std::optional<std::size_t>(i - 1), "truncated chain file");
    if (value_of(*head, "seal")) {
      if (i != count) return broken(i == 0 ? std::nullopt : std::optional<std::size_t>(i - 1), "block count mismatch");
      break;
    }
    if (*head != section_header(i)) return broken(i, "expected " + section_header(i));

    std::string record_text;
    std::optional<Digest> hash;
    std::vector<Attestation> attestations;
    while (true) {
      const auto line = lines.peek();
      if (!line || line->starts_with("[block ") || value_of(*line, "seal")) break;
      lines.next();
      if (const auto h = value_of(*line, "hash")) {
        if (hash) return broken(i, "duplicate hash line");
        hash = digest_from_hex(*h);
        if (!hash) return broken(i, "hash is not a lowercase SHA-256 hex digest");
      } else if (const auto a = value_of(*line, "attestation")) {
        const auto colon = a->rfind(':');
        const auto sig = colon == std::string_view::npos ? std::nullopt : digest_from_hex(a->substr(colon + 1));
        if (!sig || colon == 0) return broken(i, "unreadable attestation");
        attestations.push_back({std::string(a->substr(0, colon)), *sig});
      } else {
        if (hash) return broken(i, "block field after hash line");
        record_text += *line;
        record_text += '\n';
      }
    }
    if (!hash) return broken(i, "missing hash line");
    try {
      Block b = block_from_record(TextRecord::parse(record_text));
      b.hash = *hash;
      b.attestations = std::move(attestations);
      out.blocks.push_back(std::move(b));
    } catch (const std::exception& e) {
      return broken(i, std::string("unreadable block: ") + e.what());
    }
  }
  return {};
}

}  // namespace

std::string export_chain(const Chain& chain) {
  auto body = export_body(chain, nullptr);
  body += "seal=" + to_hex(sha256(body)) + "\n";
  return body;
}

ChainCheck verify_chain_text(std::string_view text) {
  Chain chain;
  if (auto check = parse(text, chain); !check.ok()) return check;

  if (const auto bad = first_broken_block(chain)) return broken(*bad, "hash or link mismatch");

  // Re-export must reproduce the input byte for byte.
  std::vector<std::size_t> offsets;
  const auto body = export_body(chain, &offsets);
  const auto expected = body + "seal=" + to_hex(sha256(body)) + "\n";
  if (expected != text) {
    std::size_t diff = 0;
    while (diff < expected.size() && diff < text.size() && expected[diff] == text[diff]) ++diff;
    std::optional<std::size_t> block;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (offsets[i] <= diff) block = i;
    }
    if (diff >= body.size()) return broken(block, "seal mismatch");
    return broken(block, "non-canonical content");
  }
  return {};
}

Chain import_chain(std::string_view text) {
  const auto check = verify_chain_text(text);
  if (!check.ok()) {
    throw ValidationError("chain file rejected" +
                          (check.block ? " at block " + std::to_string(*check.block) : std::string()) + ": " +
                          check.reason);
  }
  Chain chain;
  parse(text, chain);
  return chain;
}

}  // namespace volchain::chain
