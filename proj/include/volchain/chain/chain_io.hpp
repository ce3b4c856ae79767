#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "volchain/chain/block.hpp"

namespace volchain::chain {

// Chain file layout:
//
//   volchain-chain 1
//   request=<id>
//   status=<forming|complete|failed>
//   failure=<reason>
//   blocks=<n>
//   [block 0]
//   <canonical block record lines>
//   hash=<hex>
//   attestation=<attester>:<hex>      (zero or more)
//   [block 1]
//   ...
//   seal=<sha256 hex of every preceding byte>

inline constexpr std::string_view kChainMagic = "volchain-chain 1";

std::string export_chain(const Chain& chain);

struct ChainCheck {
  enum class Result { ok, broken, malformed };
  Result result = Result::ok;
  std::optional<std::size_t> block;  // first offending block, when one can be named
  std::string reason;

  bool ok() const noexcept { return result == Result::ok; }
};

/// Re-checks an exported chain bit-exactly: the text must parse, re-export
/// to identical bytes, carry a valid seal and pass verify_chain. `malformed`
/// means the input is not recognizable as a chain file at all.
ChainCheck verify_chain_text(std::string_view text);

/// Parses an exported chain; throws ValidationError unless
/// verify_chain_text accepts it.
Chain import_chain(std::string_view text);

}  // namespace volchain::chain
