#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace volchain::chain {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view data);

/// Lowercase hexadecimal rendering.
std::string to_hex(const Digest& d);
/// Parses exactly 64 lowercase hex characters.
std::optional<Digest> digest_from_hex(std::string_view hex);

inline constexpr Digest kZeroDigest{};

}  // namespace volchain::chain
