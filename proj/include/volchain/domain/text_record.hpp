#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "volchain/domain/feature_set.hpp"

namespace volchain {

/// Render a real with 9 significant digits ("%.9g").
std::string format_real(double value);

/// Strict parsers used by every canonical reader. They reject leading or
/// trailing garbage and throw ValidationError naming `what`.
double parse_real(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);
std::uint64_t parse_uint(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

/// Canonical key=value record.
///
/// Keys are kept sorted (byte order) and rendered one per line as
/// `key=value\n`. Nested values use dotted key prefixes. Values may not
/// contain newlines; keys may not contain '=' or newlines.
class TextRecord {
 public:
  void set(std::string key, std::string value);
  void set_real(std::string key, double value) { set(std::move(key), format_real(value)); }
  void set_int(std::string key, std::int64_t value) { set(std::move(key), std::to_string(value)); }
  void set_uint(std::string key, std::uint64_t value) { set(std::move(key), std::to_string(value)); }
  void set_bool(std::string key, bool value) { set(std::move(key), value ? "1" : "0"); }
  void set_features(std::string key, const FeatureSet& f) { set(std::move(key), f.to_text()); }

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;  // throws ValidationError if missing
  double get_real(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  FeatureSet get_features(std::string_view key) const;

  /// Copy every field of `other` under `prefix` + ".".
  void merge_prefixed(std::string_view prefix, const TextRecord& other);
  /// Extract the fields below `prefix` + "." with the prefix stripped.
  TextRecord sub(std::string_view prefix) const;

  const std::map<std::string, std::string, std::less<>>& fields() const noexcept { return fields_; }
  std::size_t size() const noexcept { return fields_.size(); }

  std::string to_text() const;
  /// Parse `key=value` lines; throws ValidationError with a 1-based line
  /// number on malformed lines or duplicate keys.
  static TextRecord parse(std::string_view text);

  friend bool operator==(const TextRecord&, const TextRecord&) = default;

 private:
  std::map<std::string, std::string, std::less<>> fields_;
};

}  // namespace volchain
