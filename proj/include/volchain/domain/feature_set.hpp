#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volchain {

/// Flat set of canonical feature tags.
///
/// Tags are trimmed, ASCII-lowercased and deduplicated. They stand in for
/// ontology concepts: capabilities, preferences, request descriptions and the
/// input/output interfaces of blocks are all feature sets. Storage is a
/// sorted vector so set algebra runs as linear merges.
class FeatureSet {
 public:
  FeatureSet() = default;

  /// Canonicalizes `raw`; throws ValidationError naming the first bad entry
  /// (empty after trimming, or containing ',', '=' or a control character).
  static FeatureSet canonicalize(std::span<const std::string> raw);
  FeatureSet(std::initializer_list<std::string_view> raw);

  std::size_t size() const noexcept { return tags_.size(); }
  bool empty() const noexcept { return tags_.empty(); }
  bool contains(std::string_view tag) const;
  const std::vector<std::string>& tags() const noexcept { return tags_; }
  auto begin() const noexcept { return tags_.begin(); }
  auto end() const noexcept { return tags_.end(); }

  bool is_subset_of(const FeatureSet& other) const;
  std::size_t intersection_size(const FeatureSet& other) const;
  std::size_t union_size(const FeatureSet& other) const;
  FeatureSet united(const FeatureSet& other) const;
  FeatureSet intersected(const FeatureSet& other) const;

  /// Comma-joined sorted tags ("" for the empty set).
  std::string to_text() const;
  /// Inverse of to_text; rejects non-canonical input.
  static FeatureSet from_text(std::string_view text);

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  explicit FeatureSet(std::vector<std::string> sorted_unique) : tags_(std::move(sorted_unique)) {}
  std::vector<std::string> tags_;
};

/// Trim + lowercase a single tag; throws ValidationError when invalid.
std::string canonical_tag(std::string_view raw);

}  // namespace volchain
