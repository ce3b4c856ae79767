#include "volchain/domain/feature_set.hpp"

#include <algorithm>
#include <iterator>

#include "volchain/domain/errors.hpp"

namespace volchain {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string describe(std::string_view raw) { return "'" + std::string(raw) + "'"; }

}  // namespace

std::string canonical_tag(std::string_view raw) {
  std::size_t first = 0;
  std::size_t last = raw.size();
  while (first < last && is_space(raw[first])) ++first;
  while (last > first && is_space(raw[last - 1])) --last;
  if (first == last) throw ValidationError("empty feature tag " + describe(raw));

  std::string tag;
  tag.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) {
    const auto c = static_cast<unsigned char>(raw[i]);
    if (c < 0x20 || c == 0x7f || c == ',' || c == '=') {
      throw ValidationError("invalid character in feature tag " + describe(raw));
    }
    tag.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
  }
  return tag;
}

FeatureSet FeatureSet::canonicalize(std::span<const std::string> raw) {
  std::vector<std::string> tags;
  tags.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      tags.push_back(canonical_tag(raw[i]));
    } catch (const ValidationError& e) {
      throw ValidationError("entry " + std::to_string(i) + ": " + e.what());
    }
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return FeatureSet(std::move(tags));
}

FeatureSet::FeatureSet(std::initializer_list<std::string_view> raw) {
  std::vector<std::string> copy(raw.begin(), raw.end());
  *this = canonicalize(copy);
}

bool FeatureSet::contains(std::string_view tag) const {
  return std::binary_search(tags_.begin(), tags_.end(), tag, std::less<>{});
}

bool FeatureSet::is_subset_of(const FeatureSet& other) const {
  return std::includes(other.tags_.begin(), other.tags_.end(), tags_.begin(), tags_.end());
}

std::size_t FeatureSet::intersection_size(const FeatureSet& other) const {
  std::size_t n = 0;
  auto a = tags_.begin();
  auto b = other.tags_.begin();
  while (a != tags_.end() && b != other.tags_.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++n;
      ++a;
      ++b;
    }
  }
  return n;
}

std::size_t FeatureSet::union_size(const FeatureSet& other) const {
  return tags_.size() + other.tags_.size() - intersection_size(other);
}

FeatureSet FeatureSet::united(const FeatureSet& other) const {
  std::vector<std::string> out;
  out.reserve(tags_.size() + other.tags_.size());
  std::set_union(tags_.begin(), tags_.end(), other.tags_.begin(), other.tags_.end(), std::back_inserter(out));
  return FeatureSet(std::move(out));
}

FeatureSet FeatureSet::intersected(const FeatureSet& other) const {
  std::vector<std::string> out;
  std::set_intersection(tags_.begin(), tags_.end(), other.tags_.begin(), other.tags_.end(),
                        std::back_inserter(out));
  return FeatureSet(std::move(out));
}

std::string FeatureSet::to_text() const {
  std::string out;
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (i != 0) out.push_back(',');
    out += tags_[i];
  }
  return out;
}

FeatureSet FeatureSet::from_text(std::string_view text) {
  std::vector<std::string> parts;
  if (!text.empty()) {
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      parts.emplace_back(text.substr(start, comma == std::string_view::npos ? text.size() - start : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  auto set = canonicalize(parts);
  if (set.to_text() != text) {
    throw ValidationError("non-canonical feature set text '" + std::string(text) + "'");
  }
  return set;
}

}  // namespace volchain
