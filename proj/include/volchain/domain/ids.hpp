#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <utility>

namespace volchain {

// Tagged string identifier. Ordering is lexicographic on the underlying
// string, which is what every tie-break rule in the library relies on.
template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

 private:
  std::string value_;
};

using TaskId = Id<struct TaskIdTag>;
using RequestId = Id<struct RequestIdTag>;
using ParticipantId = Id<struct ParticipantIdTag>;

}  // namespace volchain

template <class Tag>
struct std::hash<volchain::Id<Tag>> {
  std::size_t operator()(const volchain::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
