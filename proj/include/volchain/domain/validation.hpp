#pragma once

#include <string>
#include <vector>

#include "volchain/domain/types.hpp"

namespace volchain {

struct Violation {
  std::string code;  // "cycle", "qos-range", "empty-tasks", ...
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }
  bool has(std::string_view code) const;
};

/// Collects every problem with a request instead of stopping at the first.
ValidationReport validate_request(const ServiceRequest& req);

/// Indices of `req.tasks` in a dependency-respecting order; ties keep the
/// declaration order. Throws ValidationError on cycles or unknown deps.
std::vector<std::size_t> topological_order(const ServiceRequest& req);

}  // namespace volchain
