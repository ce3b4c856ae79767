#include "volchain/domain/validation.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "volchain/domain/errors.hpp"

namespace volchain {

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
}

namespace {

// Kahn's algorithm, picking the lowest declaration index among ready tasks.
// Returns the order found so far; a short order means a cycle.
std::vector<std::size_t> kahn(const ServiceRequest& req, const std::map<TaskId, std::size_t>& index) {
  const std::size_t n = req.tasks.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> seen;
    for (const auto& dep : req.tasks[i].deps_beta) {
      const auto it = index.find(dep);
      if (it == index.end() || !seen.insert(it->second).second) continue;
      succ[it->second].push_back(i);
      ++indegree[i];
    }
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const auto i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (const auto s : succ[i]) {
      if (--indegree[s] == 0) ready.insert(s);
    }
  }
  return order;
}

}  // namespace

ValidationReport validate_request(const ServiceRequest& req) {
  ValidationReport report;
  const auto add = [&](std::string code, std::string detail) {
    report.violations.push_back({std::move(code), std::move(detail)});
  };

  if (req.id.empty()) add("request-id", "request id is empty");
  if (req.tasks.empty()) add("empty-tasks", "request has no tasks");
  if (req.qos_q.floor < 0.0 || req.qos_q.ceiling > 1.0 || req.qos_q.floor > req.qos_q.ceiling) {
    add("qos-range", "qos floor/ceiling must satisfy 0 <= floor <= ceiling <= 1");
  }
  if (req.other_o.cost_cap < 0.0) add("cost-cap", "cost cap must be nonnegative");

  std::map<TaskId, std::size_t> index;
  for (std::size_t i = 0; i < req.tasks.size(); ++i) {
    const auto& t = req.tasks[i];
    if (t.id.empty()) add("task-id", "task " + std::to_string(i) + " has an empty id");
    if (!index.emplace(t.id, i).second) add("duplicate-task", "task id '" + t.id.str() + "' appears twice");
    if (!(t.size_alpha > 0.0)) add("task-size", "task '" + t.id.str() + "' size must be positive");
    if (!(t.deadline_gamma > 0.0)) add("task-deadline", "task '" + t.id.str() + "' deadline must be positive");
    if (!(t.intensity_delta > 0.0)) add("task-intensity", "task '" + t.id.str() + "' intensity must be positive");
    if (!(t.energy_zeta > 0.0)) add("task-energy", "task '" + t.id.str() + "' energy must be positive");
  }
  for (const auto& t : req.tasks) {
    for (const auto& dep : t.deps_beta) {
      if (dep == t.id) {
        add("cycle", "task '" + t.id.str() + "' depends on itself");
      } else if (!index.contains(dep)) {
        add("unknown-dependency", "task '" + t.id.str() + "' depends on unknown task '" + dep.str() + "'");
      }
    }
  }
  if (!report.has("cycle") && kahn(req, index).size() != req.tasks.size() && !report.has("duplicate-task")) {
    add("cycle", "task dependencies contain a cycle");
  }
  return report;
}

std::vector<std::size_t> topological_order(const ServiceRequest& req) {
  std::map<TaskId, std::size_t> index;
  for (std::size_t i = 0; i < req.tasks.size(); ++i) index.emplace(req.tasks[i].id, i);
  for (const auto& t : req.tasks) {
    for (const auto& dep : t.deps_beta) {
      if (!index.contains(dep)) throw ValidationError("unknown dependency '" + dep.str() + "'");
      if (dep == t.id) throw ValidationError("cycle: task '" + t.id.str() + "' depends on itself");
    }
  }
  auto order = kahn(req, index);
  if (order.size() != req.tasks.size()) throw ValidationError("cycle in task dependencies");
  return order;
}

}  // namespace volchain
