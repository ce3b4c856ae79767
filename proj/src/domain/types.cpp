#include "volchain/domain/types.hpp"

#include <array>
#include <cmath>

#include "volchain/domain/errors.hpp"

namespace volchain {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "highly-non-cooperative", "non-cooperative", "neutral",
    "partially-cooperative",  "cooperative",     "highly-cooperative",
};

}  // namespace

const Task* ServiceRequest::find_task(const TaskId& task_id) const {
  for (const auto& t : tasks) {
    if (t.id == task_id) return &t;
  }
  return nullptr;
}

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(CoopCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<CoopCategory> parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == s) return static_cast<CoopCategory>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ParticipantStatus s) {
  switch (s) {
    case ParticipantStatus::active: return "active";
    case ParticipantStatus::banned: return "banned";
    case ParticipantStatus::withdrawn: return "withdrawn";
  }
  return "active";
}

std::optional<ParticipantStatus> parse_status(std::string_view s) {
  if (s == "active") return ParticipantStatus::active;
  if (s == "banned") return ParticipantStatus::banned;
  if (s == "withdrawn") return ParticipantStatus::withdrawn;
  return std::nullopt;
}

std::string_view to_string(Priority p) {
  switch (p) {
    case Priority::low: return "low";
    case Priority::normal: return "normal";
    case Priority::high: return "high";
  }
  return "normal";
}

std::optional<Priority> parse_priority(std::string_view s) {
  if (s == "low") return Priority::low;
  if (s == "normal") return Priority::normal;
  if (s == "high") return Priority::high;
  return std::nullopt;
}

std::string_view to_string(NonmatchMode m) {
  return m == NonmatchMode::union_count ? "union" : "symdiff";
}

std::optional<NonmatchMode> parse_nonmatch_mode(std::string_view s) {
  if (s == "union") return NonmatchMode::union_count;
  if (s == "symdiff") return NonmatchMode::symdiff_count;
  return std::nullopt;
}

void RewardParams::validate() const {
  const auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be a finite nonnegative real");
  };
  nonneg(tau_q, "tau_q");
  nonneg(tau_gamma, "tau_gamma");
  nonneg(sigma_q, "sigma_q");
  nonneg(sigma_gamma, "sigma_gamma");
  nonneg(phi, "phi");
  nonneg(rho, "rho");
  nonneg(w_match, "w_match");
  nonneg(w_nonmatch, "w_nonmatch");
  if (phi > 1.0) throw ParameterError("phi must be <= 1");
  if (rho > 1.0) throw ParameterError("rho must be <= 1");
  if (!(w_match + w_nonmatch > 0.0)) throw ParameterError("w_match + w_nonmatch must be > 0");
}

}  // namespace volchain
