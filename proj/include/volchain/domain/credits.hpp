#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace volchain {

/// Reward amount held as an integer count of micro-units (1e-6 reward units).
///
/// All postings, shares and balances use this type so that splitting a task
/// reward between a miner and a participant conserves the total bit-exactly.
/// Conversion from a real value rounds half away from zero.
class Credits {
 public:
  static constexpr std::int64_t kMicrosPerUnit = 1'000'000;

  constexpr Credits() = default;
  static constexpr Credits from_micros(std::int64_t micros) { return Credits(micros); }
  static Credits from_units(double units) {
    return Credits(static_cast<std::int64_t>(std::llround(units * static_cast<double>(kMicrosPerUnit))));
  }

  constexpr std::int64_t micros() const noexcept { return micros_; }
  double units() const noexcept { return static_cast<double>(micros_) / static_cast<double>(kMicrosPerUnit); }

  constexpr Credits& operator+=(Credits o) noexcept { micros_ += o.micros_; return *this; }
  constexpr Credits& operator-=(Credits o) noexcept { micros_ -= o.micros_; return *this; }
  friend constexpr Credits operator+(Credits a, Credits b) noexcept { return a += b; }
  friend constexpr Credits operator-(Credits a, Credits b) noexcept { return a -= b; }
  friend constexpr auto operator<=>(Credits, Credits) = default;

 private:
  constexpr explicit Credits(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

}  // namespace volchain
