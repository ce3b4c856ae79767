#pragma once

#include <array>

#include "volchain/domain/types.hpp"

namespace volchain::behavior {

/// Band boundaries of the six cooperation categories over [0,1].
///
/// Each category's membership function is a triangle peaking at its band
/// centre and falling to zero at the neighbouring centres; the outermost
/// categories keep full membership beyond their centres. Adjacent
/// memberships therefore sum to one everywhere.
struct FuzzifierConfig {
  std::array<double, kCategoryCount + 1> boundaries{0.0, 1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6, 5.0 / 6, 1.0};

  /// Throws ParameterError unless boundaries start at 0, end at 1 and
  /// strictly increase.
  void validate() const;
  double center(std::size_t k) const { return 0.5 * (boundaries[k] + boundaries[k + 1]); }
};

struct Fuzzified {
  double c_n = 0.0;
  CoopCategory category = CoopCategory::Neutral;
  std::array<double, kCategoryCount> membership{};
};

/// Membership degrees, the membership-weighted centroid of the band centres
/// (C_n) and the category of maximal membership; the lower category wins an
/// exact tie. Inputs outside [0,1] are clamped.
Fuzzified fuzzify(double aggregate, const FuzzifierConfig& cfg = {});

}  // namespace volchain::behavior
