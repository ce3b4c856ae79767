#include "volchain/behavior/fuzzify.hpp"

#include <algorithm>

#include "volchain/domain/errors.hpp"

namespace volchain::behavior {

void FuzzifierConfig::validate() const {
  if (boundaries.front() != 0.0 || boundaries.back() != 1.0) {
    throw ParameterError("fuzzifier bands must cover [0,1]");
  }
  for (std::size_t k = 1; k < boundaries.size(); ++k) {
    if (!(boundaries[k] > boundaries[k - 1])) throw ParameterError("fuzzifier band boundaries must strictly increase");
  }
}

Fuzzified fuzzify(double aggregate, const FuzzifierConfig& cfg) {
  const double x = std::clamp(aggregate, 0.0, 1.0);
  constexpr std::size_t last = kCategoryCount - 1;
  Fuzzified out;
  if (x <= cfg.center(0)) {
    out.membership[0] = 1.0;
  } else if (x >= cfg.center(last)) {
    out.membership[last] = 1.0;
  } else {
    std::size_t k = 0;
    while (x > cfg.center(k + 1)) ++k;
    const double lo = cfg.center(k);
    const double hi = cfg.center(k + 1);
    out.membership[k] = (hi - x) / (hi - lo);
    out.membership[k + 1] = 1.0 - out.membership[k];
  }

  double num = 0.0;
  double den = 0.0;
  std::size_t arg = 0;
  for (std::size_t k = 0; k < kCategoryCount; ++k) {
    num += out.membership[k] * cfg.center(k);
    den += out.membership[k];
    if (out.membership[k] > out.membership[arg]) arg = k;
  }
  out.c_n = num / den;
  out.category = static_cast<CoopCategory>(arg);
  return out;
}

}  // namespace volchain::behavior
