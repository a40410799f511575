#pragma once

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>

#include <cstddef>
#include <span>

namespace adasprt {

/// Majority label; ties go to the prior's more likely class, then to 1.
inline Label fixed_majority(std::span<const Label> labels, const Prior& prior) {
  if (labels.empty()) throw ConfigError("majority vote needs at least one label");
  std::size_t ones = 0;
  for (Label x : labels) ones += x == 1 ? 1 : 0;
  const std::size_t zeros = labels.size() - ones;
  if (ones != zeros) return ones > zeros ? 1 : 0;
  return prior.pi0() > prior.pi1() ? 0 : 1;
}

}  // namespace adasprt
