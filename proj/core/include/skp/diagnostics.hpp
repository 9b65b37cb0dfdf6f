#pragma once

#include <atomic>
#include <cstddef>

namespace skp::diagnostics {

struct Counters {
  /// Variances pulled back into [0, sigma2] after round-off.
  std::atomic<std::size_t> variance_clamps{0};
  /// Clamped variances that were off by more than the round-off threshold.
  std::atomic<std::size_t> variance_violations{0};
  /// Negative adjusted localized variances floored at 0.
  std::atomic<std::size_t> adjusted_variance_floors{0};
};

Counters& counters();
void reset();

}  // namespace skp::diagnostics
