#include "skp/diagnostics.hpp"

namespace skp::diagnostics {

Counters& counters() {
  static Counters c;
  return c;
}

void reset() {
  auto& c = counters();
  c.variance_clamps = 0;
  c.variance_violations = 0;
  c.adjusted_variance_floors = 0;
}

}  // namespace skp::diagnostics
