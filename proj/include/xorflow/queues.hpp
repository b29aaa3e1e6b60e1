#pragma once

#include <cstdint>
#include <vector>

#include "xorflow/transfers.hpp"

namespace xorflow {

// phi_c(l) = e^{alpha_c l}; back-pressure weights use its derivative.
inline double phi_prime(double alpha, double l) { return alpha * std::exp(alpha * l); }

// Overflow queues live outside the network and carry a linear potential.
inline double overflow_potential(double alpha, double l, double b_times_r) {
  return alpha * l * std::exp(alpha * b_times_r);
}

// Single-writer mutable state aligned with a Layout. Snapshots between rounds
// are plain copies.
struct Ledger {
  // per subqueue
  std::vector<double> len;
  std::vector<std::uint8_t> dirty;  // true length changed this round
  // per track (joint-poison subqueues carry one track per session)
  std::vector<double> approx;       // integer multiple of the session packet
  std::vector<double> len_at_upd;   // true length at last approximate update
  std::vector<double> phi;          // phi'_c(approx), cached
  std::vector<double> metric;       // origin: approx; destination: threshold - approx
  std::vector<double> twin_shadow;  // per-track mirror lengths (invariant checking)
  // per session
  std::vector<double> overflow;
  std::vector<double> injected;   // cumulative (1+eps) r_c additions
  std::vector<double> entered;    // cumulative virtual-source flow
  std::vector<double> delivered;  // cumulative uncoded removals at the sink
  std::vector<double> removed;    // cumulative phase-3 removals (incl. poison)

  std::vector<std::int32_t> updated_tracks;  // approximate-update log, drained by the engine
  std::int64_t clamp_events = 0;             // origin floor rule clamped at zero
};

Ledger make_ledger(const Layout& layout);

// True whether the update trigger has fired: |l - len_at_upd| >= p (within kTol).
bool update_due(const Layout& layout, const Ledger& led, std::int32_t track);

// Applies the packetized update rule to one track and refreshes its cached
// phi/metric. Origin: k = floor(l/p - 1) clamped at 0; destination:
// k = ceil(l/p + 1). Appends the track to the ledger's update log.
void update_approx(const Layout& layout, Ledger& led, std::int32_t track);

// Phase 3: zero U_{d_c}^{cv}, P_j^{c'cj}, P_j^{{c,c'}j}. Returns per-session
// removed amounts; uncoded removals also count as delivered.
std::vector<double> remove_at_sinks(const Layout& layout, Ledger& led);

// Phase 4: equalize subqueue lengths within every queue that changed this
// round, then apply any pending approximate updates (all queues).
void rebalance(const Layout& layout, Ledger& led);

// Sum of subqueue potentials (per track, true lengths) plus overflow
// potentials.
double total_potential(const Layout& layout, const Ledger& led);

// Total true length over all non-overflow subqueues ("remaining" in the
// termination rule).
double remaining_in_network(const Ledger& led);

}  // namespace xorflow
