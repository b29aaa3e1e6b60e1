#include "xorflow/queues.hpp"

#include <algorithm>
#include <cmath>

namespace xorflow {

Ledger make_ledger(const Layout& layout) {
  Ledger led;
  led.len.assign(layout.subqueues.size(), 0.0);
  led.dirty.assign(layout.subqueues.size(), 0);
  const size_t T = layout.tracks.size();
  led.approx.assign(T, 0.0);
  led.len_at_upd.assign(T, 0.0);
  led.phi.assign(T, 0.0);
  led.metric.assign(T, 0.0);
  led.twin_shadow.assign(T, 0.0);
  // Sentinel track 0: always eligible, contributes nothing to weights.
  led.metric[0] = 1.0;
  // Tracks start as if updated at length zero, so the brackets hold from the
  // first sub-packet movement: origins at 0 (clamped floor), destinations at
  // one packet (ceil rule).
  for (size_t t = 1; t < T; ++t) {
    const TrackInfo& ti = layout.tracks[t];
    const int c = ti.session;
    const double p = layout.consts.packet[c];
    const double a0 = ti.role == Role::Origin ? 0.0 : p;
    led.approx[t] = a0;
    led.phi[t] = phi_prime(layout.consts.alpha[c], a0);
    led.metric[t] = ti.role == Role::Origin ? a0 : layout.consts.threshold[c] - a0;
  }
  const int K = layout.inst.num_sessions();
  led.overflow.assign(K, 0.0);
  led.injected.assign(K, 0.0);
  led.entered.assign(K, 0.0);
  led.delivered.assign(K, 0.0);
  led.removed.assign(K, 0.0);
  return led;
}

bool update_due(const Layout& layout, const Ledger& led, std::int32_t track) {
  const TrackInfo& ti = layout.tracks[track];
  double p = layout.consts.packet[ti.session];
  return std::fabs(led.len[ti.subq] - led.len_at_upd[track]) >= p - kTol;
}

void update_approx(const Layout& layout, Ledger& led, std::int32_t track) {
  const TrackInfo& ti = layout.tracks[track];
  const double l = led.len[ti.subq];
  const double p = layout.consts.packet[ti.session];
  double k;
  if (ti.role == Role::Origin) {
    k = floor_tol(l / p - 1.0);
    if (k < 0) {
      k = 0;  // floor rule clamps at empty; the subqueue drops out of the origin filter
      ++led.clamp_events;
    }
  } else {
    k = ceil_tol(l / p + 1.0);
  }
  led.approx[track] = k * p;
  led.len_at_upd[track] = l;
  const double a = layout.consts.alpha[ti.session];
  led.phi[track] = phi_prime(a, led.approx[track]);
  led.metric[track] = ti.role == Role::Origin
                          ? led.approx[track]
                          : layout.consts.threshold[ti.session] - led.approx[track];
  led.updated_tracks.push_back(track);
}

std::vector<double> remove_at_sinks(const Layout& layout, Ledger& led) {
  std::vector<double> by_session(layout.inst.num_sessions(), 0.0);
  for (const RemovalEntry& r : layout.removals) {
    double l = led.len[r.subq];
    if (l <= 0.0) continue;
    led.len[r.subq] = 0.0;
    led.dirty[r.subq] = 1;
    const SubqueueInfo& si = layout.subqueues[r.subq];
    for (int t = 0; t < si.n_tracks; ++t) {
      std::int32_t tr = si.tracks[t];
      led.twin_shadow[tr] = 0.0;
      by_session[layout.tracks[tr].session] += l;
      led.removed[layout.tracks[tr].session] += l;
      if (update_due(layout, led, tr)) update_approx(layout, led, tr);
    }
    if (r.deliver_session >= 0) led.delivered[r.deliver_session] += l;
  }
  return by_session;
}

void rebalance(const Layout& layout, Ledger& led) {
  for (const auto& group : layout.queue_groups) {
    bool changed = false;
    for (std::int32_t sq : group)
      if (led.dirty[sq]) {
        changed = true;
        break;
      }
    if (!changed || group.size() < 2) continue;
    double total = 0.0;
    for (std::int32_t sq : group) total += led.len[sq];
    const double mean = total / (double)group.size();
    for (std::int32_t sq : group) {
      if (led.len[sq] == mean) continue;
      led.len[sq] = mean;
      led.dirty[sq] = 1;
      const SubqueueInfo& si = layout.subqueues[sq];
      for (int t = 0; t < si.n_tracks; ++t) led.twin_shadow[si.tracks[t]] = mean;
    }
  }
  for (std::int32_t tr = 1; tr < (std::int32_t)layout.tracks.size(); ++tr)
    if (update_due(layout, led, tr)) update_approx(layout, led, tr);
}

double total_potential(const Layout& layout, const Ledger& led) {
  double sum = 0.0;
  for (size_t t = 1; t < layout.tracks.size(); ++t) {
    const TrackInfo& ti = layout.tracks[t];
    sum += std::exp(layout.consts.alpha[ti.session] * led.len[ti.subq]);
  }
  for (int c = 0; c < (int)led.overflow.size(); ++c)
    sum += overflow_potential(layout.consts.alpha[c], led.overflow[c], layout.consts.B_times_r[c]);
  return sum;
}

double remaining_in_network(const Ledger& led) {
  double sum = 0.0;
  for (double l : led.len) sum += l;
  return sum;
}

}  // namespace xorflow
