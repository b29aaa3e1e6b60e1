#include "xorflow/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace xorflow {

Engine::Engine(const Layout& layout, const RoundConfig& cfg)
    : lay_(&layout), cfg_(cfg), led_(make_ledger(layout)) {
  scan_ = select_scan_kernel(cfg_.kernel);
  use_index_ = cfg_.fast_index;
  double stop = cfg_.stop_fraction < 0 ? cfg_.epsilon : cfg_.stop_fraction;
  if (!(stop > 0.0) || !(stop < 1.0)) throw ConfigError("stop fraction must lie in (0, 1)");
  if (use_index_) {
    index_.resize(lay_->links.size());
    for (int li = 0; li < (int)lay_->links.size(); ++li) index_[li].build(*lay_, li, led_);
  }
  cum_flow_.resize(lay_->links.size());
  for (int li = 0; li < (int)lay_->links.size(); ++li)
    cum_flow_[li].assign(lay_->catalogs[li].pairs.size(), 0.0);
  link_pushed_round_.assign(lay_->links.size(), 0.0);
  cum_link_pushed_.assign(lay_->links.size(), 0.0);
  lambda_round_.assign(lay_->inst.rate_sets.size(), 0.0);
  lambda_cum_.assign(lay_->inst.rate_sets.size(), 0.0);
}

double Engine::capacity_of(int link) const { return lay_->links[link].capacity; }

ScanBest Engine::best_pair(int link) const {
  if (use_index_) return index_[link].best();
  const LinkSlots& ls = lay_->slots[link];
  PairScanView v;
  v.o1 = ls.o1.data();
  v.o2 = ls.o2.data();
  v.d1 = ls.d1.data();
  v.d2 = ls.d2.data();
  v.n = ls.o1.size();
  v.phi = led_.phi.data();
  v.metric = led_.metric.data();
  return scan_(v);
}

double Engine::pair_weight(int link, int pair_idx) const {
  const LinkSlots& ls = lay_->slots[link];
  return (led_.phi[ls.o1[pair_idx]] + led_.phi[ls.o2[pair_idx]]) -
         (led_.phi[ls.d1[pair_idx]] + led_.phi[ls.d2[pair_idx]]);
}

void Engine::drain_update_log() {
  if (use_index_) {
    for (std::int32_t tr : led_.updated_tracks) {
      int sq = lay_->tracks[tr].subq;
      index_[lay_->subqueues[sq].link].on_track_updated(tr, led_);
    }
  }
  led_.updated_tracks.clear();
}

void Engine::phase1_inject() {
  const auto& consts = lay_->consts;
  for (int c = 0; c < lay_->inst.num_sessions(); ++c) {
    const double add = consts.packet[c];  // (1+eps) r_c
    led_.overflow[c] += add;
    led_.injected[c] += add;
    const std::int32_t sq = lay_->source_subq[c];
    if (sq < 0) continue;
    const double headroom = consts.B_times_r[c] - led_.len[sq];
    const double xfer = std::min(led_.overflow[c], std::max(0.0, headroom));
    if (xfer > 0.0) {
      led_.overflow[c] -= xfer;
      led_.len[sq] += xfer;
      led_.dirty[sq] = 1;
      const SubqueueInfo& si = lay_->subqueues[sq];
      for (int t = 0; t < si.n_tracks; ++t) {
        led_.twin_shadow[si.tracks[t]] += xfer;
        if (update_due(*lay_, led_, si.tracks[t])) update_approx(*lay_, led_, si.tracks[t]);
      }
    }
  }
  drain_update_log();
}

void Engine::apply_push(int link, int pair_idx, double f) {
  const LinkSlots& ls = lay_->slots[link];
  const PairSlots& p = ls.pairs[pair_idx];

  double bind[4];
  const std::int32_t trs[4] = {p.o_tr[0], p.o_tr[1], p.d_tr[0], p.d_tr[1]};
  for (int i = 0; i < 4; ++i) {
    if (trs[i] == 0) {
      bind[i] = std::numeric_limits<double>::infinity();
      continue;
    }
    const TrackInfo& ti = lay_->tracks[trs[i]];
    bind[i] = lay_->consts.packet[ti.session] -
              std::fabs(led_.len[ti.subq] - led_.len_at_upd[trs[i]]);
  }

  for (int i = 0; i < 2; ++i) {
    const std::int32_t sq = p.o_sq[i];
    if (sq < 0) continue;
    led_.len[sq] -= f;
    if (led_.len[sq] < 0.0) {
      if (led_.len[sq] < -kTol)
        throw InvariantError("origin subqueue driven negative: " +
                             lay_->subqueues[sq].queue.str(lay_->inst.nodes));
      led_.len[sq] = 0.0;
    }
    led_.dirty[sq] = 1;
    const SubqueueInfo& si = lay_->subqueues[sq];
    for (int t = 0; t < si.n_tracks; ++t) led_.twin_shadow[si.tracks[t]] -= f;
  }
  for (int i = 0; i < 2; ++i) {
    const std::int32_t sq = p.d_sq[i];
    if (sq < 0) continue;
    led_.len[sq] += f;
    led_.dirty[sq] = 1;
    const SubqueueInfo& si = lay_->subqueues[sq];
    for (int t = 0; t < si.n_tracks; ++t) led_.twin_shadow[si.tracks[t]] += f;
  }

  cum_flow_[link][pair_idx] += f;
  link_pushed_round_[link] += f;
  const PairForm form = lay_->catalogs[link].pairs[pair_idx].form;
  if (form == PairForm::SourceInject) led_.entered[lay_->links[link].session] += f;

  for (int i = 0; i < 4; ++i)
    if (trs[i] != 0 && f >= bind[i] - kTol) update_approx(*lay_, led_, trs[i]);
  drain_update_log();
}

void Engine::process_link(int link, double budget) {
  double remaining = budget;
  if (remaining <= kTol) return;
  const LinkSlots& ls = lay_->slots[link];
  if (ls.pairs.empty()) return;
  const std::int64_t iter_cap = 1'000'000;
  std::int64_t iters = 0;
  while (remaining > kTol) {
    const ScanBest best = best_pair(link);
    if (best.idx < 0) break;
    if (cfg_.greedy_nonnegative_only && best.w <= 0.0) break;

    const PairSlots& p = ls.pairs[best.idx];
    double cp = remaining;
    for (const std::int32_t tr : {p.o_tr[0], p.o_tr[1], p.d_tr[0], p.d_tr[1]}) {
      if (tr == 0) continue;
      const TrackInfo& ti = lay_->tracks[tr];
      const double b = lay_->consts.packet[ti.session] -
                       std::fabs(led_.len[ti.subq] - led_.len_at_upd[tr]);
      cp = std::min(cp, b);
    }
    if (cp <= kTol) {
      // A pending update slipped through; apply it and retry.
      for (const std::int32_t tr : {p.o_tr[0], p.o_tr[1], p.d_tr[0], p.d_tr[1]})
        if (tr != 0 && update_due(*lay_, led_, tr)) update_approx(*lay_, led_, tr);
      drain_update_log();
      if (++iters > iter_cap) throw InvariantError("phase 2 stalled on " + lay_->links[link].name);
      continue;
    }
    apply_push(link, best.idx, cp);
    remaining -= cp;
    if (++iters > iter_cap)
      throw InvariantError("phase 2 runaway loop on " + lay_->links[link].name);
  }
}

void Engine::phase2_wired() {
  for (int li = 0; li < (int)lay_->links.size(); ++li) process_link(li, capacity_of(li));
}

void Engine::phase2_wireless() {
  // Virtual links first, exactly as in the wired case.
  std::vector<int> real;
  for (int li = 0; li < (int)lay_->links.size(); ++li) {
    if (lay_->links[li].kind == LinkKind::WirelessReal)
      real.push_back(li);
    else
      process_link(li, capacity_of(li));
  }
  const auto& rate_sets = lay_->inst.rate_sets;
  const int U = (int)rate_sets.size();
  if (U == 0) throw ConfigError("wireless run requires at least one rate set");
  std::fill(lambda_round_.begin(), lambda_round_.end(), 0.0);

  double T = 1.0;
  std::int64_t iters = 0;
  const std::int64_t iter_cap = 1024 + 64 * (std::int64_t)lay_->tracks.size();
  std::vector<ScanBest> bests(real.size());
  while (T > 1e-12) {
    bool any_active = false;
    for (size_t i = 0; i < real.size(); ++i) {
      bests[i] = best_pair(real[i]);
      if (bests[i].idx >= 0 && cfg_.greedy_nonnegative_only && bests[i].w <= 0.0)
        bests[i].idx = -1;
      any_active |= bests[i].idx >= 0;
    }
    if (!any_active) break;

    int best_u = -1;
    double best_y = 0.0;
    for (int u = 0; u < U; ++u) {
      double y = 0.0;
      for (size_t i = 0; i < real.size(); ++i)
        if (bests[i].idx >= 0) y += bests[i].w * rate_sets[u][lay_->links[real[i]].real_index];
      if (best_u < 0 || y > best_y) {
        best_u = u;
        best_y = y;
      }
    }
    if (best_y <= 0.0) break;

    double Tp = T;
    bool any_cap = false;
    for (size_t i = 0; i < real.size(); ++i) {
      if (bests[i].idx < 0) continue;
      const double cap = rate_sets[best_u][lay_->links[real[i]].real_index];
      if (cap <= 0.0) continue;
      any_cap = true;
      const PairSlots& p = lay_->slots[real[i]].pairs[bests[i].idx];
      for (const std::int32_t tr : {p.o_tr[0], p.o_tr[1], p.d_tr[0], p.d_tr[1]}) {
        if (tr == 0) continue;
        const TrackInfo& ti = lay_->tracks[tr];
        const double b = lay_->consts.packet[ti.session] -
                         std::fabs(led_.len[ti.subq] - led_.len_at_upd[tr]);
        Tp = std::min(Tp, b / cap);
      }
    }
    if (!any_cap) break;
    if (Tp <= 1e-15) Tp = 1e-15;  // binds stay positive between updates; guards fp dust

    for (size_t i = 0; i < real.size(); ++i) {
      if (bests[i].idx < 0) continue;
      const double cap = rate_sets[best_u][lay_->links[real[i]].real_index];
      if (cap <= 0.0) continue;
      apply_push(real[i], bests[i].idx, Tp * cap);
    }
    T -= Tp;
    lambda_round_[best_u] += Tp;
    if (++iters > iter_cap) throw InvariantError("wireless phase 2 runaway loop");
  }
  for (int u = 0; u < U; ++u) lambda_cum_[u] += lambda_round_[u];
}

void Engine::phase3_remove() {
  remove_at_sinks(*lay_, led_);
  drain_update_log();
}

void Engine::phase4_rebalance() {
  rebalance(*lay_, led_);
  drain_update_log();
}

void Engine::check_lengths(const char* where) const {
  for (size_t sq = 0; sq < led_.len.size(); ++sq)
    if (led_.len[sq] < -kTol)
      throw InvariantError(std::string("negative length after ") + where + ": " +
                           lay_->subqueues[sq].queue.str(lay_->inst.nodes));
}

void Engine::check_brackets(const char* where) const {
  for (size_t tr = 1; tr < lay_->tracks.size(); ++tr) {
    const TrackInfo& ti = lay_->tracks[tr];
    const double l = led_.len[ti.subq];
    const double p = lay_->consts.packet[ti.session];
    const double a = led_.approx[tr];
    bool ok = ti.role == Role::Origin ? (a >= l - 3 * p - kTol && a <= l + kTol)
                                      : (a >= l - kTol && a <= l + 3 * p + kTol);
    if (a < -kTol) ok = false;
    const double k = a / p;
    if (std::fabs(k - std::round(k)) > 1e-6) ok = false;
    if (!ok)
      throw InvariantError(std::string("approximate-length bracket violated after ") + where +
                           ": " + lay_->subqueues[ti.subq].queue.str(lay_->inst.nodes) +
                           " l=" + std::to_string(l) + " approx=" + std::to_string(a));
  }
}

void Engine::check_twins(const char* where) const {
  // Every track mirrors its subqueue length through an independently
  // maintained shadow; for joint poison this is the pair-of-queues lock.
  for (const SubqueueInfo& si : lay_->subqueues) {
    for (int t = 0; t < si.n_tracks; ++t) {
      const std::int32_t tr = si.tracks[t];
      if (std::fabs(led_.twin_shadow[tr] - led_.len[lay_->tracks[tr].subq]) > 1e-6)
        throw InvariantError(std::string("twin lock violated after ") + where + ": " +
                             si.queue.str(lay_->inst.nodes));
    }
    if (si.queue.kind == QueueKind::JointPoison && si.n_tracks != 2)
      throw InvariantError("joint poison subqueue without twin tracks");
  }
}

void Engine::run_round() {
  std::fill(led_.dirty.begin(), led_.dirty.end(), 0);
  std::fill(link_pushed_round_.begin(), link_pushed_round_.end(), 0.0);
  std::fill(lambda_round_.begin(), lambda_round_.end(), 0.0);

  const bool chk = cfg_.check_invariants;
  phase1_inject();
  if (chk) {
    check_lengths("phase 1");
    check_brackets("phase 1");
    check_twins("phase 1");
  }

  if (lay_->inst.mode == Mode::Wired)
    phase2_wired();
  else
    phase2_wireless();
  if (chk) {
    check_lengths("phase 2");
    check_brackets("phase 2");
    check_twins("phase 2");
    for (int li = 0; li < (int)lay_->links.size(); ++li) {
      if (lay_->links[li].kind == LinkKind::WirelessReal) continue;
      if (link_pushed_round_[li] > capacity_of(li) + kTol)
        throw InvariantError("link capacity exceeded on " + lay_->links[li].name);
    }
    if (lay_->inst.mode == Mode::Wireless) {
      double lam_sum = 0.0;
      for (double l : lambda_round_) lam_sum += l;
      if (lam_sum > 1.0 + kTol) throw InvariantError("timeshare budget exceeded");
      for (int li = 0; li < (int)lay_->links.size(); ++li) {
        const LinkRef& lr = lay_->links[li];
        if (lr.kind != LinkKind::WirelessReal) continue;
        double avg_cap = 0.0;
        for (size_t u = 0; u < lambda_round_.size(); ++u)
          avg_cap += lambda_round_[u] * lay_->inst.rate_sets[u][lr.real_index];
        if (link_pushed_round_[li] > avg_cap + kTol)
          throw InvariantError("wireless capacity exceeded on " + lr.name);
      }
    }
  }

  double pot_before = chk ? total_potential(*lay_, led_) : 0.0;
  phase3_remove();
  if (chk) {
    const double pot_after = total_potential(*lay_, led_);
    if (pot_after > pot_before + kTol) throw InvariantError("phase 3 increased potential");
    check_lengths("phase 3");
    check_brackets("phase 3");
    check_twins("phase 3");
    pot_before = pot_after;
  }

  phase4_rebalance();
  if (chk) {
    const double pot_after = total_potential(*lay_, led_);
    if (pot_after > pot_before + kTol) throw InvariantError("phase 4 increased potential");
    check_lengths("phase 4");
    check_brackets("phase 4");
    check_twins("phase 4");
  }

  finish_round();
}

void Engine::finish_round() {
  for (int li = 0; li < (int)lay_->links.size(); ++li)
    cum_link_pushed_[li] += link_pushed_round_[li];

  last_remaining_ = remaining_in_network(led_);
  last_entered_ = 0.0;
  for (double e : led_.entered) last_entered_ += e;

  const std::int64_t stride = std::max<std::int64_t>(1, cfg_.stats_stride);
  if (round_ % stride == 0) {
    RoundStats rs;
    rs.round = round_;
    rs.remaining = last_remaining_;
    rs.entered_total = last_entered_;
    rs.potential = total_potential(*lay_, led_);
    rs.injected = led_.injected;
    rs.entered = led_.entered;
    rs.delivered = led_.delivered;
    rs.overflow = led_.overflow;
    rs.link_pushed = link_pushed_round_;
    rs.lambda = lambda_round_;
    stats_.push_back(std::move(rs));
  }
  ++round_;
  if (log_level() >= 1 && round_ % 50000 == 0)
    logf(1, "round %lld: remaining %.1f entered %.1f", (long long)round_, last_remaining_,
         last_entered_);
}

SolutionVariables Engine::make_solution() const {
  std::vector<double> achieved(lay_->inst.num_sessions(), 0.0);
  if (round_ > 0)
    for (int c = 0; c < (int)achieved.size(); ++c) achieved[c] = led_.delivered[c] / (double)round_;
  SolutionVariables sol =
      round_ > 0 ? average_flows(*lay_, cum_flow_, round_, achieved) : SolutionVariables{};
  sol.rates = achieved;
  if (lay_->inst.mode == Mode::Wireless && round_ > 0) {
    sol.lambda_avg.assign(lambda_cum_.size(), 0.0);
    for (size_t u = 0; u < lambda_cum_.size(); ++u) sol.lambda_avg[u] = lambda_cum_[u] / round_;
    const int M = (int)lay_->inst.wireless_links.size();
    sol.link_flow_avg.assign(M, 0.0);
    sol.link_cap_avg.assign(M, 0.0);
    for (int li = 0; li < (int)lay_->links.size(); ++li) {
      const LinkRef& lr = lay_->links[li];
      if (lr.kind != LinkKind::WirelessReal) continue;
      sol.link_flow_avg[lr.real_index] = cum_link_pushed_[li] / round_;
      for (size_t u = 0; u < lambda_cum_.size(); ++u)
        sol.link_cap_avg[lr.real_index] +=
            sol.lambda_avg[u] * lay_->inst.rate_sets[u][lr.real_index];
    }
  }
  return sol;
}

RunResult Engine::run() {
  RunResult r;
  const double stop = cfg_.stop_fraction < 0 ? cfg_.epsilon : cfg_.stop_fraction;
  if (lay_->inst.num_sessions() == 0) {
    r.converged = true;
    r.rounds = 0;
    r.solution = make_solution();
    return r;
  }
  while (round_ < cfg_.max_rounds) {
    run_round();
    if (last_entered_ > 0 && last_remaining_ <= stop * last_entered_) {
      r.converged = true;
      break;
    }
  }
  if (!stats_.empty() && stats_.back().round != round_ - 1 && round_ > 0) {
    // Record the final round even when striding.
    RoundStats rs;
    rs.round = round_ - 1;
    rs.remaining = last_remaining_;
    rs.entered_total = last_entered_;
    rs.potential = total_potential(*lay_, led_);
    rs.injected = led_.injected;
    rs.entered = led_.entered;
    rs.delivered = led_.delivered;
    rs.overflow = led_.overflow;
    rs.link_pushed = link_pushed_round_;
    rs.lambda = lambda_round_;
    stats_.push_back(std::move(rs));
  }
  r.rounds = round_;
  r.entered = last_entered_;
  r.remaining = last_remaining_;
  r.solution = make_solution();
  r.stats = stats_;
  return r;
}

RunResult run(const ProblemInstance& inst, const RoundConfig& cfg) {
  DerivedConstants consts = derive_constants(inst, cfg.epsilon, cfg.L, cfg.F, cfg.kappa);
  CatalogOptions copts;
  copts.routing_only = cfg.routing_only;
  copts.prune_tags = cfg.prune_tags;
  Layout layout = build_layout(inst, consts, copts);
  Engine eng(layout, cfg);
  return eng.run();
}

std::string stats_csv(const Layout& layout, const std::vector<RoundStats>& stats) {
  std::string out = "round,remaining,entered,potential";
  char buf[64];
  const int K = layout.inst.num_sessions();
  for (int c = 0; c < K; ++c) {
    std::string n = std::to_string(c + 1);
    out += ",injected_" + n + ",entered_" + n + ",delivered_" + n + ",overflow_" + n;
  }
  for (const LinkRef& l : layout.links) out += ",push_" + l.name;
  for (size_t u = 0; u < layout.inst.rate_sets.size(); ++u)
    out += ",lambda_" + std::to_string(u + 1);
  out += "\n";
  auto emit = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    out += buf;
  };
  for (const RoundStats& rs : stats) {
    std::snprintf(buf, sizeof buf, "%lld", (long long)rs.round);
    out += buf;
    emit(rs.remaining);
    emit(rs.entered_total);
    emit(rs.potential);
    for (int c = 0; c < K; ++c) {
      emit(rs.injected[c]);
      emit(rs.entered[c]);
      emit(rs.delivered[c]);
      emit(rs.overflow[c]);
    }
    for (double v : rs.link_pushed) emit(v);
    for (double v : rs.lambda) emit(v);
    out += "\n";
  }
  return out;
}

}  // namespace xorflow
