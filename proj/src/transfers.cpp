#include "xorflow/transfers.hpp"

#include <algorithm>
#include <map>

namespace xorflow {

namespace {

// Canonical encoding of a pair: origin keys sorted, destination keys sorted.
// Catalog order and deduplication both run on this.
std::array<std::uint64_t, 4> pair_code(const TransferPair& p) {
  std::array<std::uint64_t, 2> o{0, 0}, d{0, 0};
  for (int i = 0; i < p.n_origins; ++i) o[i] = p.origins[i].key();
  for (int i = 0; i < p.n_dests; ++i) d[i] = p.dests[i].key();
  if (p.n_origins == 2 && o[0] > o[1]) std::swap(o[0], o[1]);
  if (p.n_dests == 2 && d[0] > d[1]) std::swap(d[0], d[1]);
  return {o[0], o[1], d[0], d[1]};
}

TransferPair make_pair1(QueueId o, QueueId d, PairForm f) {
  TransferPair p;
  p.origins[0] = o;
  p.n_origins = 1;
  p.dests[0] = d;
  p.n_dests = 1;
  p.form = f;
  return p;
}

struct CatalogBuilder {
  std::map<std::array<std::uint64_t, 4>, TransferPair> seen;

  void add(TransferPair p) {
    // Store slots in canonical (sorted) order so layouts are deterministic.
    if (p.n_origins == 2 && p.origins[1] < p.origins[0]) std::swap(p.origins[0], p.origins[1]);
    if (p.n_dests == 2 && p.dests[1] < p.dests[0]) std::swap(p.dests[0], p.dests[1]);
    seen.emplace(pair_code(p), p);  // first form wins on duplicates
  }
  Catalog take() {
    Catalog c;
    for (auto& [k, p] : seen) c.pairs.push_back(p);
    return c;
  }
};

using TagSets = std::vector<std::vector<char>>;

// The five transport forms shared by wired links and each wireless receiver b.
// Poison moves against the link direction (the modified problem reverses it).
void add_transport_forms(CatalogBuilder& cb, const ProblemInstance& inst, int a, int b,
                         bool routing_only, const TagSets& tags) {
  const int N = inst.num_nodes();
  const int K = inst.num_sessions();
  for (int c = 0; c < K; ++c)
    for (int v = 0; v < N; ++v) {
      if (!tags[c][v]) continue;
      cb.add(make_pair1(QueueId::uncoded(a, c, v), QueueId::uncoded(b, c, v),
                        PairForm::UncodedKeep));
      if (tags[c][a])
        cb.add(make_pair1(QueueId::uncoded(a, c, v), QueueId::uncoded(b, c, a),
                          PairForm::UncodedRetag));
    }
  if (routing_only) return;
  for (int c = 0; c < K; ++c)
    for (int c2 = c + 1; c2 < K; ++c2)
      for (int jn = 0; jn < N; ++jn)
        cb.add(make_pair1(QueueId::joint_poison(b, c, c2, jn), QueueId::joint_poison(a, c, c2, jn),
                          PairForm::JointPoisonRev));
  for (int c = 0; c < K; ++c)
    for (int c2 = 0; c2 < K; ++c2) {
      if (c == c2) continue;
      for (int jn = 0; jn < N; ++jn) {
        cb.add(make_pair1(QueueId::indiv_poison(b, c, c2, jn),
                          QueueId::indiv_poison(a, c, c2, jn), PairForm::IndivPoisonRev));
        cb.add(make_pair1(QueueId::remedy(a, c, c2, jn), QueueId::remedy(b, c, c2, jn),
                          PairForm::RemedyFwd));
      }
    }
}

}  // namespace

std::vector<LinkRef> build_links(const ProblemInstance& inst, const DerivedConstants& consts,
                                 bool routing_only) {
  std::vector<LinkRef> links;
  const int N = inst.num_nodes();
  for (int c = 0; c < inst.num_sessions(); ++c) {
    LinkRef l;
    l.kind = LinkKind::VirtualSource;
    l.a = inst.sessions[c].src;
    l.session = c;
    l.capacity = consts.cbar;
    l.name = "vs:" + std::to_string(c + 1);
    links.push_back(l);
  }
  if (inst.mode == Mode::Wired) {
    for (int i = 0; i < (int)inst.wired_links.size(); ++i) {
      LinkRef l;
      l.kind = LinkKind::WiredReal;
      l.a = inst.wired_links[i].from;
      l.b = inst.wired_links[i].to;
      l.real_index = i;
      l.capacity = inst.wired_links[i].cap;
      l.name = inst.nodes[l.a] + ">" + inst.nodes[l.b];
      links.push_back(l);
    }
  } else {
    for (int i = 0; i < (int)inst.wireless_links.size(); ++i) {
      LinkRef l;
      l.kind = LinkKind::WirelessReal;
      l.a = inst.wireless_links[i].from;
      l.real_index = i;
      l.dsts = inst.wireless_links[i].dsts;
      for (const auto& rs : inst.rate_sets) l.capacity = std::max(l.capacity, rs[i]);
      l.name = inst.wireless_links[i].id;
      links.push_back(l);
    }
  }
  if (!routing_only) {
    for (int kind = 0; kind < (inst.mode == Mode::Wired ? 3 : 2); ++kind)
      for (int a = 0; a < N; ++a) {
        LinkRef l;
        l.kind = kind == 0   ? LinkKind::VirtualCoding
                 : kind == 1 ? LinkKind::VirtualDecoding
                             : LinkKind::VirtualBranching;
        l.a = a;
        l.capacity = consts.cbar / 2.0;
        l.name = (kind == 0 ? "code:" : kind == 1 ? "dec:" : "branch:") + inst.nodes[a];
        links.push_back(l);
      }
  }
  return links;
}

Catalog build_catalog(const ProblemInstance& inst, const LinkRef& link, bool routing_only) {
  CatalogOptions opts;
  opts.routing_only = routing_only;
  return build_catalog(inst, link, opts);
}

std::vector<std::vector<char>> admissible_tags(const ProblemInstance& inst, bool prune_tags) {
  const int N = inst.num_nodes();
  const int K = inst.num_sessions();
  std::vector<std::vector<char>> tags(std::max(1, K), std::vector<char>(N, 1));
  if (!prune_tags) return tags;

  std::vector<std::vector<int>> fwd(N), rev(N);
  auto arc = [&](int u, int v) {
    fwd[u].push_back(v);
    rev[v].push_back(u);
  };
  if (inst.mode == Mode::Wired) {
    for (const WiredLink& l : inst.wired_links) arc(l.from, l.to);
  } else {
    for (const WirelessLink& l : inst.wireless_links)
      for (int b : l.dsts) arc(l.from, b);
  }
  auto bfs = [&](int start, const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(N, 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    return seen;
  };
  for (int c = 0; c < K; ++c) {
    auto down = bfs(inst.sessions[c].src, fwd);
    auto up = bfs(inst.sessions[c].dst, rev);
    for (int v = 0; v < N; ++v) tags[c][v] = down[v] && up[v];
    tags[c][inst.sessions[c].src] = 1;  // the source tag always exists
  }
  return tags;
}

Catalog build_catalog(const ProblemInstance& inst, const LinkRef& link,
                      const CatalogOptions& opts) {
  CatalogBuilder cb;
  const int N = inst.num_nodes();
  const int K = inst.num_sessions();
  const bool routing_only = opts.routing_only;
  const TagSets tags = admissible_tags(inst, opts.prune_tags);
  switch (link.kind) {
    case LinkKind::VirtualSource: {
      int c = link.session;
      int s = inst.sessions[c].src;
      cb.add(make_pair1(QueueId::source_u(c), QueueId::uncoded(s, c, s), PairForm::SourceInject));
      break;
    }
    case LinkKind::WiredReal:
      add_transport_forms(cb, inst, link.a, link.b, routing_only, tags);
      break;
    case LinkKind::WirelessReal: {
      for (int b : link.dsts) add_transport_forms(cb, inst, link.a, b, routing_only, tags);
      if (routing_only) break;
      // Coded broadcast: advance uncoded c-data one hop while handing the
      // remedy it rides with to another receiver.
      for (int c = 0; c < K; ++c)
        for (int c2 = 0; c2 < K; ++c2) {
          if (c == c2) continue;
          for (int v = 0; v < N; ++v) {
            if (!tags[c][v] || !tags[c][link.a]) continue;
            for (int jn = 0; jn < N; ++jn)
              for (int b : link.dsts)
                for (int b2 : link.dsts) {
                  TransferPair p;
                  p.origins[0] = QueueId::uncoded(link.a, c, v);
                  p.origins[1] = QueueId::remedy(link.a, c2, c, jn);
                  p.n_origins = 2;
                  p.dests[0] = QueueId::uncoded(b, c, link.a);
                  p.dests[1] = QueueId::remedy(b2, c2, c, jn);
                  p.n_dests = 2;
                  p.form = PairForm::CodedBroadcast;
                  cb.add(p);
                }
          }
        }
      // Branching over the real link: the two reversed individual poisons
      // merge into joint poison at the transmitter.
      for (int c = 0; c < K; ++c)
        for (int c2 = c + 1; c2 < K; ++c2)
          for (int jn = 0; jn < N; ++jn)
            for (int b : link.dsts)
              for (int b2 : link.dsts) {
                TransferPair p;
                p.origins[0] = QueueId::indiv_poison(b, c, c2, jn);
                p.origins[1] = QueueId::indiv_poison(b2, c2, c, jn);
                p.n_origins = 2;
                p.dests[0] = QueueId::joint_poison(link.a, c, c2, jn);
                p.n_dests = 1;
                p.form = PairForm::WirelessBranch;
                cb.add(p);
              }
      break;
    }
    case LinkKind::VirtualCoding: {
      int a = link.a;
      for (int c = 0; c < K; ++c)
        for (int c2 = c + 1; c2 < K; ++c2)
          for (int v = 0; v < N; ++v)
            for (int v2 = 0; v2 < N; ++v2) {
              if (v == a || v2 == a) continue;
              if (!tags[c][v] || !tags[c2][v2]) continue;
              TransferPair p;
              p.origins[0] = QueueId::uncoded(a, c, v);
              p.origins[1] = QueueId::uncoded(a, c2, v2);
              p.n_origins = 2;
              p.dests[0] = QueueId::remedy(v2, c, c2, a);
              p.dests[1] = QueueId::remedy(v, c2, c, a);
              p.n_dests = 2;
              p.form = PairForm::Code;
              cb.add(p);
            }
      break;
    }
    case LinkKind::VirtualDecoding: {
      int a = link.a;
      for (int c = 0; c < K; ++c)
        for (int c2 = 0; c2 < K; ++c2) {
          if (c == c2) continue;
          for (int jn = 0; jn < N; ++jn) {
            if (jn == a) continue;
            if (!tags[c][jn]) continue;  // decoding re-tags to the coding node
            TransferPair p;
            p.origins[0] = QueueId::remedy(a, c, c2, jn);
            p.n_origins = 1;
            p.dests[0] = QueueId::indiv_poison(a, c, c2, jn);
            p.dests[1] = QueueId::uncoded(a, c, jn);
            p.n_dests = 2;
            p.form = PairForm::Decode;
            cb.add(p);
          }
        }
      break;
    }
    case LinkKind::VirtualBranching: {
      int a = link.a;
      for (int c = 0; c < K; ++c)
        for (int c2 = c + 1; c2 < K; ++c2)
          for (int jn = 0; jn < N; ++jn) {
            if (jn == a) continue;
            TransferPair p;
            p.origins[0] = QueueId::indiv_poison(a, c, c2, jn);
            p.origins[1] = QueueId::indiv_poison(a, c2, c, jn);
            p.n_origins = 2;
            p.dests[0] = QueueId::joint_poison(a, c, c2, jn);
            p.n_dests = 1;
            p.form = PairForm::Branch;
            cb.add(p);
          }
      break;
    }
  }
  return cb.take();
}

int Layout::subq_of_queue_link(const QueueId& q, int link) const {
  auto it = subq_lookup.find({q.key(), link});
  return it == subq_lookup.end() ? -1 : it->second;
}

namespace {

int session_pair_rank(int c, int c2, int K) {
  // rank of {c, c2} with c < c2 in lexicographic enumeration
  return c * (2 * K - c - 1) / 2 + (c2 - c - 1);
}

}  // namespace

Layout build_layout(const ProblemInstance& inst, const DerivedConstants& consts,
                    bool routing_only) {
  CatalogOptions opts;
  opts.routing_only = routing_only;
  return build_layout(inst, consts, opts);
}

Layout build_layout(const ProblemInstance& inst, const DerivedConstants& consts,
                    const CatalogOptions& opts) {
  const bool routing_only = opts.routing_only;
  Layout lay;
  lay.inst = inst;
  lay.consts = consts;
  lay.routing_only = routing_only;
  lay.prune_tags = opts.prune_tags;
  lay.links = build_links(inst, consts, routing_only);

  // Sentinel track: phi 0, always eligible. Keeps pair slots branch-free.
  lay.tracks.push_back(TrackInfo{});

  const int K = inst.num_sessions();
  std::map<std::uint64_t, int> queue_group_of;

  auto intern_subq = [&](const QueueId& q, int link, Role role) -> int {
    auto key = std::make_pair(q.key(), link);
    auto it = lay.subq_lookup.find(key);
    if (it != lay.subq_lookup.end()) {
      if (lay.subqueues[it->second].role != role)
        throw InvariantError("subqueue used as both origin and destination of one link: " +
                             q.str(inst.nodes));
      return it->second;
    }
    int idx = (int)lay.subqueues.size();
    SubqueueInfo si;
    si.queue = q;
    si.link = link;
    si.role = role;
    if (q.kind == QueueKind::JointPoison) {
      for (int twin = 0; twin < 2; ++twin) {
        TrackInfo t;
        t.subq = idx;
        t.session = twin == 0 ? q.c : q.c2;
        t.role = role;
        si.tracks[twin] = (std::int32_t)lay.tracks.size();
        lay.tracks.push_back(t);
      }
      si.n_tracks = 2;
    } else {
      TrackInfo t;
      t.subq = idx;
      t.session = q.c;
      t.role = role;
      si.tracks[0] = (std::int32_t)lay.tracks.size();
      si.n_tracks = 1;
      lay.tracks.push_back(t);
    }
    lay.subqueues.push_back(si);
    lay.subq_lookup[key] = idx;

    auto git = queue_group_of.find(q.key());
    if (git == queue_group_of.end()) {
      git = queue_group_of.emplace(q.key(), (int)lay.queue_groups.size()).first;
      lay.queue_groups.emplace_back();
    }
    lay.queue_groups[git->second].push_back(idx);
    return idx;
  };

  lay.catalogs.resize(lay.links.size());
  lay.slots.resize(lay.links.size());
  for (int li = 0; li < (int)lay.links.size(); ++li) {
    const LinkRef& link = lay.links[li];
    lay.catalogs[li] = build_catalog(inst, link, opts);
    LinkSlots& ls = lay.slots[li];
    if (link.kind == LinkKind::VirtualCoding)
      ls.n_groups = std::max(1, K * (K - 1) / 2);
    else if (link.kind == LinkKind::WirelessReal)
      ls.n_groups = 1 + std::max(0, K * (K - 1) / 2);
    for (int pi = 0; pi < (int)lay.catalogs[li].pairs.size(); ++pi) {
      const TransferPair& tp = lay.catalogs[li].pairs[pi];
      PairSlots slots;
      int ot = 0, dt = 0;
      for (int i = 0; i < tp.n_origins; ++i) {
        int sq = intern_subq(tp.origins[i], li, Role::Origin);
        slots.o_sq[i] = sq;
        for (int t = 0; t < lay.subqueues[sq].n_tracks; ++t) {
          if (ot >= 2) throw InvariantError("pair with more than two origin tracks");
          slots.o_tr[ot++] = lay.subqueues[sq].tracks[t];
        }
      }
      for (int i = 0; i < tp.n_dests; ++i) {
        int sq = intern_subq(tp.dests[i], li, Role::Destination);
        slots.d_sq[i] = sq;
        for (int t = 0; t < lay.subqueues[sq].n_tracks; ++t) {
          if (dt >= 2) throw InvariantError("pair with more than two destination tracks");
          slots.d_tr[dt++] = lay.subqueues[sq].tracks[t];
        }
      }
      // Session-pair groups back the sorted weight lists; the catch-all
      // group 0 holds plain transport forms.
      if (link.kind == LinkKind::VirtualCoding && tp.form == PairForm::Code) {
        int c = tp.origins[0].c, c2 = tp.origins[1].c;
        if (c > c2) std::swap(c, c2);
        slots.group = session_pair_rank(c, c2, K);
      } else if (link.kind == LinkKind::WirelessReal && tp.form == PairForm::CodedBroadcast) {
        int c = tp.origins[0].c, c2 = tp.origins[1].c;  // uncoded session / remedy session
        if (c > c2) std::swap(c, c2);
        slots.group = 1 + session_pair_rank(c, c2, K);
      }
      ls.pairs.push_back(slots);
      ls.o1.push_back(slots.o_tr[0]);
      ls.o2.push_back(slots.o_tr[1]);
      ls.d1.push_back(slots.d_tr[0]);
      ls.d2.push_back(slots.d_tr[1]);
      for (int t : {slots.o_tr[0], slots.o_tr[1], slots.d_tr[0], slots.d_tr[1]})
        if (t != 0) ls.track_pairs[t].push_back(pi);
    }
  }

  // Phase-3 removal targets: uncoded data at its sink, and poison that has
  // returned (reversed) to its coding node.
  for (int sq = 0; sq < (int)lay.subqueues.size(); ++sq) {
    const QueueId& q = lay.subqueues[sq].queue;
    if (q.kind == QueueKind::Uncoded) {
      if (inst.sessions[q.c].dst == q.node) lay.removals.push_back({sq, q.c});
    } else if (q.kind == QueueKind::IndivPoison || q.kind == QueueKind::JointPoison) {
      if (q.node == q.tag) lay.removals.push_back({sq, -1});
    }
  }

  lay.source_subq.assign(K, -1);
  for (int c = 0; c < K; ++c) lay.source_subq[c] = lay.subq_of_queue_link(QueueId::source_u(c), c);

  return lay;
}

std::vector<int> eligible_pairs(const Layout& layout, int link, const std::vector<double>& approx) {
  std::vector<int> out;
  const LinkSlots& ls = layout.slots[link];
  const auto& consts = layout.consts;
  auto origin_ok = [&](std::int32_t tr) {
    return tr == 0 || approx[tr] > 0.0;
  };
  auto dest_ok = [&](std::int32_t tr) {
    return tr == 0 || approx[tr] < consts.threshold[layout.tracks[tr].session];
  };
  for (int pi = 0; pi < (int)ls.pairs.size(); ++pi) {
    const PairSlots& p = ls.pairs[pi];
    if (origin_ok(p.o_tr[0]) && origin_ok(p.o_tr[1]) && dest_ok(p.d_tr[0]) && dest_ok(p.d_tr[1]))
      out.push_back(pi);
  }
  return out;
}

}  // namespace xorflow
