#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xorflow/ids.hpp"
#include "xorflow/netmodel.hpp"

namespace xorflow {

enum class LinkKind : std::uint8_t {
  VirtualSource = 0,
  WiredReal = 1,
  WirelessReal = 2,
  VirtualCoding = 3,
  VirtualDecoding = 4,
  VirtualBranching = 5,
};

struct LinkRef {
  LinkKind kind = LinkKind::WiredReal;
  int a = -1;          // tail / origin node (virtual: host node)
  int b = -1;          // head node (wired real only)
  int session = -1;    // virtual source only
  int real_index = -1; // index into instance link list (real links)
  double capacity = 0; // round budget; wireless real links are timeshared instead
  std::vector<int> dsts;  // wireless destination set Z
  std::string name;
};

// Which bullet of the catalog a pair came from; fixes its export family.
enum class PairForm : std::uint8_t {
  SourceInject = 0,   // U^c -> U_{s_c}^{c s_c}
  UncodedKeep = 1,    // U_a^{cv} -> U_b^{cv}                (nu)
  UncodedRetag = 2,   // U_a^{cv} -> U_b^{ca}                (nu_retag)
  JointPoisonRev = 3, // P_b^{{c,c'}j} -> P_a^{{c,c'}j}      (pi_joint, reversed)
  IndivPoisonRev = 4, // P_b^{cc'j} -> P_a^{cc'j}            (pi_indiv, reversed)
  RemedyFwd = 5,      // R_a^{cc'j} -> R_b^{cc'j}            (rho)
  Code = 6,           // (U_a^{cv},U_a^{c'v'}) -> (R_{v'}^{cc'a},R_v^{c'ca})
  Decode = 7,         // R_a^{cc'j} -> (P_a^{cc'j},U_a^{cj})
  Branch = 8,         // (P_a^{cc'j},P_a^{c'cj}) -> P_a^{{c,c'}j}
  CodedBroadcast = 9, // (U_a^{cv},R_a^{c'cj}) -> (U_b^{ca},R_{b'}^{c'cj})
  WirelessBranch = 10 // (P_b^{cc'j},P_{b'}^{c'cj}) -> P_a^{{c,c'}j}
};

// Pushing f units removes f from EACH origin and adds f to EACH destination.
struct TransferPair {
  std::array<QueueId, 2> origins{};
  std::array<QueueId, 2> dests{};
  int n_origins = 0;
  int n_dests = 0;
  PairForm form = PairForm::UncodedKeep;
};

struct Catalog {
  std::vector<TransferPair> pairs;  // canonical order (sorted by pair encoding)
};

// Links in canonical id order: virtual sources, real links, then per-node
// coding / decoding / branching (branching is wired-only). routing_only drops
// every coded form, leaving uncoded transport plus the virtual sources.
std::vector<LinkRef> build_links(const ProblemInstance& inst, const DerivedConstants& consts,
                                 bool routing_only);

struct CatalogOptions {
  bool routing_only = false;
  // Restrict uncoded tags v to nodes on some s_c -> d_c path. Shrinks the
  // index space; on instances where every node lies on a session path the
  // catalogs are unchanged (see the equivalence tests).
  bool prune_tags = false;
};

// Per-session admissible tag sets under pruning (all nodes when disabled).
std::vector<std::vector<char>> admissible_tags(const ProblemInstance& inst, bool prune_tags);

Catalog build_catalog(const ProblemInstance& inst, const LinkRef& link, bool routing_only);
Catalog build_catalog(const ProblemInstance& inst, const LinkRef& link,
                      const CatalogOptions& opts);

// ---------------------------------------------------------------------------
// Interned layout: every (queue, link) subqueue and its session tracks get
// dense indices so round execution runs over flat arrays. Track 0 is a
// sentinel (phi = 0, always-eligible) used for absent pair slots.
// ---------------------------------------------------------------------------

struct SubqueueInfo {
  QueueId queue;
  std::int32_t link = -1;
  Role role = Role::Origin;
  std::array<std::int32_t, 2> tracks{{0, 0}};  // track ids; joint poison has two
  int n_tracks = 0;
};

struct TrackInfo {
  std::int32_t subq = -1;
  std::int16_t session = -1;
  Role role = Role::Origin;
};

struct PairSlots {
  std::array<std::int32_t, 2> o_tr{{0, 0}};  // origin tracks (0 = unused slot)
  std::array<std::int32_t, 2> d_tr{{0, 0}};
  std::array<std::int32_t, 2> o_sq{{-1, -1}};  // distinct origin subqueues
  std::array<std::int32_t, 2> d_sq{{-1, -1}};
  std::int32_t group = 0;
};

// SoA pair-slot arrays for one link, the scan kernels' input layout.
struct LinkSlots {
  std::vector<std::int32_t> o1, o2, d1, d2;  // track ids per pair
  std::vector<PairSlots> pairs;
  std::vector<std::vector<std::int32_t>> postings;  // local track list -> pair idxs
  std::map<std::int32_t, std::vector<std::int32_t>> track_pairs;  // track -> pairs of this link
  int n_groups = 1;
};

struct RemovalEntry {
  std::int32_t subq = -1;
  int deliver_session = -1;  // >= 0 when zeroing counts as delivery (uncoded at sink)
};

struct Layout {
  ProblemInstance inst;
  DerivedConstants consts;
  bool routing_only = false;
  bool prune_tags = false;

  std::vector<LinkRef> links;
  std::vector<Catalog> catalogs;   // aligned with links
  std::vector<LinkSlots> slots;    // aligned with links

  std::vector<SubqueueInfo> subqueues;
  std::vector<TrackInfo> tracks;   // [0] is the sentinel

  std::vector<std::vector<std::int32_t>> queue_groups;  // subqueues per queue (for rebalance)
  std::vector<RemovalEntry> removals;                   // phase-3 zeroing targets
  std::vector<std::int32_t> source_subq;                // per session: U^c subqueue
  std::map<std::pair<std::uint64_t, int>, int> subq_lookup;

  int subq_of_queue_link(const QueueId& q, int link) const;  // -1 if absent
};

Layout build_layout(const ProblemInstance& inst, const DerivedConstants& consts,
                    bool routing_only);
Layout build_layout(const ProblemInstance& inst, const DerivedConstants& consts,
                    const CatalogOptions& opts);

// The per-round eligibility filter: a pair qualifies when every origin track
// has positive approximate length and every destination track sits strictly
// below Br_c + ln((L+1)rho)/alpha_c + 3 p_c. `approx` is indexed by track.
std::vector<int> eligible_pairs(const Layout& layout, int link, const std::vector<double>& approx);

}  // namespace xorflow
