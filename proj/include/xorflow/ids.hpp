#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace xorflow {

// Queue taxonomy. Sessions and nodes are dense 0-based indices into the
// problem instance; sessions are rendered 1-based in external output.
//
//   SourceU(c)            U^c        source queue at s_c
//   Overflow(c)           Ubar^c     per-session overflow (outside the network)
//   Uncoded(i,c,v)        U_i^{cv}   uncoded session-c data previously at v
//   JointPoison(i,{c,c'},j)  P_i^{{c,c'}j}  coded at j, meant for both sinks
//   IndivPoison(i,c,c',j)    P_i^{cc'j}     coded at j, meant for sink d_c
//   Remedy(i,c,c',j)         R_i^{cc'j}     remedy for session c coded at j
enum class QueueKind : std::uint8_t {
  SourceU = 0,
  Overflow = 1,
  Uncoded = 2,
  JointPoison = 3,
  IndivPoison = 4,
  Remedy = 5,
};

enum class Role : std::uint8_t { Origin = 0, Destination = 1 };

struct QueueId {
  QueueKind kind = QueueKind::SourceU;
  std::int16_t node = -1;  // i, where the data sits
  std::int16_t c = -1;     // session (JointPoison: the smaller of the pair)
  std::int16_t c2 = -1;    // partner session, -1 when not applicable
  std::int16_t tag = -1;   // Uncoded: v; poison/remedy: coding node j

  static QueueId source_u(int c) { return {QueueKind::SourceU, -1, (std::int16_t)c, -1, -1}; }
  static QueueId overflow(int c) { return {QueueKind::Overflow, -1, (std::int16_t)c, -1, -1}; }
  static QueueId uncoded(int i, int c, int v) {
    return {QueueKind::Uncoded, (std::int16_t)i, (std::int16_t)c, -1, (std::int16_t)v};
  }
  // Canonicalizes the unordered session pair as c < c2.
  static QueueId joint_poison(int i, int ca, int cb, int j) {
    if (ca > cb) std::swap(ca, cb);
    return {QueueKind::JointPoison, (std::int16_t)i, (std::int16_t)ca, (std::int16_t)cb, (std::int16_t)j};
  }
  static QueueId indiv_poison(int i, int c, int cp, int j) {
    return {QueueKind::IndivPoison, (std::int16_t)i, (std::int16_t)c, (std::int16_t)cp, (std::int16_t)j};
  }
  static QueueId remedy(int i, int c, int cp, int j) {
    return {QueueKind::Remedy, (std::int16_t)i, (std::int16_t)c, (std::int16_t)cp, (std::int16_t)j};
  }

  std::uint64_t key() const {
    auto u = [](std::int16_t x) { return (std::uint64_t)(x + 1); };
    std::uint64_t k = (std::uint64_t)kind;
    k = k * 1024 + u(node);
    k = k * 512 + u(c);
    k = k * 512 + u(c2);
    k = k * 1024 + u(tag);
    return k;
  }
  bool operator==(const QueueId& o) const { return key() == o.key(); }
  bool operator<(const QueueId& o) const { return key() < o.key(); }

  std::string str(const std::vector<std::string>& nodes) const;
};

}  // namespace xorflow
