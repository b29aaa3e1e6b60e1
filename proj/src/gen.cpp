#include "xorflow/gen.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace xorflow {

namespace {

ProblemInstance revalidate(const ProblemInstance& inst) {
  // Round-trips through the parser so generated fixtures get the same
  // validation and capacity capping as user files.
  return parse_instance(inst.to_json_text());
}

}  // namespace

ProblemInstance gen_line(int n_nodes, double rate, double cap) {
  if (n_nodes < 2) throw ConfigError("line fixture needs at least 2 nodes");
  ProblemInstance inst;
  inst.mode = Mode::Wired;
  for (int i = 0; i < n_nodes; ++i) inst.nodes.push_back("v" + std::to_string(i));
  for (int i = 0; i + 1 < n_nodes; ++i) inst.wired_links.push_back({i, i + 1, cap});
  inst.sessions.push_back({0, n_nodes - 1, rate});
  return revalidate(inst);
}

ProblemInstance gen_two_unicast_poison(double rate) {
  ProblemInstance inst;
  inst.mode = Mode::Wired;
  inst.nodes = {"s1", "s2", "a", "b", "d1", "d2"};
  const int s1 = 0, s2 = 1, a = 2, b = 3, d1 = 4, d2 = 5;
  for (auto [f, t] : {std::pair{s1, a}, {s2, a}, {a, b}, {b, d1}, {b, d2}, {s1, d2}, {s2, d1}})
    inst.wired_links.push_back({f, t, 1.0});
  inst.sessions.push_back({s1, d1, rate});
  inst.sessions.push_back({s2, d2, rate});
  return revalidate(inst);
}

ProblemInstance gen_reverse_carpool(double rate) {
  ProblemInstance inst;
  inst.mode = Mode::Wireless;
  inst.nodes = {"A", "B", "C"};
  const int A = 0, B = 1, C = 2;
  inst.wireless_links.push_back({"lA", A, {B}});
  inst.wireless_links.push_back({"lB", B, {A, C}});
  inst.wireless_links.push_back({"lC", C, {B}});
  // One rate set per transmitting node, unit rate.
  inst.rate_sets.push_back({1.0, 0.0, 0.0});
  inst.rate_sets.push_back({0.0, 1.0, 0.0});
  inst.rate_sets.push_back({0.0, 0.0, 1.0});
  inst.sessions.push_back({A, C, rate});
  inst.sessions.push_back({C, A, rate});
  return revalidate(inst);
}

ProblemInstance gen_random(std::uint64_t seed, int n_nodes, int n_sessions, Mode mode) {
  if (n_nodes < 2) throw ConfigError("random fixture needs at least 2 nodes");
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * (double)(rng() >> 11) * 0x1.0p-53;
  };
  auto pick = [&](int n) { return (int)(rng() % (std::uint64_t)n); };

  ProblemInstance inst;
  inst.mode = mode;
  for (int i = 0; i < n_nodes; ++i) inst.nodes.push_back("n" + std::to_string(i));

  if (mode == Mode::Wired) {
    std::set<std::pair<int, int>> edges;
    for (int i = 0; i < n_nodes; ++i) edges.insert({i, (i + 1) % n_nodes});  // ring
    int extra = n_nodes;
    while (extra-- > 0) {
      int u = pick(n_nodes), v = pick(n_nodes);
      if (u != v) edges.insert({u, v});
    }
    for (auto [u, v] : edges) inst.wired_links.push_back({u, v, uni(0.5, 1.5)});
  } else {
    for (int i = 0; i < n_nodes; ++i) {
      inst.wireless_links.push_back(
          {"w" + std::to_string(i), i, {(i + 1) % n_nodes}});
    }
    // A couple of two-receiver broadcast links.
    for (int i = 0; i < std::min(2, n_nodes - 2); ++i) {
      int a = pick(n_nodes);
      int b1 = (a + 1) % n_nodes, b2 = (a + n_nodes - 1) % n_nodes;
      if (b1 == b2) continue;
      inst.wireless_links.push_back(
          {"wb" + std::to_string(i) + "_" + std::to_string(a), a, {b1, b2}});
    }
    // Singleton-transmitter rate sets: one per link.
    for (size_t li = 0; li < inst.wireless_links.size(); ++li) {
      std::vector<double> rs(inst.wireless_links.size(), 0.0);
      rs[li] = 1.0;
      inst.rate_sets.push_back(rs);
    }
  }

  for (int c = 0; c < n_sessions; ++c) {
    int s = pick(n_nodes), d = pick(n_nodes);
    while (d == s) d = pick(n_nodes);
    inst.sessions.push_back({s, d, 0.05 * (1 + pick(8))});
  }
  return revalidate(inst);
}

ProblemInstance gen_by_name(const std::string& name, double rate, int n_nodes, int n_sessions,
                            std::uint64_t seed, Mode mode) {
  if (name == "line") return gen_line(n_nodes < 2 ? 2 : n_nodes, rate, 1.0);
  if (name == "two-unicast-poison") return gen_two_unicast_poison(rate);
  if (name == "reverse-carpool") return gen_reverse_carpool(rate);
  if (name == "random") return gen_random(seed, n_nodes < 2 ? 4 : n_nodes,
                                          n_sessions < 1 ? 2 : n_sessions, mode);
  throw ConfigError("unknown fixture '" + name + "'");
}

}  // namespace xorflow
