#include "xorflow/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "xorflow/common.hpp"

namespace xorflow {

namespace {

// One hop of a path: an arc index (wired) or a (link, receiver) choice
// (wireless); `cap_index` names the capacity bucket the hop consumes.
struct Hop {
  int from = -1;
  int to = -1;
  int cap_index = -1;
};

using Path = std::vector<Hop>;

struct PathEnum {
  const std::vector<std::vector<Hop>>& out;  // per node
  int max_hops;
  int max_paths;
  std::vector<Path> result;
  std::vector<char> visited;
  Path cur;

  void dfs(int at, int target) {
    if (at == target) {
      result.push_back(cur);
      if ((int)result.size() > max_paths) throw OracleRefusal("path enumeration exceeded cap");
      return;
    }
    if ((int)cur.size() >= max_hops) return;
    for (const Hop& h : out[at]) {
      if (visited[h.to]) continue;
      visited[h.to] = 1;
      cur.push_back(h);
      dfs(h.to, target);
      cur.pop_back();
      visited[h.to] = 0;
    }
  }
};

std::vector<Path> simple_paths(const std::vector<std::vector<Hop>>& out, int n_nodes, int s, int t,
                               int max_hops, int max_paths) {
  PathEnum pe{out, max_hops, max_paths, {}, std::vector<char>(n_nodes, 0), {}};
  if (s == t) return {Path{}};
  pe.visited[s] = 1;
  pe.dfs(s, t);
  return pe.result;
}

// A grid variable: pushing one grid unit consumes `usage` per capacity bucket
// and delivers one unit to each session in `serves`.
struct Var {
  std::vector<std::pair<int, double>> usage;  // (cap_index, amount per unit flow)
  std::vector<int> serves;
  // Emission recipe, evaluated once a full assignment is found.
  int kind = 0;  // 0: routing path, 1: coded structure
  int c = -1, c2 = -1, j = -1, b = -1;
  Path path_a, path_b, joint, indiv_a, indiv_b, rem_a, rem_b;
};

void add_usage(Var& v, const Path& p) {
  for (const Hop& h : p) v.usage.push_back({h.cap_index, 1.0});
}

void consolidate_usage(Var& v) {
  std::sort(v.usage.begin(), v.usage.end());
  std::vector<std::pair<int, double>> merged;
  for (const auto& [ci, amt] : v.usage) {
    if (!merged.empty() && merged.back().first == ci)
      merged.back().second += amt;
    else
      merged.push_back({ci, amt});
  }
  v.usage = std::move(merged);
}

void emit_uncoded_chain(SolutionVariables& sol, const ProblemInstance& inst, const Path& p, int c,
                        double f) {
  int tag = inst.sessions[c].src;
  for (const Hop& h : p) {
    sol.nu_retag[LinkVarKey{h.from, h.to, c, -1, tag}] += f;
    tag = h.from;
  }
}

int chain_tag(const ProblemInstance& inst, const Path& p, int c) {
  return p.empty() ? inst.sessions[c].src : p.back().from;
}

void emit_structure(SolutionVariables& sol, const ProblemInstance& inst, const Var& v, double f) {
  const int cmin = std::min(v.c, v.c2), cmax = std::max(v.c, v.c2);
  emit_uncoded_chain(sol, inst, v.path_a, v.c, f);
  emit_uncoded_chain(sol, inst, v.path_b, v.c2, f);
  const int tag_a = chain_tag(inst, v.path_a, v.c);
  const int tag_b = chain_tag(inst, v.path_b, v.c2);
  NodeVarKey gk{v.j, cmin, v.c == cmin ? tag_a : tag_b, cmax, v.c == cmin ? tag_b : tag_a, -1};
  sol.gamma[gk] += f;
  for (const Hop& h : v.joint) sol.pi_joint[LinkVarKey{h.from, h.to, cmin, cmax, v.j}] += f;
  if (v.b != v.j) sol.sigma[NodeVarKey{v.b, cmin, -1, cmax, -1, v.j}] += f;
  for (const Hop& h : v.indiv_a) sol.pi_indiv[LinkVarKey{h.from, h.to, v.c, v.c2, v.j}] += f;
  for (const Hop& h : v.indiv_b) sol.pi_indiv[LinkVarKey{h.from, h.to, v.c2, v.c, v.j}] += f;
  for (const Hop& h : v.rem_a) sol.rho[LinkVarKey{h.from, h.to, v.c, v.c2, v.j}] += f;
  for (const Hop& h : v.rem_b) sol.rho[LinkVarKey{h.from, h.to, v.c2, v.c, v.j}] += f;
  sol.eta[NodeVarKey{inst.sessions[v.c].dst, v.c, -1, v.c2, -1, v.j}] += f;
  sol.eta[NodeVarKey{inst.sessions[v.c2].dst, v.c2, -1, v.c, -1, v.j}] += f;
}

struct Search {
  const ProblemInstance& inst;
  const std::vector<double>& rates;
  const OracleOptions& opts;
  std::vector<Var> vars;
  std::vector<double> cap;  // per capacity bucket
  std::vector<int> need;    // grid units per session
  std::uint64_t states = 0;
  std::vector<int> chosen;

  Search(const ProblemInstance& i, const std::vector<double>& r, const OracleOptions& o)
      : inst(i), rates(r), opts(o) {}

  int max_units_of(const Var& v) const {
    int demand_cap = 1 << 28;
    for (int c : v.serves) demand_cap = std::min(demand_cap, need[c]);
    double cap_units = (double)demand_cap;
    for (const auto& [ci, amt] : v.usage)
      cap_units = std::min(cap_units, cap[ci] / (amt * opts.grid) + kTol);
    return std::max(0, std::min(demand_cap, (int)std::floor(cap_units)));
  }

  bool demand_reachable(size_t vi) const {
    for (int c = 0; c < (int)need.size(); ++c) {
      if (need[c] == 0) continue;
      bool offered = false;
      for (size_t w = vi; w < vars.size() && !offered; ++w)
        for (int cc : vars[w].serves) offered |= cc == c;
      if (!offered) return false;
    }
    return true;
  }

  bool dfs(size_t vi) {
    if (++states > opts.max_states)
      throw OracleRefusal("grid search exceeded " + std::to_string(opts.max_states) + " states");
    // Skip forward over variables that cannot take positive flow here.
    int max_units = 0;
    while (true) {
      bool all_met = true;
      for (int n : need) all_met &= n == 0;
      if (all_met) return true;  // later variables stay zero
      if (vi == vars.size()) return false;
      max_units = max_units_of(vars[vi]);
      if (max_units > 0) break;
      ++vi;
    }
    const Var& v = vars[vi];
    for (int u = max_units; u >= 0; --u) {
      const double f = u * opts.grid;
      for (const auto& [ci, amt] : v.usage) cap[ci] -= amt * f;
      for (int c : v.serves) need[c] -= u;
      if (demand_reachable(vi + 1) && dfs(vi + 1)) {
        chosen[vi] = u;
        return true;
      }
      for (const auto& [ci, amt] : v.usage) cap[ci] += amt * f;
      for (int c : v.serves) need[c] += u;
    }
    return false;
  }
};

OracleOutcome finish(const ProblemInstance& inst, const std::vector<double>& rates,
                     const OracleOptions& opts, Search& s,
                     const std::vector<double>* lambda = nullptr,
                     const std::vector<double>* link_caps = nullptr) {
  OracleOutcome out;
  out.states = s.states;
  SolutionVariables sol;
  sol.rates = rates;
  std::vector<double> link_flow(link_caps ? link_caps->size() : 0, 0.0);
  for (size_t vi = 0; vi < s.vars.size(); ++vi) {
    const double f = s.chosen[vi] * opts.grid;
    if (f == 0.0) continue;
    const Var& v = s.vars[vi];
    if (v.kind == 0)
      emit_uncoded_chain(sol, inst, v.path_a, v.c, f);
    else
      emit_structure(sol, inst, v, f);
    if (link_caps)
      for (const auto& [ci, amt] : v.usage) link_flow[ci] += amt * f;
  }
  if (lambda) {
    sol.lambda_avg = *lambda;
    sol.link_cap_avg = *link_caps;
    sol.link_flow_avg = link_flow;
  }
  VerificationReport rep = verify(inst, sol, rates, opts.grid);
  if (!rep.pass)
    throw InvariantError("oracle assembled a witness that fails verification: max residual " +
                         std::to_string(rep.max_abs_residual));
  out.feasible = true;
  out.witness = sol;
  return out;
}

OracleOutcome search_wired(const ProblemInstance& inst, const std::vector<double>& rates,
                           const OracleOptions& opts) {
  const int N = inst.num_nodes();
  const int K = inst.num_sessions();
  std::vector<std::vector<Hop>> out(N);
  std::vector<double> caps;
  for (int li = 0; li < (int)inst.wired_links.size(); ++li) {
    const WiredLink& l = inst.wired_links[li];
    out[l.from].push_back({l.from, l.to, li});
    caps.push_back(l.cap);
  }

  Search s{inst, rates, opts};
  s.cap = caps;
  for (int c = 0; c < K; ++c) {
    s.need.push_back((int)std::ceil(rates[c] / opts.grid - kTol));
    auto paths = simple_paths(out, N, inst.sessions[c].src, inst.sessions[c].dst,
                              opts.max_path_hops, opts.max_paths);
    for (auto& p : paths) {
      Var v;
      v.kind = 0;
      v.c = c;
      v.serves = {c};
      v.path_a = p;
      add_usage(v, p);
      consolidate_usage(v);
      s.vars.push_back(std::move(v));
    }
  }

  // Coded structures with identical arc usage are interchangeable for
  // feasibility; keep the first of each usage class.
  std::map<std::pair<std::vector<std::pair<int, double>>, std::vector<int>>, int> usage_seen;

  if (!opts.routing_only) {
    for (int c = 0; c < K; ++c)
      for (int c2 = c + 1; c2 < K; ++c2) {
        const int sA = inst.sessions[c].src, dA = inst.sessions[c].dst;
        const int sB = inst.sessions[c2].src, dB = inst.sessions[c2].dst;
        for (int j = 0; j < N; ++j) {
          auto pathsA = simple_paths(out, N, sA, j, opts.max_path_hops, opts.max_paths);
          auto pathsB = simple_paths(out, N, sB, j, opts.max_path_hops, opts.max_paths);
          for (const Path& pa : pathsA)
            for (const Path& pb : pathsB) {
              const int tag_a = pa.empty() ? sA : pa.back().from;
              const int tag_b = pb.empty() ? sB : pb.back().from;
              if (tag_a == j || tag_b == j || pa.empty() || pb.empty()) continue;
              for (int b = 0; b < N; ++b) {
                auto joints = simple_paths(out, N, j, b, opts.max_path_hops, opts.max_paths);
                for (const Path& pj : joints) {
                  auto indA = simple_paths(out, N, b, dA, opts.max_path_hops, opts.max_paths);
                  auto indB = simple_paths(out, N, b, dB, opts.max_path_hops, opts.max_paths);
                  auto remA = simple_paths(out, N, tag_b, dA, opts.max_path_hops, opts.max_paths);
                  auto remB = simple_paths(out, N, tag_a, dB, opts.max_path_hops, opts.max_paths);
                  for (const Path& ia : indA)
                    for (const Path& ib : indB)
                      for (const Path& ra : remA)
                        for (const Path& rb : remB) {
                          Var v;
                          v.kind = 1;
                          v.c = c;
                          v.c2 = c2;
                          v.j = j;
                          v.b = b;
                          v.path_a = pa;
                          v.path_b = pb;
                          v.joint = pj;
                          v.indiv_a = ia;
                          v.indiv_b = ib;
                          v.rem_a = ra;
                          v.rem_b = rb;
                          v.serves = {c, c2};
                          for (const Path* p : {&pa, &pb, &pj, &ia, &ib, &ra, &rb})
                            add_usage(v, *p);
                          consolidate_usage(v);
                          auto key = std::make_pair(v.usage, v.serves);
                          if (!usage_seen.emplace(key, 1).second) continue;
                          s.vars.push_back(std::move(v));
                          if ((int)s.vars.size() > opts.max_structures)
                            throw OracleRefusal(
                                "coded-structure enumeration exceeded cap at " +
                                std::to_string(s.vars.size()) + " variables");
                        }
                }
              }
            }
        }
      }
  }

  s.chosen.assign(s.vars.size(), 0);
  if (s.dfs(0)) return finish(inst, rates, opts, s);
  OracleOutcome out_res;
  out_res.states = s.states;
  out_res.feasible = false;
  return out_res;
}

OracleOutcome search_wireless_routing(const ProblemInstance& inst, const std::vector<double>& rates,
                                      const OracleOptions& opts) {
  const int N = inst.num_nodes();
  const int K = inst.num_sessions();
  const int U = (int)inst.rate_sets.size();
  const int M = (int)inst.wireless_links.size();
  const int levels = (int)std::floor(1.0 / opts.grid + kTol);

  // Enumerate timeshare compositions sum(lambda) <= 1 on the grid.
  std::vector<std::vector<double>> lambdas;
  std::vector<double> cur(U, 0.0);
  auto rec = [&](auto&& self, int u, int left) -> void {
    if (u == U) {
      lambdas.push_back(cur);
      return;
    }
    for (int take = left; take >= 0; --take) {
      cur[u] = take * opts.grid;
      self(self, u + 1, left - take);
    }
    cur[u] = 0.0;
  };
  rec(rec, 0, levels);
  if ((std::uint64_t)lambdas.size() > opts.max_states)
    throw OracleRefusal("timeshare grid too large: " + std::to_string(lambdas.size()));

  std::vector<std::vector<Hop>> out(N);
  for (int li = 0; li < M; ++li)
    for (int b : inst.wireless_links[li].dsts)
      out[inst.wireless_links[li].from].push_back({inst.wireless_links[li].from, b, li});

  std::uint64_t states = 0;
  for (const auto& lam : lambdas) {
    std::vector<double> caps(M, 0.0);
    for (int u = 0; u < U; ++u)
      for (int li = 0; li < M; ++li) caps[li] += lam[u] * inst.rate_sets[u][li];
    Search s{inst, rates, opts};
    s.cap = caps;
    s.states = states;
    for (int c = 0; c < K; ++c) {
      s.need.push_back((int)std::ceil(rates[c] / opts.grid - kTol));
      auto paths = simple_paths(out, N, inst.sessions[c].src, inst.sessions[c].dst,
                                opts.max_path_hops, opts.max_paths);
      for (auto& p : paths) {
        Var v;
        v.kind = 0;
        v.c = c;
        v.serves = {c};
        v.path_a = p;
        add_usage(v, p);
        s.vars.push_back(std::move(v));
      }
    }
    s.chosen.assign(s.vars.size(), 0);
    if (s.dfs(0)) return finish(inst, rates, opts, s, &lam, &caps);
    states = s.states;
  }
  OracleOutcome out_res;
  out_res.states = states;
  out_res.feasible = false;
  return out_res;
}

}  // namespace

OracleOutcome oracle_search(const ProblemInstance& inst, const std::vector<double>& rates,
                            const OracleOptions& opts) {
  if ((int)rates.size() != inst.num_sessions()) throw ConfigError("rates size mismatch");
  if (!(opts.grid > 0)) throw ConfigError("grid must be positive");
  if (inst.mode == Mode::Wireless) {
    if (!opts.routing_only)
      throw OracleRefusal("wireless coded search is not supported; rerun with routing-only");
    return search_wireless_routing(inst, rates, opts);
  }
  return search_wired(inst, rates, opts);
}

}  // namespace xorflow
