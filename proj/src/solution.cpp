#include "xorflow/solution.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace xorflow {

using nlohmann::json;

namespace {

template <typename K>
void bump(std::map<K, double>& m, const K& k, double v) {
  if (v != 0.0) m[k] += v;
}

template <typename K>
double get(const std::map<K, double>& m, const K& k) {
  auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

NodeVarKey gamma_key(int a, int cA, int vA, int cB, int vB) {
  if (cA > cB) {
    std::swap(cA, cB);
    std::swap(vA, vB);
  }
  return NodeVarKey{a, cA, vA, cB, vB, -1};
}

}  // namespace

SolutionVariables average_flows(const Layout& layout,
                                const std::vector<std::vector<double>>& cum_flow, std::int64_t t,
                                const std::vector<double>& delivered) {
  if (t <= 0) throw ConfigError("averaging requires at least one round");
  SolutionVariables sol;
  sol.rates = delivered;
  for (int li = 0; li < (int)layout.links.size(); ++li) {
    const LinkRef& link = layout.links[li];
    const Catalog& cat = layout.catalogs[li];
    for (int pi = 0; pi < (int)cat.pairs.size(); ++pi) {
      const double f = cum_flow[li][pi] / (double)t;
      if (f == 0.0) continue;
      const TransferPair& tp = cat.pairs[pi];
      switch (tp.form) {
        case PairForm::SourceInject:
          break;  // virtual source flow is the termination accounting, not a variable
        case PairForm::UncodedKeep:
          bump(sol.nu, LinkVarKey{tp.origins[0].node, tp.dests[0].node, tp.origins[0].c, -1,
                                  tp.origins[0].tag},
               f);
          break;
        case PairForm::UncodedRetag:
          bump(sol.nu_retag, LinkVarKey{tp.origins[0].node, tp.dests[0].node, tp.origins[0].c, -1,
                                        tp.origins[0].tag},
               f);
          break;
        case PairForm::JointPoisonRev:
          // Push moves b -> a over link (a,b); exported forward as (a,b).
          bump(sol.pi_joint, LinkVarKey{tp.dests[0].node, tp.origins[0].node, tp.origins[0].c,
                                        tp.origins[0].c2, tp.origins[0].tag},
               f);
          break;
        case PairForm::IndivPoisonRev:
          bump(sol.pi_indiv, LinkVarKey{tp.dests[0].node, tp.origins[0].node, tp.origins[0].c,
                                        tp.origins[0].c2, tp.origins[0].tag},
               f);
          break;
        case PairForm::RemedyFwd:
          bump(sol.rho, LinkVarKey{tp.origins[0].node, tp.dests[0].node, tp.origins[0].c,
                                   tp.origins[0].c2, tp.origins[0].tag},
               f);
          break;
        case PairForm::Code:
          bump(sol.gamma,
               gamma_key(link.a, tp.origins[0].c, tp.origins[0].tag, tp.origins[1].c,
                         tp.origins[1].tag),
               f);
          break;
        case PairForm::Decode:
          bump(sol.eta,
               NodeVarKey{link.a, tp.origins[0].c, -1, tp.origins[0].c2, -1, tp.origins[0].tag},
               f);
          break;
        case PairForm::Branch:
          bump(sol.sigma,
               NodeVarKey{link.a, tp.dests[0].c, -1, tp.dests[0].c2, -1, tp.dests[0].tag}, f);
          break;
        case PairForm::CodedBroadcast: {
          // dests are canonically sorted: Uncoded before Remedy.
          const QueueId& udest = tp.dests[0].kind == QueueKind::Uncoded ? tp.dests[0] : tp.dests[1];
          const QueueId& rdest = tp.dests[0].kind == QueueKind::Remedy ? tp.dests[0] : tp.dests[1];
          const QueueId& uorig =
              tp.origins[0].kind == QueueKind::Uncoded ? tp.origins[0] : tp.origins[1];
          const QueueId& rorig =
              tp.origins[0].kind == QueueKind::Remedy ? tp.origins[0] : tp.origins[1];
          bump(sol.nu_retag, LinkVarKey{link.a, udest.node, uorig.c, -1, uorig.tag}, f);
          bump(sol.rho, LinkVarKey{link.a, rdest.node, rorig.c, rorig.c2, rorig.tag}, f);
          break;
        }
        case PairForm::WirelessBranch: {
          const QueueId& joint = tp.dests[0];
          bump(sol.sigma, NodeVarKey{link.a, joint.c, -1, joint.c2, -1, joint.tag}, f);
          for (int oi = 0; oi < 2; ++oi) {
            const QueueId& ip = tp.origins[oi];
            bump(sol.pi_indiv, LinkVarKey{link.a, ip.node, ip.c, ip.c2, ip.tag}, f);
          }
          break;
        }
      }
    }
  }
  return sol;
}

// --- JSON -------------------------------------------------------------------

namespace {

json link_entries(const ProblemInstance& inst, const std::map<LinkVarKey, double>& m,
                  bool with_pair, bool tag_is_v) {
  json arr = json::array();
  for (const auto& [k, v] : m) {
    json e;
    e["a"] = inst.nodes[k.a];
    e["b"] = inst.nodes[k.b];
    e["c"] = k.c + 1;
    if (with_pair) e["c2"] = k.c2 + 1;
    if (tag_is_v)
      e["v"] = inst.nodes[k.j];
    else
      e["j"] = inst.nodes[k.j];
    e["val"] = v;
    arr.push_back(e);
  }
  return arr;
}

json node_entries(const ProblemInstance& inst, const std::map<NodeVarKey, double>& m,
                  bool is_gamma) {
  json arr = json::array();
  for (const auto& [k, v] : m) {
    json e;
    e["a"] = inst.nodes[k.a];
    e["c"] = k.c + 1;
    e["c2"] = k.c2 + 1;
    if (is_gamma) {
      e["v"] = inst.nodes[k.v];
      e["v2"] = inst.nodes[k.v2];
    } else {
      e["j"] = inst.nodes[k.j];
    }
    e["val"] = v;
    arr.push_back(e);
  }
  return arr;
}

int need_node(const ProblemInstance& inst, const json& e, const char* key) {
  int n = inst.node_index(e.at(key).get<std::string>());
  if (n < 0) throw ParseError("solution references unknown node");
  return n;
}

int need_session(const ProblemInstance& inst, const json& e, const char* key) {
  int c = e.at(key).get<int>() - 1;
  if (c < 0 || c >= inst.num_sessions()) throw ParseError("solution references unknown session");
  return c;
}

}  // namespace

std::string SolutionVariables::to_json_text(const ProblemInstance& inst) const {
  json j;
  j["nu"] = link_entries(inst, nu, false, true);
  j["nu_retag"] = link_entries(inst, nu_retag, false, true);
  j["pi_joint"] = link_entries(inst, pi_joint, true, false);
  j["pi_indiv"] = link_entries(inst, pi_indiv, true, false);
  j["rho"] = link_entries(inst, rho, true, false);
  j["gamma"] = node_entries(inst, gamma, true);
  j["sigma"] = node_entries(inst, sigma, false);
  j["eta"] = node_entries(inst, eta, false);
  json r = json::object();
  for (int c = 0; c < (int)rates.size(); ++c) r[std::to_string(c + 1)] = rates[c];
  j["rates"] = r;
  if (!lambda_avg.empty()) {
    json w;
    w["lambda_avg"] = lambda_avg;
    w["link_flow_avg"] = link_flow_avg;
    w["link_cap_avg"] = link_cap_avg;
    j["wireless"] = w;
  }
  return j.dump(2) + "\n";
}

SolutionVariables SolutionVariables::from_json_text(const ProblemInstance& inst,
                                                    const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed solution JSON: ") + e.what());
  }
  SolutionVariables sol;
  auto load_link = [&](const char* name, std::map<LinkVarKey, double>& m, bool with_pair,
                       bool tag_is_v) {
    if (!j.contains(name)) return;
    for (const auto& e : j[name]) {
      LinkVarKey k;
      k.a = need_node(inst, e, "a");
      k.b = need_node(inst, e, "b");
      k.c = need_session(inst, e, "c");
      if (with_pair) k.c2 = need_session(inst, e, "c2");
      k.j = need_node(inst, e, tag_is_v ? "v" : "j");
      m[k] += e.at("val").get<double>();
    }
  };
  load_link("nu", sol.nu, false, true);
  load_link("nu_retag", sol.nu_retag, false, true);
  load_link("pi_joint", sol.pi_joint, true, false);
  load_link("pi_indiv", sol.pi_indiv, true, false);
  load_link("rho", sol.rho, true, false);
  if (j.contains("gamma"))
    for (const auto& e : j["gamma"]) {
      NodeVarKey k;
      k.a = need_node(inst, e, "a");
      k.c = need_session(inst, e, "c");
      k.v = need_node(inst, e, "v");
      k.c2 = need_session(inst, e, "c2");
      k.v2 = need_node(inst, e, "v2");
      sol.gamma[k] += e.at("val").get<double>();
    }
  auto load_node = [&](const char* name, std::map<NodeVarKey, double>& m) {
    if (!j.contains(name)) return;
    for (const auto& e : j[name]) {
      NodeVarKey k;
      k.a = need_node(inst, e, "a");
      k.c = need_session(inst, e, "c");
      k.c2 = need_session(inst, e, "c2");
      k.j = need_node(inst, e, "j");
      m[k] += e.at("val").get<double>();
    }
  };
  load_node("sigma", sol.sigma);
  load_node("eta", sol.eta);
  sol.rates.assign(inst.num_sessions(), 0.0);
  if (j.contains("rates"))
    for (auto it = j["rates"].begin(); it != j["rates"].end(); ++it) {
      int c = std::atoi(it.key().c_str()) - 1;
      if (c >= 0 && c < (int)sol.rates.size()) sol.rates[c] = it.value().get<double>();
    }
  if (j.contains("wireless")) {
    const auto& w = j["wireless"];
    sol.lambda_avg = w.value("lambda_avg", std::vector<double>{});
    sol.link_flow_avg = w.value("link_flow_avg", std::vector<double>{});
    sol.link_cap_avg = w.value("link_cap_avg", std::vector<double>{});
  }
  return sol;
}

// --- Verification ------------------------------------------------------------

namespace {

struct Residuals {
  std::vector<ResidualEntry> entries;
  double max_abs = 0.0;

  void add(const std::string& family, int node, std::array<int, 4> idx, double value,
           std::string label) {
    max_abs = std::max(max_abs, std::fabs(value));
    if (std::fabs(value) > 1e-13)
      entries.push_back({family, node, idx, value, std::move(label)});
  }
};

}  // namespace

VerificationReport verify(const ProblemInstance& inst, const SolutionVariables& sol,
                          const std::vector<double>& rates, double tol) {
  const int N = inst.num_nodes();
  const int K = inst.num_sessions();
  if ((int)rates.size() != K) throw ConfigError("rates size mismatch");
  VerificationReport rep;
  rep.tolerance = tol;
  Residuals res;

  auto nn = [&](int i) { return inst.nodes[i]; };

  // Non-negativity of every exported variable.
  auto check_nonneg = [&](int node, double v, const std::string& label) {
    if (v < -1e-12)
      res.add("nonneg", node, {-1, -1, -1, -1}, v, "nonneg " + label);
  };
  for (const auto& [k, v] : sol.nu) check_nonneg(k.a, v, "nu " + nn(k.a) + ">" + nn(k.b));
  for (const auto& [k, v] : sol.nu_retag) check_nonneg(k.a, v, "nu_retag " + nn(k.a) + ">" + nn(k.b));
  for (const auto& [k, v] : sol.pi_joint) check_nonneg(k.a, v, "pi_joint " + nn(k.a) + ">" + nn(k.b));
  for (const auto& [k, v] : sol.pi_indiv) check_nonneg(k.a, v, "pi_indiv " + nn(k.a) + ">" + nn(k.b));
  for (const auto& [k, v] : sol.rho) check_nonneg(k.a, v, "rho " + nn(k.a) + ">" + nn(k.b));
  for (const auto& [k, v] : sol.gamma) check_nonneg(k.a, v, "gamma @" + nn(k.a));
  for (const auto& [k, v] : sol.sigma) check_nonneg(k.a, v, "sigma @" + nn(k.a));
  for (const auto& [k, v] : sol.eta) check_nonneg(k.a, v, "eta @" + nn(k.a));

  // Uncoded conservation, per (i, c, v). Source term at i = v = s_c; rows
  // touching the session's source/sink tags or sitting at the sink are free.
  for (int c = 0; c < K; ++c) {
    const int s = inst.sessions[c].src, d = inst.sessions[c].dst;
    for (int i = 0; i < N; ++i)
      for (int v = 0; v < N; ++v) {
        const bool source_row = (i == s && v == s);
        const bool plain_row = (v != s && v != d && i != d);
        if (!source_row && !plain_row) continue;
        double lhs = 0.0, rhs = source_row ? rates[c] : 0.0;
        for (int b = 0; b < N; ++b) {
          lhs += get(sol.nu, LinkVarKey{i, b, c, -1, v});
          lhs += get(sol.nu_retag, LinkVarKey{i, b, c, -1, v});
          rhs += get(sol.nu, LinkVarKey{b, i, c, -1, v});
          rhs += get(sol.nu_retag, LinkVarKey{v, i, c, -1, b});
        }
        for (int c2 = 0; c2 < K; ++c2) {
          if (c2 == c) continue;
          for (int v2 = 0; v2 < N; ++v2) lhs += get(sol.gamma, gamma_key(i, c, v, c2, v2));
          rhs += get(sol.eta, NodeVarKey{i, c, -1, c2, -1, v});
        }
        res.add("u", i, {c, v, -1, -1}, lhs - rhs,
                "u[i=" + nn(i) + ",c=" + std::to_string(c + 1) + ",v=" + nn(v) + "]");
      }
  }

  // Joint poison, per (i, {c,c'}, j); the row at the coding node i = j is the
  // reversed-removal site and stays free.
  for (int c = 0; c < K; ++c)
    for (int c2 = c + 1; c2 < K; ++c2)
      for (int jn = 0; jn < N; ++jn)
        for (int i = 0; i < N; ++i) {
          if (i == jn) continue;
          double lhs = get(sol.sigma, NodeVarKey{i, c, -1, c2, -1, jn});
          double rhs = 0.0;
          for (int b = 0; b < N; ++b) {
            lhs += get(sol.pi_joint, LinkVarKey{i, b, c, c2, jn});
            rhs += get(sol.pi_joint, LinkVarKey{b, i, c, c2, jn});
          }
          res.add("pj", i, {c, c2, jn, -1}, lhs - rhs,
                  "pj[i=" + nn(i) + ",{" + std::to_string(c + 1) + "," + std::to_string(c2 + 1) +
                      "},j=" + nn(jn) + "]");
        }

  // Individual poison, per (i, c, c', j), again free at i = j.
  for (int c = 0; c < K; ++c)
    for (int c2 = 0; c2 < K; ++c2) {
      if (c2 == c) continue;
      for (int jn = 0; jn < N; ++jn)
        for (int i = 0; i < N; ++i) {
          if (i == jn) continue;
          double lhs = get(sol.eta, NodeVarKey{i, c, -1, c2, -1, jn});
          double rhs = get(sol.sigma, NodeVarKey{i, std::min(c, c2), -1, std::max(c, c2), -1, jn});
          for (int b = 0; b < N; ++b) {
            lhs += get(sol.pi_indiv, LinkVarKey{i, b, c, c2, jn});
            rhs += get(sol.pi_indiv, LinkVarKey{b, i, c, c2, jn});
          }
          res.add("pi", i, {c, c2, jn, -1}, lhs - rhs,
                  "pi[i=" + nn(i) + "," + std::to_string(c + 1) + std::to_string(c2 + 1) +
                      ",j=" + nn(jn) + "]");
        }
    }

  // Remedy, per (i, c, c', j): decoding consumes, coding at j deposits at the
  // partner flow's previous node.
  for (int c = 0; c < K; ++c)
    for (int c2 = 0; c2 < K; ++c2) {
      if (c2 == c) continue;
      for (int jn = 0; jn < N; ++jn)
        for (int i = 0; i < N; ++i) {
          double lhs = get(sol.eta, NodeVarKey{i, c, -1, c2, -1, jn});
          double rhs = 0.0;
          for (int b = 0; b < N; ++b) {
            lhs += get(sol.rho, LinkVarKey{i, b, c, c2, jn});
            rhs += get(sol.rho, LinkVarKey{b, i, c, c2, jn});
          }
          for (int v = 0; v < N; ++v) rhs += get(sol.gamma, gamma_key(jn, c, v, c2, i));
          res.add("r", i, {c, c2, jn, -1}, lhs - rhs,
                  "r[i=" + nn(i) + "," + std::to_string(c + 1) + std::to_string(c2 + 1) +
                      ",j=" + nn(jn) + "]");
        }
    }

  // Capacity.
  rep.min_capacity_slack = 0.0;
  if (inst.mode == Mode::Wired) {
    for (const WiredLink& l : inst.wired_links) {
      double flow = 0.0;
      for (int c = 0; c < K; ++c)
        for (int v = 0; v < N; ++v) {
          flow += get(sol.nu, LinkVarKey{l.from, l.to, c, -1, v});
          flow += get(sol.nu_retag, LinkVarKey{l.from, l.to, c, -1, v});
        }
      for (int c = 0; c < K; ++c)
        for (int c2 = 0; c2 < K; ++c2) {
          if (c == c2) continue;
          for (int jn = 0; jn < N; ++jn) {
            flow += get(sol.rho, LinkVarKey{l.from, l.to, c, c2, jn});
            flow += get(sol.pi_indiv, LinkVarKey{l.from, l.to, c, c2, jn});
            if (c < c2) flow += get(sol.pi_joint, LinkVarKey{l.from, l.to, c, c2, jn});
          }
        }
      rep.capacity.push_back(
          {nn(l.from) + ">" + nn(l.to), flow, l.cap, l.cap - flow});
    }
  } else if (!sol.link_cap_avg.empty()) {
    // Timeshared capacities recorded by the engine; broadcast pushes are
    // counted once per transmission there, which variable sums cannot see.
    for (size_t li = 0; li < inst.wireless_links.size(); ++li) {
      double flow = li < sol.link_flow_avg.size() ? sol.link_flow_avg[li] : 0.0;
      double cap = sol.link_cap_avg[li];
      rep.capacity.push_back({inst.wireless_links[li].id, flow, cap, cap - flow});
    }
    double lam = 0.0;
    for (double l : sol.lambda_avg) lam += l;
    rep.capacity.push_back({"timeshare", lam, 1.0, 1.0 - lam});
  }
  for (const CapacityEntry& ce : rep.capacity)
    rep.min_capacity_slack = std::min(rep.min_capacity_slack, ce.slack);

  std::stable_sort(res.entries.begin(), res.entries.end(),
                   [](const ResidualEntry& a, const ResidualEntry& b) {
                     return std::fabs(a.value) > std::fabs(b.value);
                   });
  rep.residuals = std::move(res.entries);
  rep.max_abs_residual = res.max_abs;
  rep.pass = rep.max_abs_residual <= tol + 1e-12 && rep.min_capacity_slack >= -tol - 1e-12;
  return rep;
}

std::string VerificationReport::to_json_text(const ProblemInstance& inst) const {
  json j;
  j["pass"] = pass;
  j["tolerance"] = tolerance;
  j["max_abs_residual"] = max_abs_residual;
  j["min_capacity_slack"] = min_capacity_slack;
  json rs = json::array();
  for (const ResidualEntry& r : residuals) {
    json e;
    e["family"] = r.family;
    e["node"] = r.node >= 0 ? inst.nodes[r.node] : "";
    e["label"] = r.label;
    e["value"] = r.value;
    rs.push_back(e);
  }
  j["residuals"] = rs;
  json cs = json::array();
  for (const CapacityEntry& c : capacity) {
    json e;
    e["link"] = c.link;
    e["flow"] = c.flow;
    e["cap"] = c.cap;
    e["slack"] = c.slack;
    cs.push_back(e);
  }
  j["capacity"] = cs;
  return j.dump(2) + "\n";
}

}  // namespace xorflow
