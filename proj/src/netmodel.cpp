#include "xorflow/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdlib>
#include <map>
#include <set>

#include "json.hpp"
#include "xorflow/ids.hpp"

namespace xorflow {

using nlohmann::json;

int log_level() {
  static int lvl = [] {
    const char* e = std::getenv("XORFLOW_LOG");
    return e ? std::atoi(e) : 0;
  }();
  return lvl;
}

void logf(int level, const char* fmt, ...) {
  if (level > log_level()) return;
  va_list ap;
  va_start(ap, fmt);
  std::vfprintf(stderr, fmt, ap);
  std::fputc('\n', stderr);
  va_end(ap);
}

std::string QueueId::str(const std::vector<std::string>& nodes) const {
  auto nn = [&](std::int16_t x) -> std::string {
    return (x >= 0 && x < (int)nodes.size()) ? nodes[x] : "?";
  };
  auto ss = [](std::int16_t c) { return std::to_string(c + 1); };
  switch (kind) {
    case QueueKind::SourceU: return "U^" + ss(c);
    case QueueKind::Overflow: return "Ubar^" + ss(c);
    case QueueKind::Uncoded: return "U_" + nn(node) + "^{" + ss(c) + "," + nn(tag) + "}";
    case QueueKind::JointPoison:
      return "P_" + nn(node) + "^{{" + ss(c) + "," + ss(c2) + "}," + nn(tag) + "}";
    case QueueKind::IndivPoison:
      return "P_" + nn(node) + "^{" + ss(c) + ss(c2) + "," + nn(tag) + "}";
    case QueueKind::Remedy:
      return "R_" + nn(node) + "^{" + ss(c) + ss(c2) + "," + nn(tag) + "}";
  }
  return "?";
}

double ProblemInstance::max_rate() const {
  double m = 0.0;
  for (const auto& s : sessions) m = std::max(m, s.rate);
  return m;
}

int ProblemInstance::node_index(const std::string& name) const {
  for (int i = 0; i < (int)nodes.size(); ++i)
    if (nodes[i] == name) return i;
  return -1;
}

namespace {

void require_keys(const json& obj, const char* what, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ParseError(std::string("unknown key '") + it.key() + "' in " + what);
  }
}

double num_field(const json& obj, const char* key, const char* what) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ParseError(std::string(what) + ": missing or non-numeric '" + key + "'");
  return obj[key].get<double>();
}

std::string str_field(const json& obj, const char* key, const char* what) {
  if (!obj.contains(key) || !obj[key].is_string())
    throw ParseError(std::string(what) + ": missing or non-string '" + key + "'");
  return obj[key].get<std::string>();
}

}  // namespace

ProblemInstance parse_instance(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed instance JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("instance file must be a JSON object");
  require_keys(j, "instance", {"mode", "nodes", "links", "rate_sets", "sessions"});

  ProblemInstance inst;
  std::string mode = j.contains("mode") && j["mode"].is_string() ? j["mode"].get<std::string>() : "";
  if (mode == "wired")
    inst.mode = Mode::Wired;
  else if (mode == "wireless")
    inst.mode = Mode::Wireless;
  else
    throw ParseError("mode must be \"wired\" or \"wireless\"");

  if (!j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty())
    throw ParseError("nodes must be a non-empty array of strings");
  if (j["nodes"].size() > 1000) throw ParseError("instance too large (at most 1000 nodes)");
  std::set<std::string> seen;
  for (const auto& n : j["nodes"]) {
    if (!n.is_string()) throw ParseError("node names must be strings");
    std::string name = n.get<std::string>();
    if (!seen.insert(name).second) throw ParseError("duplicate node name '" + name + "'");
    inst.nodes.push_back(name);
  }

  if (!j.contains("sessions") || !j["sessions"].is_array())
    throw ParseError("sessions must be an array");
  if (j["sessions"].size() > 500) throw ParseError("instance too large (at most 500 sessions)");
  for (const auto& s : j["sessions"]) {
    require_keys(s, "session", {"src", "dst", "rate"});
    Session sess;
    sess.src = inst.node_index(str_field(s, "src", "session"));
    sess.dst = inst.node_index(str_field(s, "dst", "session"));
    sess.rate = num_field(s, "rate", "session");
    if (sess.src < 0 || sess.dst < 0) throw ParseError("session references unknown node");
    if (sess.src == sess.dst) throw ParseError("session source equals sink");
    if (!(sess.rate > 0)) throw ParseError("session rate must be positive");
    inst.sessions.push_back(sess);
  }

  if (!j.contains("links") || !j["links"].is_array()) throw ParseError("links must be an array");
  const double rmax = inst.max_rate();
  if (inst.mode == Mode::Wired) {
    for (const auto& l : j["links"]) {
      require_keys(l, "wired link", {"from", "to", "cap"});
      WiredLink wl;
      wl.from = inst.node_index(str_field(l, "from", "link"));
      wl.to = inst.node_index(str_field(l, "to", "link"));
      wl.cap = num_field(l, "cap", "link");
      if (wl.from < 0 || wl.to < 0) throw ParseError("link references unknown node");
      if (wl.from == wl.to) throw ParseError("self-loop link rejected");
      if (wl.cap < 0) throw ParseError("negative link capacity");
      if (rmax > 0) wl.cap = std::min(wl.cap, rmax);  // capacity capping
      inst.wired_links.push_back(wl);
    }
    if (j.contains("rate_sets")) throw ParseError("rate_sets is a wireless-only key");
  } else {
    std::map<std::string, int> link_ids;
    for (const auto& l : j["links"]) {
      require_keys(l, "wireless link", {"id", "from", "dsts"});
      WirelessLink wl;
      wl.id = str_field(l, "id", "link");
      wl.from = inst.node_index(str_field(l, "from", "link"));
      if (wl.from < 0) throw ParseError("link references unknown node");
      if (!l.contains("dsts") || !l["dsts"].is_array() || l["dsts"].empty())
        throw ParseError("wireless link needs a non-empty dsts array");
      for (const auto& d : l["dsts"]) {
        if (!d.is_string()) throw ParseError("dsts entries must be node names");
        int di = inst.node_index(d.get<std::string>());
        if (di < 0) throw ParseError("link destination references unknown node");
        if (di == wl.from) throw ParseError("wireless link cannot include its origin in dsts");
        wl.dsts.push_back(di);
      }
      std::sort(wl.dsts.begin(), wl.dsts.end());
      wl.dsts.erase(std::unique(wl.dsts.begin(), wl.dsts.end()), wl.dsts.end());
      if (link_ids.count(wl.id)) throw ParseError("duplicate wireless link id '" + wl.id + "'");
      link_ids[wl.id] = (int)inst.wireless_links.size();
      inst.wireless_links.push_back(wl);
    }
    if (!j.contains("rate_sets") || !j["rate_sets"].is_array() || j["rate_sets"].empty())
      throw ParseError("wireless instance needs a non-empty rate_sets array");
    for (const auto& rs : j["rate_sets"]) {
      if (!rs.is_object()) throw ParseError("each rate set must be an object of link id -> cap");
      std::vector<double> caps(inst.wireless_links.size(), 0.0);
      for (auto it = rs.begin(); it != rs.end(); ++it) {
        auto found = link_ids.find(it.key());
        if (found == link_ids.end())
          throw ParseError("rate set references undeclared link '" + it.key() + "'");
        if (!it.value().is_number()) throw ParseError("rate set capacities must be numeric");
        double c = it.value().get<double>();
        if (c < 0) throw ParseError("negative rate set capacity");
        caps[found->second] = c;
      }
      inst.rate_sets.push_back(std::move(caps));
    }
  }
  return inst;
}

std::string ProblemInstance::to_json_text() const {
  json j;
  j["mode"] = mode == Mode::Wired ? "wired" : "wireless";
  j["nodes"] = nodes;
  json links = json::array();
  if (mode == Mode::Wired) {
    for (const auto& l : wired_links)
      links.push_back({{"from", nodes[l.from]}, {"to", nodes[l.to]}, {"cap", l.cap}});
  } else {
    for (const auto& l : wireless_links) {
      json dsts = json::array();
      for (int d : l.dsts) dsts.push_back(nodes[d]);
      links.push_back({{"id", l.id}, {"from", nodes[l.from]}, {"dsts", dsts}});
    }
    json rss = json::array();
    for (const auto& rs : rate_sets) {
      json o = json::object();
      for (size_t i = 0; i < rs.size(); ++i) o[wireless_links[i].id] = rs[i];
      rss.push_back(o);
    }
    j["rate_sets"] = rss;
  }
  j["links"] = links;
  json sess = json::array();
  for (const auto& s : sessions)
    sess.push_back({{"src", nodes[s.src]}, {"dst", nodes[s.dst]}, {"rate", s.rate}});
  j["sessions"] = sess;
  return j.dump(2) + "\n";
}

DerivedConstants derive_constants(const ProblemInstance& inst, double epsilon, int L, int F,
                                  double kappa) {
  if (!(epsilon > 0.0) || !(epsilon < 0.5))
    throw ConfigError("epsilon must lie in (0, 1/2)");
  if (!(kappa > 0.0) || kappa > 1.0) throw ConfigError("kappa must lie in (0, 1]");
  const int N = inst.num_nodes();
  if (L <= 0) L = std::max(1, N - 1);
  if (F <= 0) F = std::max(1, 4 * (N - 1));

  DerivedConstants c;
  c.epsilon = epsilon;
  c.kappa = kappa;
  c.L = L;
  c.F = F;

  // cbar: max over nodes of max(total incoming, total outgoing) capacity.
  // Wireless uses the element-wise max over rate sets.
  std::vector<double> in(N, 0.0), out(N, 0.0);
  if (inst.mode == Mode::Wired) {
    for (const auto& l : inst.wired_links) {
      out[l.from] += l.cap;
      in[l.to] += l.cap;
    }
  } else {
    for (size_t li = 0; li < inst.wireless_links.size(); ++li) {
      double cap = 0.0;
      for (const auto& rs : inst.rate_sets) cap = std::max(cap, rs[li]);
      out[inst.wireless_links[li].from] += cap;
      for (int d : inst.wireless_links[li].dsts) in[d] += cap;
    }
  }
  for (int i = 0; i < N; ++i) c.cbar = std::max({c.cbar, in[i], out[i]});

  const int K = inst.num_sessions();
  if (K > 0) {
    double rmin = inst.sessions[0].rate, rmax = rmin;
    for (const auto& s : inst.sessions) {
      rmin = std::min(rmin, s.rate);
      rmax = std::max(rmax, s.rate);
    }
    c.rho = rmax / rmin;
  }
  c.ln_threshold_term = std::log((L + 1) * c.rho);

  const double ln_b =
      K > 0 ? std::log((double)K * (L + 1) * (1 + 2 * epsilon) / (epsilon * (1 - 2 * epsilon)))
            : 0.0;
  for (const auto& s : inst.sessions) {
    double a = kappa * epsilon / (24.0 * F * s.rate);
    double p = (1 + epsilon) * s.rate;
    double br = ln_b / a + 3 * p;
    c.alpha.push_back(a);
    c.packet.push_back(p);
    c.B_times_r.push_back(br);
    c.threshold.push_back(br + c.ln_threshold_term / a + 3 * p);
  }
  return c;
}

}  // namespace xorflow
