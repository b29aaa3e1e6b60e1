#pragma once

#include <string>
#include <vector>

#include "xorflow/common.hpp"

namespace xorflow {

enum class Mode : std::uint8_t { Wired = 0, Wireless = 1 };

struct WiredLink {
  int from = -1;
  int to = -1;
  double cap = 0.0;  // flow units / round, capped at max_c r_c on ingestion
};

struct WirelessLink {
  std::string id;
  int from = -1;
  std::vector<int> dsts;  // destination set Z, sorted, excludes `from`
};

struct Session {
  int src = -1;
  int dst = -1;
  double rate = 0.0;  // demanded flow units / round
};

// Immutable after construction; safe for shared concurrent reads.
struct ProblemInstance {
  Mode mode = Mode::Wired;
  std::vector<std::string> nodes;
  std::vector<WiredLink> wired_links;
  std::vector<WirelessLink> wireless_links;
  // rate_sets[u][link_index] = C_{(a,Z),u}; one entry per declared link.
  std::vector<std::vector<double>> rate_sets;
  std::vector<Session> sessions;

  int num_nodes() const { return (int)nodes.size(); }
  int num_sessions() const { return (int)sessions.size(); }
  int num_links() const {
    return mode == Mode::Wired ? (int)wired_links.size() : (int)wireless_links.size();
  }
  double max_rate() const;
  int node_index(const std::string& name) const;  // -1 if unknown

  std::string to_json_text() const;
};

// Parses and validates an instance file (UTF-8 JSON, unknown keys rejected).
// Wired capacities are capped at max_c r_c.
ProblemInstance parse_instance(const std::string& text);

struct DerivedConstants {
  double epsilon = 0.0;
  double kappa = 1.0;
  int L = 1;  // longest primary path bound
  int F = 1;  // max links per elementary flow
  double cbar = 0.0;
  double rho = 1.0;
  double ln_threshold_term = 0.0;  // ln((L+1) * rho)
  // Per session:
  std::vector<double> alpha;      // kappa * eps / (24 F r_c)
  std::vector<double> B_times_r;  // (1/alpha) ln(K(L+1)(1+2e)/(e(1-2e))) + 3 p_c
  std::vector<double> packet;     // (1+eps) r_c
  std::vector<double> threshold;  // Br_c + ln((L+1) rho)/alpha_c + 3 p_c
};

// L or F <= 0 selects the defaults L = N-1, F = 4(N-1).
DerivedConstants derive_constants(const ProblemInstance& inst, double epsilon, int L, int F,
                                  double kappa);

}  // namespace xorflow
