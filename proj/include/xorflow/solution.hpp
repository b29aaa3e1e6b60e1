#pragma once

#include <array>
#include <compare>
#include <map>
#include <string>
#include <vector>

#include "xorflow/transfers.hpp"

namespace xorflow {

// Keys follow the constraint-system index tuples; all session pairs are
// stored canonically (nu/nu_retag by (a,b,c,v); pi_joint/gamma/sigma with
// c < c2; pi_indiv/rho/eta with (c, c2) ordered as written).
struct LinkVarKey {  // nu, nu_retag, pi_joint, pi_indiv, rho
  int a = 0, b = 0, c = 0, c2 = -1, j = -1;
  auto operator<=>(const LinkVarKey&) const = default;
};
struct NodeVarKey {  // gamma (v, v2 used), sigma, eta
  int a = 0, c = 0, v = -1, c2 = -1, v2 = -1, j = -1;
  auto operator<=>(const NodeVarKey&) const = default;
};

// Round-averaged flow variables in original-problem orientation: poison
// flows recorded on reversed pushes are flipped back on export.
struct SolutionVariables {
  std::map<LinkVarKey, double> nu;        // key uses c, j=v
  std::map<LinkVarKey, double> nu_retag;  // U_a^{cv} -> U_b^{ca}; key j=v (old tag)
  std::map<LinkVarKey, double> pi_joint;  // c < c2
  std::map<LinkVarKey, double> pi_indiv;
  std::map<LinkVarKey, double> rho;
  std::map<NodeVarKey, double> gamma;  // {(c,v),(c2,v2)}, c < c2
  std::map<NodeVarKey, double> sigma;  // c < c2
  std::map<NodeVarKey, double> eta;
  std::vector<double> rates;  // achieved per session (delivered / rounds)

  // Wireless runs carry the timeshare record used for the capacity check.
  std::vector<double> lambda_avg;    // per rate set
  std::vector<double> link_flow_avg; // per real link, average pushed
  std::vector<double> link_cap_avg;  // per real link, sum_u lambda_u C_{e,u}

  std::string to_json_text(const ProblemInstance& inst) const;
  static SolutionVariables from_json_text(const ProblemInstance& inst, const std::string& text);
};

// Maps cumulative per-pair pushed flow onto the variable families and divides
// by the round count. `delivered` fills the achieved rates.
SolutionVariables average_flows(const Layout& layout,
                                const std::vector<std::vector<double>>& cum_flow, std::int64_t t,
                                const std::vector<double>& delivered);

struct ResidualEntry {
  std::string family;  // "u", "pj", "pi", "r", "nonneg"
  int node = -1;
  std::array<int, 4> idx{{-1, -1, -1, -1}};
  double value = 0.0;
  std::string label;
};

struct CapacityEntry {
  std::string link;
  double flow = 0.0;
  double cap = 0.0;
  double slack = 0.0;
};

struct VerificationReport {
  double tolerance = 0.0;
  double max_abs_residual = 0.0;
  double min_capacity_slack = 0.0;
  bool pass = false;
  std::vector<ResidualEntry> residuals;  // |value| > 1e-13, sorted by |value| desc
  std::vector<CapacityEntry> capacity;

  std::string to_json_text(const ProblemInstance& inst) const;
};

// Evaluates the conservation system and the per-link capacity inequality.
// Rows at removal/injection sites carry free slack and are skipped: the
// first family follows its stated source/sink cases literally, and poison
// rows are skipped at i = j where reversed poison is absorbed.
VerificationReport verify(const ProblemInstance& inst, const SolutionVariables& sol,
                          const std::vector<double>& rates, double tol);

}  // namespace xorflow
