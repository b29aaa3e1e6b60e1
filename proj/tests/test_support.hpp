#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "xorflow/engine.hpp"
#include "xorflow/gen.hpp"
#include "xorflow/solution.hpp"
#include "xorflow/transfers.hpp"

namespace xorflow::test {

using PairCode = std::array<std::uint64_t, 4>;

// Independently written exhaustive enumerator of the per-link transfer
// catalogs: walks the full queue universe and emits (O, D) sets by predicate,
// rather than the builder's index loops. Used as the catalog oracle.
std::set<PairCode> reference_catalog(const ProblemInstance& inst, const LinkRef& link);

std::set<PairCode> catalog_codes(const Catalog& cat);

// The canonical pairwise XOR code on the two-unicast poison fixture: prime
// flows into the coding node, joint poison over the shared link, branch, two
// individual poisons, side-link remedies, decode at both sinks.
SolutionVariables hand_two_unicast_solution(const ProblemInstance& inst, double r);

// Mutation handles over every stored variable.
struct VarRef {
  std::string family;
  std::vector<int> nodes;  // nodes a residual may legitimately land on
  double* val = nullptr;
};
std::vector<VarRef> collect_vars(SolutionVariables& sol);

// Least-squares slope of y over the tail half of the series.
double tail_slope(const std::vector<double>& y);

}  // namespace xorflow::test
