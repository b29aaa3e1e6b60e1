#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "xorflow/solution.hpp"

namespace xorflow {

struct OracleOptions {
  double grid = 0.1;
  bool routing_only = false;
  std::uint64_t max_states = 50'000'000;
  int max_paths = 4000;       // simple paths per endpoint pair
  int max_structures = 40000; // coded structures per instance
  int max_path_hops = 12;
};

// Search space exceeded a hard cap; message carries the size estimate.
struct OracleRefusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleOutcome {
  bool feasible = false;
  std::uint64_t states = 0;
  SolutionVariables witness;  // populated when feasible
};

// Exhaustive grid search for a feasible assignment of the constraint-system
// variables, built from simple-path routing plus (wired) pairwise coded
// structures. Every candidate is confirmed with verify() at tolerance grid.
// Wireless instances are searched in routing-only form over timeshare
// compositions; the wireless coded search is refused.
OracleOutcome oracle_search(const ProblemInstance& inst, const std::vector<double>& rates,
                            const OracleOptions& opts);

}  // namespace xorflow
