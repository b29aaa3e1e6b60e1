#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xorflow/kernels.hpp"
#include "xorflow/queues.hpp"
#include "xorflow/solution.hpp"
#include "xorflow/transfers.hpp"
#include "xorflow/weight_index.hpp"

namespace xorflow {

struct RoundConfig {
  double epsilon = 0.1;
  double kappa = 1.0;
  int L = -1;  // <= 0: default N-1
  int F = -1;  // <= 0: default 4(N-1)
  std::int64_t max_rounds = 2'000'000;
  double stop_fraction = -1.0;  // < 0: use epsilon
  bool greedy_nonnegative_only = true;
  bool fast_index = true;
  bool routing_only = false;
  bool prune_tags = false;
  bool check_invariants = false;
  std::string kernel = "auto";
  std::int64_t stats_stride = 1;  // keep every n-th round's stats (last always kept)
};

struct RoundStats {
  std::int64_t round = 0;
  double remaining = 0.0;
  double entered_total = 0.0;
  double potential = 0.0;
  std::vector<double> injected;   // cumulative per session
  std::vector<double> entered;    // cumulative per session
  std::vector<double> delivered;  // cumulative per session
  std::vector<double> overflow;   // current per session
  std::vector<double> link_pushed;  // this round, per link id
  std::vector<double> lambda;       // this round, per rate set (wireless)

  bool operator==(const RoundStats&) const = default;
};

struct RunResult {
  bool converged = false;
  std::int64_t rounds = 0;
  double entered = 0.0;
  double remaining = 0.0;
  SolutionVariables solution;
  std::vector<RoundStats> stats;
};

class Engine {
 public:
  Engine(const Layout& layout, const RoundConfig& cfg);

  void run_round();
  RunResult run();  // rounds until the remaining/entered fraction or max_rounds

  // Phases exposed for targeted tests; run_round() drives them in order.
  void phase1_inject();
  void phase2_wired();
  void phase2_wireless();
  void phase3_remove();
  void phase4_rebalance();

  ScanBest best_pair(int link) const;
  double pair_weight(int link, int pair_idx) const;

  Ledger& ledger() { return led_; }
  const Ledger& led() const { return led_; }
  const Layout& layout() const { return *lay_; }
  const RoundConfig& config() const { return cfg_; }
  std::int64_t round() const { return round_; }
  const std::vector<std::vector<double>>& cum_flow() const { return cum_flow_; }
  const std::vector<RoundStats>& stats() const { return stats_; }
  SolutionVariables make_solution() const;

 private:
  void process_link(int link, double budget);
  void apply_push(int link, int pair_idx, double f);
  void drain_update_log();
  double capacity_of(int link) const;
  void check_lengths(const char* where) const;
  void check_brackets(const char* where) const;
  void check_twins(const char* where) const;
  void finish_round();

  const Layout* lay_;
  RoundConfig cfg_;
  Ledger led_;
  ScanKernelFn scan_;
  bool use_index_;
  std::vector<WeightIndex> index_;

  std::int64_t round_ = 0;
  double last_remaining_ = 0.0;
  double last_entered_ = 0.0;
  std::vector<std::vector<double>> cum_flow_;  // [link][pair]
  std::vector<double> link_pushed_round_;
  std::vector<double> cum_link_pushed_;
  std::vector<double> lambda_round_, lambda_cum_;
  std::vector<RoundStats> stats_;
};

// Convenience wrapper: derive constants, build the layout, run.
RunResult run(const ProblemInstance& inst, const RoundConfig& cfg);

std::string stats_csv(const Layout& layout, const std::vector<RoundStats>& stats);

}  // namespace xorflow
