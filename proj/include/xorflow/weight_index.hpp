#pragma once

#include <set>
#include <tuple>
#include <vector>

#include "xorflow/kernels.hpp"
#include "xorflow/queues.hpp"
#include "xorflow/transfers.hpp"

namespace xorflow {

// Incremental argmax over one link's eligible pairs. Pairs are bucketed into
// sorted lists (coding links and wireless coded-broadcast pairs get one list
// per session pair, everything else shares a catch-all list) and the lists
// are ranked by their current best entry. Results match the scan kernels bit
// for bit, including the lowest-index tie-break.
class WeightIndex {
 public:
  WeightIndex() = default;

  void build(const Layout& lay, int link, const Ledger& led);
  void on_track_updated(std::int32_t track, const Ledger& led);
  ScanBest best() const;

  int group_count() const { return (int)groups_.size(); }
  std::size_t group_size(int g) const { return groups_[g].size(); }

 private:
  struct ByWeight {
    bool operator()(const std::pair<double, std::int32_t>& a,
                    const std::pair<double, std::int32_t>& b) const {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    }
  };
  struct ByWeightRank {
    bool operator()(const std::tuple<double, std::int32_t, int>& a,
                    const std::tuple<double, std::int32_t, int>& b) const {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      return std::get<1>(a) < std::get<1>(b);
    }
  };
  using List = std::set<std::pair<double, std::int32_t>, ByWeight>;

  void refresh_pair(std::int32_t pi, const Ledger& led);
  void reseat_group(int g);

  const Layout* lay_ = nullptr;
  int link_ = -1;
  std::vector<List> groups_;
  // Current best entry of each group, ranked; third element is the group id.
  std::set<std::tuple<double, std::int32_t, int>, ByWeightRank> ranking_;
  std::vector<std::pair<double, std::int32_t>> group_best_;  // idx < 0: group empty
  std::vector<double> w_;
  std::vector<std::uint8_t> elig_;
};

}  // namespace xorflow
