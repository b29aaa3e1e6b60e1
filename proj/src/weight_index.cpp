#include "xorflow/weight_index.hpp"

namespace xorflow {

void WeightIndex::build(const Layout& lay, int link, const Ledger& led) {
  lay_ = &lay;
  link_ = link;
  const LinkSlots& ls = lay.slots[link];
  groups_.assign(ls.n_groups, List{});
  group_best_.assign(ls.n_groups, {0.0, -1});
  ranking_.clear();
  w_.assign(ls.pairs.size(), 0.0);
  elig_.assign(ls.pairs.size(), 0);
  for (std::int32_t pi = 0; pi < (std::int32_t)ls.pairs.size(); ++pi) refresh_pair(pi, led);
}

void WeightIndex::refresh_pair(std::int32_t pi, const Ledger& led) {
  const LinkSlots& ls = lay_->slots[link_];
  const std::int32_t o1 = ls.o1[pi], o2 = ls.o2[pi], d1 = ls.d1[pi], d2 = ls.d2[pi];
  const bool elig = led.metric[o1] > 0.0 && led.metric[o2] > 0.0 && led.metric[d1] > 0.0 &&
                    led.metric[d2] > 0.0;
  const double w = (led.phi[o1] + led.phi[o2]) - (led.phi[d1] + led.phi[d2]);
  const int g = ls.pairs[pi].group;
  if (elig_[pi] && elig && w == w_[pi]) return;
  if (elig_[pi]) groups_[g].erase({w_[pi], pi});
  if (elig) groups_[g].insert({w, pi});
  w_[pi] = w;
  elig_[pi] = elig;
  reseat_group(g);
}

void WeightIndex::reseat_group(int g) {
  std::pair<double, std::int32_t> now =
      groups_[g].empty() ? std::pair<double, std::int32_t>{0.0, -1} : *groups_[g].begin();
  if (now == group_best_[g]) return;
  if (group_best_[g].second >= 0)
    ranking_.erase({group_best_[g].first, group_best_[g].second, g});
  if (now.second >= 0) ranking_.insert({now.first, now.second, g});
  group_best_[g] = now;
}

void WeightIndex::on_track_updated(std::int32_t track, const Ledger& led) {
  const LinkSlots& ls = lay_->slots[link_];
  auto it = ls.track_pairs.find(track);
  if (it == ls.track_pairs.end()) return;
  for (std::int32_t pi : it->second) refresh_pair(pi, led);
}

ScanBest WeightIndex::best() const {
  ScanBest b;
  if (ranking_.empty()) return b;
  const auto& top = *ranking_.begin();
  b.w = std::get<0>(top);
  b.idx = std::get<1>(top);
  return b;
}

}  // namespace xorflow
