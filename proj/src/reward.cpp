#include "compsyn/reward.hpp"

#include <deque>
#include <stdexcept>

namespace compsyn {

std::uint32_t letter_of(const std::vector<AtomBox>& atoms, std::span<const double> x) {
  std::uint32_t letter = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& box = atoms[i].box;
    if (box.size() != x.size())
      throw std::invalid_argument("letter_of: atom '" + atoms[i].name +
                                  "' has wrong dimension");
    bool inside = true;
    for (std::size_t d = 0; d < box.size(); ++d)
      if (x[d] < box[d].first || x[d] > box[d].second) {
        inside = false;
        break;
      }
    if (inside) letter |= (1u << i);
  }
  return letter;
}

RewardMachine make_reward_machine(const CoSafetyDFA& dfa, RewardMode mode, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("make_reward_machine: kappa must be >= 0");

  // Shortest letter count from each state to the accepting state, by reverse BFS.
  constexpr int kInf = 1 << 30;
  std::vector<std::vector<int>> rev(dfa.n_states);
  for (int q = 0; q < dfa.n_states; ++q)
    for (int letter = 0; letter < dfa.n_letters; ++letter) {
      const int q2 = dfa.delta[q][letter];
      if (q2 != q) rev[q2].push_back(q);
    }
  std::vector<int> dist(dfa.n_states, kInf);
  std::deque<int> queue;
  dist[dfa.accept_state] = 0;
  queue.push_back(dfa.accept_state);
  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    for (int p : rev[q])
      if (dist[p] == kInf) {
        dist[p] = dist[q] + 1;
        queue.push_back(p);
      }
  }
  int max_finite = 0;
  for (int q = 0; q < dfa.n_states; ++q)
    if (dist[q] != kInf && dist[q] > max_finite) max_finite = dist[q];
  const int d_max = 1 + max_finite;
  for (int& d : dist)
    if (d == kInf) d = d_max;

  RewardMachine rm;
  rm.requested_mode = mode;
  rm.kappa = kappa;
  rm.d_max = d_max;
  rm.dist = dist;
  rm.pot.assign(dfa.n_states, 0.0);

  // A potential only separates states when there is at least one live
  // distance level; otherwise shaping degenerates and we keep plain rewards.
  const bool shaped = mode == RewardMode::Shaped && d_max > 1;
  rm.effective_mode = shaped ? RewardMode::Shaped : RewardMode::Base;
  const int d0 = dist[dfa.initial];
  for (int q = 0; q < dfa.n_states; ++q) {
    if (dist[q] == 0) {
      rm.pot[q] = 1.0;
    } else if (shaped) {
      rm.pot[q] = kappa * static_cast<double>(dist[q] - d0) / (1.0 - d_max);
    }
  }
  return rm;
}

}  // namespace compsyn
