#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compsyn/dfa.hpp"

namespace compsyn {

// Atomic proposition: holds at x iff x lies inside the closed box.
struct AtomBox {
  std::string name;
  std::vector<std::pair<double, double>> box;
};

std::uint32_t letter_of(const std::vector<AtomBox>& atoms, std::span<const double> x);

enum class RewardMode { Base, Shaped };

// Per-transition reward driven by automaton progress.  Base mode pays 1 on
// entering the accepting state; shaped mode adds a small potential that
// rewards getting closer to acceptance and charges failures negatively.
// Rewards telescope, so every run from the initial state to a terminal state
// accumulates exactly pot[terminal].
struct RewardMachine {
  RewardMode requested_mode = RewardMode::Base;
  RewardMode effective_mode = RewardMode::Base;
  double kappa = 0.0;
  int d_max = 0;
  std::vector<int> dist;        // per automaton state, d_max when accept is unreachable
  std::vector<double> pot;      // per automaton state

  double reward(int q_from, int q_to) const { return pot[q_to] - pot[q_from]; }
};

RewardMachine make_reward_machine(const CoSafetyDFA& dfa, RewardMode mode, double kappa);

}  // namespace compsyn
