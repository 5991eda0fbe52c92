#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "compsyn/formula.hpp"

namespace compsyn {

// Deterministic finite automaton over an alphabet of atom bitmasks, unrolled
// by level so every non-terminal state knows how many letters were consumed
// to reach it.  Words of length horizon+1 always end in accept or reject.
struct CoSafetyDFA {
  int horizon = 0;
  int n_atoms = 0;
  int n_letters = 1;
  int n_states = 0;
  int initial = 0;
  int accept_state = 0;
  int reject_state = 0;
  std::vector<int> depth;               // letters consumed; -1 for accept/reject
  std::vector<std::vector<int>> delta;  // [state][letter]

  int step(int q, std::uint32_t letter) const { return delta[q][letter]; }
  bool is_terminal(int q) const { return q == accept_state || q == reject_state; }
  std::vector<int> live_states_at(int d) const;
  int n_live() const { return n_states - 2; }
};

CoSafetyDFA to_dfa(const Formula& f, int horizon, int n_atoms);

// Runs a word from the initial state; true iff the run ends in the accept state.
bool dfa_accepts(const CoSafetyDFA& dfa, const std::vector<std::uint32_t>& word);

}  // namespace compsyn
