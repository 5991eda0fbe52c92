#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "compsyn/dfa.hpp"
#include "compsyn/grid.hpp"
#include "compsyn/model.hpp"
#include "compsyn/reward.hpp"
#include "compsyn/rng.hpp"

namespace compsyn {

// How the adversary's finite action set covers the internal-input box.
//   Cartesian:  every cell of the product grid is one action.
//   PerAxisSum: one action per (axis, cell) pair; the chosen axis value is
//               replicated across every internal channel.  Useful when the
//               dynamics only see the channel sum.
enum class InternalGridMode { Cartesian, PerAxisSum };

struct GameState {
  CellId cell = 0;
  int q = 0;
  int k = 0;
  int pending_u = -1;  // set between the controller's and the adversary's move
  bool terminal = false;
};

struct GameStep {
  GameState next;
  double reward = 0.0;
};

// Two-player turn game on the quantized subsystem: the controller commits an
// input, the adversary commits an internal-input cell, then the monitored
// automaton advances on the current cell's label and the dynamics are
// sampled.  A move that lands on the last decision level immediately
// consumes the destination label as well, so every episode reads exactly
// horizon+1 labels.  Out-of-box states collapse to the grid sink, which is
// absorbing and carries the empty label.
//
// Instances keep mutable scratch buffers; use one instance per thread.
class AbstractGame {
 public:
  AbstractGame(SubsystemModel model, Grid state_grid, double internal_width,
               InternalGridMode mode, std::vector<AtomBox> atoms, CoSafetyDFA dfa,
               RewardMachine rm, double gamma);

  const SubsystemModel& model() const { return model_; }
  const Grid& state_grid() const { return grid_; }
  const Grid& internal_grid() const { return internal_grid_; }
  InternalGridMode internal_mode() const { return mode_; }
  const CoSafetyDFA& dfa() const { return dfa_; }
  const RewardMachine& reward_machine() const { return rm_; }
  const std::vector<AtomBox>& atoms() const { return atoms_; }
  int horizon() const { return dfa_.horizon; }
  double gamma() const { return gamma_; }

  std::int64_t n_cells() const { return grid_.n_cells(); }
  CellId sink() const { return grid_.sink(); }
  int n_u() const { return model_.n_inputs(); }
  int n_w() const { return static_cast<int>(w_actions_.size()); }
  std::span<const double> w_vector(int w) const { return w_actions_[w]; }
  std::uint32_t letter_of_cell(CellId cell) const { return cell_letter_[cell]; }

  // Decision entries counted over in-box cells only, as (level, cell, u)
  // rows plus their (level, cell, u, w) refinements.
  std::int64_t state_action_pairs() const;

  GameStep reset(CellId cell) const;
  CellId quantize_point(std::span<const double> x) const { return grid_.quantize(x); }

  GameState step_max(const GameState& s, int u) const;
  GameStep step_min(const GameState& s, int w, Rng& rng) const;
  // Deterministic variant for tests: z holds one standard normal per state dim.
  GameStep step_min_with_noise(const GameState& s, int w, std::span<const double> z) const;

  struct RolloutResult {
    double value = 0.0;
    int final_q = 0;
    bool accepted = false;
  };

  // Plays one episode from a fixed start cell with the given pure policies
  // (indexed lookups may depend on the full game state).  Returns the
  // discounted return, the automaton state the run ended in, and whether the
  // run was accepted.
  template <typename MaxPolicy, typename MinPolicy>
  RolloutResult rollout(CellId start, MaxPolicy&& pick_u, MinPolicy&& pick_w, Rng& rng) const {
    GameStep cur = reset(start);
    double total = cur.reward;
    double scale = 1.0;
    while (!cur.next.terminal) {
      const GameState mid = step_max(cur.next, pick_u(cur.next));
      cur = step_min(mid, pick_w(mid), rng);
      total += scale * cur.reward;
      scale *= gamma_;
    }
    return {total, cur.next.q, cur.next.q == dfa_.accept_state};
  }

 private:
  GameStep arrive(CellId cell, int q, int k, double accrued) const;

  SubsystemModel model_;
  Grid grid_;
  Grid internal_grid_;
  InternalGridMode mode_;
  std::vector<AtomBox> atoms_;
  CoSafetyDFA dfa_;
  RewardMachine rm_;
  double gamma_;
  std::vector<std::vector<double>> w_actions_;
  std::vector<std::uint32_t> cell_letter_;
  mutable std::vector<double> scratch_x_;
  mutable std::vector<double> scratch_x2_;
  mutable std::vector<double> scratch_z_;
};

// Maps a fine-grid adversary action to the coarse-grid action whose cell
// contains it, used when transferring learned tables across grid levels.
int map_w_action(const AbstractGame& fine, const AbstractGame& coarse, int w_fine);

}  // namespace compsyn
