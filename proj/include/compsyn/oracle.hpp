#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "compsyn/game.hpp"
#include "compsyn/learner.hpp"

namespace compsyn {

double normal_cdf(double t);

// Transition probabilities of the quantized subsystem.  Destination masses
// factor across dimensions as differences of gaussian CDFs at cell edges;
// whatever mass leaves the box lands on the sink.  Rows are computed on
// demand, nothing is materialized.  Keeps references; callers own the model
// and grid for the kernel's lifetime.
class AbstractKernel {
 public:
  AbstractKernel(const SubsystemModel& model, const Grid& grid);

  // out has one entry per cell plus the sink (last).
  void row(CellId cell, std::size_t u, std::span<const double> w,
           std::span<double> out) const;
  void row_at(std::span<const double> x, std::size_t u, std::span<const double> w,
              std::span<double> out) const;

 private:
  const SubsystemModel& model_;
  const Grid& grid_;
  mutable std::vector<double> rep_;
  mutable std::vector<std::vector<double>> mass_;  // per-dim cell masses
};

// Exact backward-induction solution of the quantized game.  value[k] holds
// the worst-case expected return of a decision point at level k, indexed by
// automaton state times row; qmax[k] adds the per-input values.  value0 is
// the game value seen from reset, one entry per cell plus the sink.  qmin is
// only filled on request (it is n_w times larger than qmax).
struct ExactSolution {
  int horizon = 0;
  std::int64_t rows = 0;
  int n_states = 0;
  int n_u = 0;
  int n_w = 0;
  std::vector<std::vector<double>> value;  // [k][q * rows + cell], k < horizon
  std::vector<std::vector<double>> qmax;   // [k][(q * rows + cell) * n_u + u]
  std::vector<std::vector<double>> qmin;   // [k][((q * rows + cell) * n_u + u) * n_w + w]
  std::vector<double> value0;

  double value_at(int k, int q, CellId cell) const {
    return value[k][static_cast<std::size_t>(q) * rows + cell];
  }
  double qmax_at(int k, int q, CellId cell, int u) const {
    return qmax[k][(static_cast<std::size_t>(q) * rows + cell) * n_u + u];
  }
  double qmin_at(int k, int q, CellId cell, int u, int w) const {
    return qmin[k][((static_cast<std::size_t>(q) * rows + cell) * n_u + u) * n_w + w];
  }
};

// Both players optimize.  keep_min_tables also materializes qmin.
ExactSolution solve_game(const AbstractGame& game, bool keep_min_tables = false);
// The controller plays `controller`, the adversary best-responds.
ExactSolution solve_best_response(const AbstractGame& game, const Policy& controller);
// Both sides fixed.
ExactSolution solve_policy_pair(const AbstractGame& game, const Policy& pol);

}  // namespace compsyn
