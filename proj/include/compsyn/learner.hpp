#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "compsyn/game.hpp"

namespace compsyn {

// Action tables for both players over (automaton state, cell) pairs.  Only
// automaton states that can occur at a decision level get a block; rows
// include the sink cell as the last row.  Entries for both node kinds are
// learned: the adversary's qmin per (node, u, w) and the controller's qmax
// per (node, u), the latter tracking the adversarial floor of its row.
class QTable {
 public:
  QTable() = default;
  explicit QTable(const AbstractGame& game);

  int n_blocks() const { return static_cast<int>(q_of_block_.size()); }
  std::int64_t rows() const { return rows_; }  // cells + sink
  int n_u() const { return n_u_; }
  int n_w() const { return n_w_; }
  int block_of_q(int q) const { return block_of_q_[q]; }
  int q_of_block(int b) const { return q_of_block_[b]; }

  double qmin(int q, CellId cell, int u, int w) const { return qmin_[min_idx(q, cell, u, w)]; }
  double min_over_w(int q, CellId cell, int u) const { return minval_[max_idx(q, cell, u)]; }
  int argmin_w(int q, CellId cell, int u) const { return minarg_[max_idx(q, cell, u)]; }
  double qmax(int q, CellId cell, int u) const { return qmax_[max_idx(q, cell, u)]; }
  double value(int q, CellId cell) const;  // max over u of qmax
  int greedy_u(int q, CellId cell) const;  // ties take the lowest index
  std::uint32_t visits(int q, CellId cell, int u, int w) const {
    return nmin_[min_idx(q, cell, u, w)];
  }
  std::uint32_t max_visits(int q, CellId cell, int u) const {
    return nmax_[max_idx(q, cell, u)];
  }

  // Writes one adversary-table entry and maintains the cached row minimum.
  void set_qmin(int q, CellId cell, int u, int w, double v);
  void bump_visits(int q, CellId cell, int u, int w) { ++nmin_[min_idx(q, cell, u, w)]; }
  void set_qmax(int q, CellId cell, int u, double v) { qmax_[max_idx(q, cell, u)] = v; }
  void bump_max_visits(int q, CellId cell, int u) { ++nmax_[max_idx(q, cell, u)]; }

  double visited_fraction() const;  // share of adversary entries ever updated

  std::span<const double> raw_qmin() const { return qmin_; }
  std::span<const double> raw_qmax() const { return qmax_; }
  // Bulk loads used by deserialization; the first recomputes the row-minimum
  // cache.
  void load_qmin(std::span<const double> values);
  void load_qmax(std::span<const double> values);

 private:
  std::size_t max_idx(int q, CellId cell, int u) const {
    return (static_cast<std::size_t>(block_of_q_[q]) * rows_ + cell) * n_u_ + u;
  }
  std::size_t min_idx(int q, CellId cell, int u, int w) const {
    return max_idx(q, cell, u) * n_w_ + w;
  }

  std::vector<int> block_of_q_;
  std::vector<int> q_of_block_;
  std::int64_t rows_ = 0;
  int n_u_ = 0;
  int n_w_ = 0;
  std::vector<double> qmin_;
  std::vector<double> qmax_;
  std::vector<double> minval_;
  std::vector<int> minarg_;
  std::vector<std::uint32_t> nmin_;
  std::vector<std::uint32_t> nmax_;
};

// Pure strategies read off a table: the controller's greedy input per
// (automaton state, cell) and the adversary's greedy reply to it.
struct Policy {
  std::vector<int> block_of_q;
  std::int64_t rows = 0;
  std::vector<int> u;  // [block * rows + cell]
  std::vector<int> w;

  int u_at(int q, CellId cell) const {
    return u[static_cast<std::size_t>(block_of_q[q]) * rows + cell];
  }
  int w_at(int q, CellId cell) const {
    return w[static_cast<std::size_t>(block_of_q[q]) * rows + cell];
  }
  bool has_row(int q) const { return q >= 0 && q < static_cast<int>(block_of_q.size()) &&
                                     block_of_q[q] >= 0; }
};

Policy extract_policy(const QTable& table, const AbstractGame& game);

struct LearnRate {
  enum class Kind { Linear, RobbinsMonro };
  Kind kind = Kind::Linear;
  double a0 = 0.1;  // linear start over the global episode schedule
  double a1 = 0.02; // linear end
  double c = 0.5;   // robbins-monro numerator, step c/(1+visits)
};

struct LearnOptions {
  std::int64_t episodes = 0;
  // Multi-stage runs share one linear schedule: `episode_offset` episodes are
  // assumed done and the rate anneals over `global_episodes` in total (-1
  // means just `episodes`).
  std::int64_t global_episodes = -1;
  std::int64_t episode_offset = 0;
  double explore = 0.1;
  LearnRate lr;
  bool init_uniform = true;
  CellId init_cell = 0;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
};

struct TrainResult {
  QTable table;
  std::int64_t episodes = 0;
  double visited_fraction = 0.0;
};

TrainResult train(const AbstractGame& game, const LearnOptions& opt,
                  const QTable* warm_start = nullptr);

// Seeds a fine-grid table from a coarse one: each fine row copies the coarse
// row of the cell containing its representative, the sink maps to the sink,
// and adversary actions are mapped between the internal grids.
QTable transfer_table(const QTable& coarse, const AbstractGame& coarse_game,
                      const AbstractGame& fine_game);

// Trains through a grid hierarchy (games ordered coarse to fine, one episode
// budget each), transferring the table at every boundary.  The linear rate
// anneals across the combined budget and stage i draws from RNG stream
// base.stream + i.
QTable multilevel_train(std::span<const AbstractGame> games,
                        std::span<const std::int64_t> episodes, const LearnOptions& base);

}  // namespace compsyn
