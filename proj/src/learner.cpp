#include "compsyn/learner.hpp"

#include <algorithm>
#include <stdexcept>

namespace compsyn {

QTable::QTable(const AbstractGame& game) {
  const CoSafetyDFA& dfa = game.dfa();
  block_of_q_.assign(dfa.n_states, -1);
  for (int q = 0; q < dfa.n_states; ++q)
    if (dfa.depth[q] >= 0 && dfa.depth[q] < dfa.horizon) {
      block_of_q_[q] = static_cast<int>(q_of_block_.size());
      q_of_block_.push_back(q);
    }
  rows_ = game.n_cells() + 1;
  n_u_ = game.n_u();
  n_w_ = game.n_w();
  const std::size_t max_entries =
      static_cast<std::size_t>(q_of_block_.size()) * rows_ * n_u_;
  qmin_.assign(max_entries * n_w_, 0.0);
  qmax_.assign(max_entries, 0.0);
  minval_.assign(max_entries, 0.0);
  minarg_.assign(max_entries, 0);
  nmin_.assign(max_entries * n_w_, 0);
  nmax_.assign(max_entries, 0);
}

double QTable::value(int q, CellId cell) const {
  const std::size_t base = max_idx(q, cell, 0);
  double best = qmax_[base];
  for (int u = 1; u < n_u_; ++u) best = std::max(best, qmax_[base + u]);
  return best;
}

int QTable::greedy_u(int q, CellId cell) const {
  const std::size_t base = max_idx(q, cell, 0);
  int arg = 0;
  double best = qmax_[base];
  for (int u = 1; u < n_u_; ++u)
    if (qmax_[base + u] > best) {
      best = qmax_[base + u];
      arg = u;
    }
  return arg;
}

void QTable::set_qmin(int q, CellId cell, int u, int w, double v) {
  const std::size_t row = max_idx(q, cell, u);
  const std::size_t at = row * n_w_ + w;
  qmin_[at] = v;
  double& m = minval_[row];
  int& a = minarg_[row];
  if (v < m || (v == m && w < a)) {
    m = v;
    a = w;
  } else if (w == a && v > m) {
    // The cached minimum grew; rescan the row.
    const double* p = &qmin_[row * n_w_];
    m = p[0];
    a = 0;
    for (int j = 1; j < n_w_; ++j)
      if (p[j] < m) {
        m = p[j];
        a = j;
      }
  }
}

double QTable::visited_fraction() const {
  if (nmin_.empty()) return 0.0;
  std::size_t seen = 0;
  for (std::uint32_t n : nmin_)
    if (n > 0) ++seen;
  return static_cast<double>(seen) / static_cast<double>(nmin_.size());
}

void QTable::load_qmin(std::span<const double> values) {
  if (values.size() != qmin_.size())
    throw std::invalid_argument("load_qmin: size mismatch");
  std::copy(values.begin(), values.end(), qmin_.begin());
  for (std::size_t row = 0; row < minval_.size(); ++row) {
    const double* p = &qmin_[row * n_w_];
    double m = p[0];
    int a = 0;
    for (int j = 1; j < n_w_; ++j)
      if (p[j] < m) {
        m = p[j];
        a = j;
      }
    minval_[row] = m;
    minarg_[row] = a;
  }
}

void QTable::load_qmax(std::span<const double> values) {
  if (values.size() != qmax_.size())
    throw std::invalid_argument("load_qmax: size mismatch");
  std::copy(values.begin(), values.end(), qmax_.begin());
}

Policy extract_policy(const QTable& table, const AbstractGame& game) {
  Policy p;
  p.block_of_q.resize(game.dfa().n_states);
  for (int q = 0; q < game.dfa().n_states; ++q) p.block_of_q[q] = table.block_of_q(q);
  p.rows = table.rows();
  p.u.resize(static_cast<std::size_t>(table.n_blocks()) * p.rows);
  p.w.resize(p.u.size());
  for (int b = 0; b < table.n_blocks(); ++b) {
    const int q = table.q_of_block(b);
    for (CellId cell = 0; cell < p.rows; ++cell) {
      const int u = table.greedy_u(q, cell);
      p.u[static_cast<std::size_t>(b) * p.rows + cell] = u;
      p.w[static_cast<std::size_t>(b) * p.rows + cell] = table.argmin_w(q, cell, u);
    }
  }
  return p;
}

namespace {

double rate_for(const LearnRate& lr, std::int64_t global_episode, std::int64_t total,
                std::uint32_t visits) {
  if (lr.kind == LearnRate::Kind::RobbinsMonro)
    return lr.c / static_cast<double>(1 + visits);
  if (total <= 1) return lr.a0;
  double t = static_cast<double>(global_episode) / static_cast<double>(total - 1);
  t = std::clamp(t, 0.0, 1.0);
  return lr.a0 + (lr.a1 - lr.a0) * t;
}

// Greedy input during self-play, ties broken uniformly at random.  Fresh and
// freshly transferred tables carry many exact ties; spreading them keeps the
// controller from fixating on the first input before the others' adversarial
// floors have formed.
int explore_greedy_u(const QTable& qt, int q, CellId cell, Rng& rng) {
  int arg = 0;
  double best = qt.qmax(q, cell, 0);
  std::uint32_t ties = 1;
  for (int u = 1; u < qt.n_u(); ++u) {
    const double v = qt.qmax(q, cell, u);
    if (v > best) {
      best = v;
      arg = u;
      ties = 1;
    } else if (v == best && rng.uniform_int(++ties) == 0) {
      arg = u;
    }
  }
  return arg;
}

}  // namespace

TrainResult train(const AbstractGame& game, const LearnOptions& opt,
                  const QTable* warm_start) {
  if (opt.episodes < 0) throw std::invalid_argument("train: negative episode count");
  if (opt.explore < 0.0 || opt.explore > 1.0)
    throw std::invalid_argument("train: explore must lie in [0, 1]");
  if (opt.lr.kind == LearnRate::Kind::RobbinsMonro && (opt.lr.c <= 0.0 || opt.lr.c >= 1.0))
    throw std::invalid_argument("train: robbins-monro rate must lie in (0, 1)");
  if (!opt.init_uniform && (opt.init_cell < 0 || opt.init_cell >= game.n_cells()))
    throw std::invalid_argument("train: init cell out of range");

  TrainResult res;
  res.table = warm_start ? *warm_start : QTable(game);
  QTable& qt = res.table;

  const std::int64_t total =
      opt.global_episodes >= 0 ? opt.global_episodes : opt.episodes;
  const double gamma = game.gamma();
  const int n_u = game.n_u();
  const int n_w = game.n_w();
  Rng rng(opt.seed, opt.stream);

  for (std::int64_t ep = 0; ep < opt.episodes; ++ep) {
    const std::int64_t global_ep = opt.episode_offset + ep;
    const CellId start = opt.init_uniform
                             ? static_cast<CellId>(rng.uniform_int(
                                   static_cast<std::uint64_t>(game.n_cells())))
                             : opt.init_cell;
    GameStep cur = game.reset(start);
    while (!cur.next.terminal) {
      const GameState s = cur.next;
      const int u = rng.chance(opt.explore)
                        ? static_cast<int>(rng.uniform_int(n_u))
                        : explore_greedy_u(qt, s.q, s.cell, rng);
      const GameState mid = game.step_max(s, u);
      const int w = rng.chance(opt.explore)
                        ? static_cast<int>(rng.uniform_int(n_w))
                        : qt.argmin_w(s.q, s.cell, u);
      cur = game.step_min(mid, w, rng);

      // Adversary entry first: bootstrap from the controller's table at the
      // destination, zero past the horizon.
      const double boot =
          cur.next.terminal ? 0.0 : qt.value(cur.next.q, cur.next.cell);
      const double target = cur.reward + gamma * boot;
      const double alpha =
          rate_for(opt.lr, global_ep, total, qt.visits(s.q, s.cell, u, w));
      const double old = qt.qmin(s.q, s.cell, u, w);
      qt.set_qmin(s.q, s.cell, u, w, old + alpha * (target - old));
      qt.bump_visits(s.q, s.cell, u, w);

      // Then the controller entries track the refreshed adversarial floors.
      // Every input's move from this node is deterministic and known, so the
      // backup sweeps the whole row instead of only the input just played;
      // otherwise rarely played inputs keep stale estimates and never become
      // competitive.
      for (int u2 = 0; u2 < n_u; ++u2) {
        const double floor_target = qt.min_over_w(s.q, s.cell, u2);
        const double alpha_max =
            rate_for(opt.lr, global_ep, total, qt.max_visits(s.q, s.cell, u2));
        const double old_max = qt.qmax(s.q, s.cell, u2);
        qt.set_qmax(s.q, s.cell, u2, old_max + alpha_max * (floor_target - old_max));
        qt.bump_max_visits(s.q, s.cell, u2);
      }
    }
  }
  res.episodes = opt.episodes;
  res.visited_fraction = qt.visited_fraction();
  return res;
}

QTable transfer_table(const QTable& coarse, const AbstractGame& coarse_game,
                      const AbstractGame& fine_game) {
  if (coarse_game.n_u() != fine_game.n_u())
    throw std::invalid_argument("transfer_table: input counts differ");
  if (coarse_game.dfa().n_states != fine_game.dfa().n_states)
    throw std::invalid_argument("transfer_table: automata differ");

  QTable fine(fine_game);
  std::vector<int> wmap(static_cast<std::size_t>(fine_game.n_w()));
  for (int w = 0; w < fine_game.n_w(); ++w)
    wmap[w] = map_w_action(fine_game, coarse_game, w);

  std::vector<double> rep(fine_game.state_grid().dims());
  const CellId fine_cells = fine_game.n_cells();
  for (int b = 0; b < fine.n_blocks(); ++b) {
    const int q = fine.q_of_block(b);
    for (CellId cf = 0; cf <= fine_cells; ++cf) {
      CellId cc;
      if (cf == fine_cells) {
        cc = coarse_game.n_cells();  // sink to sink
      } else {
        fine_game.state_grid().representative(cf, rep);
        cc = coarse_game.state_grid().quantize(rep);
      }
      for (int u = 0; u < fine.n_u(); ++u) {
        fine.set_qmax(q, cf, u, coarse.qmax(q, cc, u));
        for (int w = 0; w < fine.n_w(); ++w)
          fine.set_qmin(q, cf, u, w, coarse.qmin(q, cc, u, wmap[w]));
      }
    }
  }
  return fine;
}

QTable multilevel_train(std::span<const AbstractGame> games,
                        std::span<const std::int64_t> episodes,
                        const LearnOptions& base) {
  if (games.empty() || games.size() != episodes.size())
    throw std::invalid_argument("multilevel_train: need one episode budget per game");
  for (std::size_t i = 1; i < games.size(); ++i)
    if (!games[i].state_grid().refines(games[i - 1].state_grid()))
      throw std::invalid_argument("multilevel_train: grids must refine the previous stage");

  std::int64_t total = 0;
  for (std::int64_t e : episodes) total += e;

  QTable table;
  std::int64_t done = 0;
  for (std::size_t i = 0; i < games.size(); ++i) {
    LearnOptions opt = base;
    opt.episodes = episodes[i];
    opt.global_episodes = total;
    opt.episode_offset = done;
    opt.stream = base.stream + i;
    if (i == 0) {
      table = train(games[i], opt).table;
    } else {
      QTable warm = transfer_table(table, games[i - 1], games[i]);
      table = train(games[i], opt, &warm).table;
    }
    done += episodes[i];
  }
  return table;
}

}  // namespace compsyn
