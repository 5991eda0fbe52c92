#include "compsyn/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace compsyn {

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

AbstractKernel::AbstractKernel(const SubsystemModel& model, const Grid& grid)
    : model_(model), grid_(grid) {
  if (grid_.dims() != model_.state_dims())
    throw std::invalid_argument("kernel: grid dimension mismatch");
  for (double rd : model_.r)
    if (rd <= 0.0)
      throw std::invalid_argument("kernel: noise scale must be positive");
  rep_.resize(grid_.dims());
  mass_.resize(grid_.dims());
  for (std::size_t d = 0; d < grid_.dims(); ++d)
    mass_[d].resize(static_cast<std::size_t>(grid_.cells_in_dim(d)));
}

void AbstractKernel::row(CellId cell, std::size_t u, std::span<const double> w,
                         std::span<double> out) const {
  grid_.representative(cell, rep_);
  row_at(rep_, u, w, out);
}

void AbstractKernel::row_at(std::span<const double> x, std::size_t u,
                            std::span<const double> w, std::span<double> out) const {
  const std::size_t dims = grid_.dims();
  if (out.size() != static_cast<std::size_t>(grid_.n_cells()) + 1)
    throw std::invalid_argument("kernel: output row has wrong size");

  double inbox = 1.0;
  for (std::size_t d = 0; d < dims; ++d) {
    double mean = model_.a[u][d] * x[d] + model_.b[d] * model_.ext_inputs[u] + model_.c[d];
    for (std::size_t j = 0; j < w.size(); ++j) mean += model_.d_gain[d][j] * w[j];
    const double inv_r = 1.0 / model_.r[d];
    const std::int64_t n = grid_.cells_in_dim(d);
    double prev = normal_cdf((grid_.lo(d) - mean) * inv_r);
    const double lowest = prev;
    for (std::int64_t i = 0; i < n; ++i) {
      const double edge = grid_.lo(d) + static_cast<double>(i + 1) * grid_.width(d);
      const double cur = normal_cdf((edge - mean) * inv_r);
      mass_[d][static_cast<std::size_t>(i)] = std::max(cur - prev, 0.0);
      prev = cur;
    }
    inbox *= prev - lowest;
  }

  // Row-major outer product over per-dimension masses.
  const std::size_t cells = static_cast<std::size_t>(grid_.n_cells());
  if (dims == 1) {
    for (std::size_t i = 0; i < cells; ++i) out[i] = mass_[0][i];
  } else {
    std::vector<std::int64_t> idx(dims, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      double p = 1.0;
      for (std::size_t d = 0; d < dims; ++d) p *= mass_[d][static_cast<std::size_t>(idx[d])];
      out[c] = p;
      for (std::size_t d = dims; d-- > 0;) {
        if (++idx[d] < grid_.cells_in_dim(d)) break;
        idx[d] = 0;
      }
    }
  }
  out[cells] = std::max(1.0 - inbox, 0.0);
}

namespace {

// Shared backward induction; when a policy pointer is set the corresponding
// player is pinned to it.
ExactSolution solve_impl(const AbstractGame& game, const Policy* max_pol,
                         const Policy* min_pol, bool keep_min_tables = false) {
  const CoSafetyDFA& dfa = game.dfa();
  const RewardMachine& rm = game.reward_machine();
  const int T = game.horizon();
  const std::int64_t rows = game.n_cells() + 1;
  const int n_u = game.n_u();
  const int n_w = game.n_w();
  const double gamma = game.gamma();
  const AbstractKernel kernel(game.model(), game.state_grid());

  ExactSolution sol;
  sol.horizon = T;
  sol.rows = rows;
  sol.n_states = dfa.n_states;
  sol.n_u = n_u;
  sol.n_w = n_w;
  sol.value.assign(static_cast<std::size_t>(std::max(T, 0)), {});
  sol.qmax.assign(static_cast<std::size_t>(std::max(T, 0)), {});
  if (keep_min_tables) sol.qmin.assign(static_cast<std::size_t>(std::max(T, 0)), {});

  // Folded tail: reward of the last letter per automaton state reachable at
  // the final level, evaluated at every destination cell.
  std::vector<std::vector<double>> rtail(dfa.n_states);
  for (int q = 0; q < dfa.n_states; ++q) {
    if (dfa.depth[q] != T) continue;
    rtail[q].resize(static_cast<std::size_t>(rows));
    for (CellId c = 0; c < rows; ++c) {
      const int q2 = dfa.step(q, game.letter_of_cell(c));
      rtail[q][static_cast<std::size_t>(c)] = rm.reward(q, q2);
    }
  }

  std::vector<double> rowbuf(static_cast<std::size_t>(rows));
  std::vector<double> v_next;
  for (int k = T - 1; k >= 0; --k) {
    std::vector<double> vk(static_cast<std::size_t>(dfa.n_states) * rows, 0.0);
    std::vector<double> qk(static_cast<std::size_t>(dfa.n_states) * rows * n_u, 0.0);
    std::vector<double> mk;
    if (keep_min_tables)
      mk.assign(static_cast<std::size_t>(dfa.n_states) * rows * n_u * n_w, 0.0);
    const bool fold = k + 1 == T;
    const std::vector<int> live = dfa.live_states_at(k);

    for (CellId cell = 0; cell < rows; ++cell) {
      for (int q : live) {
        const int q2 = dfa.step(q, game.letter_of_cell(cell));
        const double r1 = rm.reward(q, q2);
        const std::size_t vat = static_cast<std::size_t>(q) * rows + cell;
        const std::size_t qat = vat * n_u;

        if (dfa.is_terminal(q2)) {
          for (int u = 0; u < n_u; ++u) qk[qat + u] = r1;
          if (keep_min_tables)
            for (std::size_t i = 0; i < static_cast<std::size_t>(n_u) * n_w; ++i)
              mk[qat * n_w + i] = r1;
          vk[vat] = r1;
          continue;
        }
        const double* tail =
            fold ? rtail[q2].data() : &v_next[static_cast<std::size_t>(q2) * rows];

        auto q_of = [&](int u, int w) {
          double cont;
          if (cell == rows - 1) {  // sink is absorbing, no dynamics
            cont = tail[rows - 1];
          } else {
            kernel.row(cell, static_cast<std::size_t>(u), game.w_vector(w), rowbuf);
            double acc = 0.0;
            for (std::int64_t c2 = 0; c2 < rows; ++c2)
              acc += rowbuf[static_cast<std::size_t>(c2)] * tail[c2];
            cont = acc;
          }
          return r1 + (fold ? cont : gamma * cont);
        };

        const int u_lo = max_pol ? max_pol->u_at(q, cell) : 0;
        const int u_hi = max_pol ? u_lo + 1 : n_u;
        double best = 0.0;
        bool first_u = true;
        for (int u = u_lo; u < u_hi; ++u) {
          double worst;
          if (min_pol) {
            worst = q_of(u, min_pol->w_at(q, cell));
          } else {
            worst = q_of(u, 0);
            if (keep_min_tables) mk[(qat + u) * n_w] = worst;
            for (int w = 1; w < n_w; ++w) {
              const double v = q_of(u, w);
              if (keep_min_tables) mk[(qat + u) * n_w + w] = v;
              worst = std::min(worst, v);
            }
          }
          qk[qat + u] = worst;
          if (first_u || worst > best) best = worst;
          first_u = false;
        }
        if (max_pol)  // keep the table meaningful off the pinned input
          for (int u = 0; u < n_u; ++u)
            if (u != u_lo) qk[qat + u] = best;
        vk[vat] = best;
      }
    }
    sol.value[static_cast<std::size_t>(k)] = vk;
    sol.qmax[static_cast<std::size_t>(k)] = std::move(qk);
    if (keep_min_tables) sol.qmin[static_cast<std::size_t>(k)] = std::move(mk);
    v_next = std::move(vk);
  }

  sol.value0.resize(static_cast<std::size_t>(rows));
  for (CellId cell = 0; cell < rows; ++cell) {
    const GameStep start = game.reset(cell);
    double v = start.reward;
    if (!start.next.terminal)
      v += sol.value[0][static_cast<std::size_t>(start.next.q) * rows + cell];
    sol.value0[static_cast<std::size_t>(cell)] = v;
  }
  return sol;
}

}  // namespace

ExactSolution solve_game(const AbstractGame& game, bool keep_min_tables) {
  return solve_impl(game, nullptr, nullptr, keep_min_tables);
}

ExactSolution solve_best_response(const AbstractGame& game, const Policy& controller) {
  return solve_impl(game, &controller, nullptr);
}

ExactSolution solve_policy_pair(const AbstractGame& game, const Policy& pol) {
  return solve_impl(game, &pol, &pol);
}

}  // namespace compsyn
