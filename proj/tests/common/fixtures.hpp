#pragma once

// Shared builders for the test binaries: closed-form single-subsystem games,
// the two case-study subsystems, and a generator of random small games whose
// noise is wide enough that every cell keeps positive mass from everywhere.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "compsyn/dfa.hpp"
#include "compsyn/formula.hpp"
#include "compsyn/game.hpp"
#include "compsyn/grid.hpp"
#include "compsyn/model.hpp"
#include "compsyn/oracle.hpp"
#include "compsyn/reward.hpp"
#include "compsyn/rng.hpp"

namespace fixtures {

using namespace compsyn;

// 1-dim subsystem without internal inputs; one `a` entry per external input.
inline SubsystemModel scalar_model(double lo, double hi, std::vector<double> inputs,
                                   std::vector<double> a_per_u, double b, double c,
                                   double r) {
  SubsystemModel m;
  m.state_box = {{lo, hi}};
  m.ext_inputs = std::move(inputs);
  for (double av : a_per_u) m.a.push_back({av});
  m.b = {b};
  m.d_gain.assign(1, {});
  m.c = {c};
  m.r = {r};
  m.lipschitz_x = 0.1;
  m.lipschitz_w = 0.1;
  return m;
}

struct GameSpec {
  double delta = 0.5;
  double mu = 0.5;
  InternalGridMode mode = InternalGridMode::Cartesian;
  std::string formula = "G[0,1] p";
  int horizon = 1;
  std::vector<AtomBox> atoms;
  RewardMode reward = RewardMode::Base;
  double kappa = 1e-3;
  double gamma = 1.0;
};

inline AbstractGame make_game_for(const SubsystemModel& m, const GameSpec& gs) {
  std::vector<double> lo, hi;
  for (auto [l, h] : m.state_box) {
    lo.push_back(l);
    hi.push_back(h);
  }
  Grid grid(std::move(lo), std::move(hi), gs.delta);
  std::vector<std::string> names;
  names.reserve(gs.atoms.size());
  for (const AtomBox& ab : gs.atoms) names.push_back(ab.name);
  const ParsedSpec ps = parse_scltl(gs.formula, names);
  CoSafetyDFA dfa = to_dfa(*ps.formula, gs.horizon, static_cast<int>(names.size()));
  RewardMachine rm = make_reward_machine(dfa, gs.reward, gs.kappa);
  return AbstractGame(m, std::move(grid), gs.mu, gs.mode, gs.atoms, std::move(dfa),
                      std::move(rm), gs.gamma);
}

// Case-study subsystems with the published lipschitz constants applied, as
// the shipped configs do.
inline SubsystemModel room_subsystem() {
  SubsystemModel m = build_room_network(3).subsystems[0];
  m.lipschitz_x = 0.4807;
  m.lipschitz_w = 0.004807;
  return m;
}

inline SubsystemModel traffic_subsystem() {
  SubsystemModel m = build_traffic_network(2).subsystems[0];
  m.lipschitz_x = 0.00164275;
  m.lipschitz_w = 0.00821375;
  return m;
}

inline GameSpec room_spec(double delta = 0.001) {
  GameSpec gs;
  gs.delta = delta;
  gs.mu = 0.1;
  gs.mode = InternalGridMode::PerAxisSum;
  gs.formula = "G[0,5] comfortable";
  gs.horizon = 5;
  gs.atoms = {{"comfortable", {{17.0, 18.0}}}};
  return gs;
}

inline GameSpec traffic_spec(double delta = 0.05) {
  GameSpec gs;
  gs.delta = delta;
  gs.mu = 0.01;
  gs.mode = InternalGridMode::Cartesian;
  gs.formula = "G[0,2] below";
  gs.horizon = 2;
  gs.atoms = {{"below", {{0.0, 20.0}}}};
  return gs;
}

inline AbstractGame room_game(double delta = 0.001, RewardMode mode = RewardMode::Base,
                              double kappa = 1e-3) {
  GameSpec gs = room_spec(delta);
  gs.reward = mode;
  gs.kappa = kappa;
  return make_game_for(room_subsystem(), gs);
}

inline AbstractGame traffic_game(double delta = 0.05, RewardMode mode = RewardMode::Base) {
  GameSpec gs = traffic_spec(delta);
  gs.reward = mode;
  return make_game_for(traffic_subsystem(), gs);
}

struct RandomGameParams {
  int max_cells = 8;        // state cells, at least 2
  int max_u = 3;            // external inputs, at least 1
  int max_w_cells = 3;      // internal grid cells when a channel is present
  int max_horizon = 3;      // at least 1
  int n_atoms = 1;          // 1 or 2
  bool allow_internal = true;
  RewardMode reward = RewardMode::Base;
  double kappa = 1e-3;
  double gamma = 1.0;
};

// Positive-literal formula pool.  With one atom, satisfaction always needs
// the atom somewhere, so runs stuck outside the box can never accept and
// the untrainable start rows of the sink keep an exact value of zero.
inline std::string random_formula(Rng& rng, int n_atoms, int horizon) {
  if (n_atoms == 1) {
    switch (rng.uniform_int(5)) {
      case 0: return "G[0," + std::to_string(horizon) + "] p";
      case 1: return "F p";
      case 2: return "X p";
      case 3: return "p U (p & X p)";
      default: return "p & X p";
    }
  }
  switch (rng.uniform_int(5)) {
    case 0: return "p U q";
    case 1: return "F (p & q)";
    case 2: return "G[0," + std::to_string(horizon) + "] (p | q)";
    case 3: return "(X p) | (p U q)";
    default: return "!p | X q";
  }
}

struct RandomGame {
  SubsystemModel model;
  GameSpec spec;
};

inline RandomGame random_small_game(Rng& rng, const RandomGameParams& par = {}) {
  RandomGame out;
  const double lo = -2.0 + 2.0 * rng.uniform01();
  const double span = 1.0 + 2.0 * rng.uniform01();
  const double hi = lo + span;
  const std::int64_t n = 2 + static_cast<std::int64_t>(
                                 rng.uniform_int(static_cast<std::uint32_t>(par.max_cells - 1)));
  const double width = span / static_cast<double>(n);

  SubsystemModel m;
  m.state_box = {{lo, hi}};
  const int n_u = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(par.max_u)));
  for (int u = 0; u < n_u; ++u) {
    m.ext_inputs.push_back(-1.0 + 2.0 * rng.uniform01());
    m.a.push_back({-1.2 + 2.4 * rng.uniform01()});
  }
  m.b = {-1.0 + 2.0 * rng.uniform01()};
  m.c = {lo + span * rng.uniform01() * 0.5};
  m.r = {span * (0.2 + 0.3 * rng.uniform01())};  // wide noise
  if (par.allow_internal && rng.chance(0.5)) {
    const double wlo = -1.0 + rng.uniform01();
    const double wspan = 0.5 + rng.uniform01();
    m.internal_box = {{wlo, wlo + wspan}};
    m.d_gain = {{-0.8 + 1.6 * rng.uniform01()}};
  } else {
    m.d_gain.assign(1, {});
  }
  m.lipschitz_x = 0.1;
  m.lipschitz_w = 0.1;
  out.model = std::move(m);

  GameSpec gs;
  gs.delta = width;
  if (!out.model.internal_box.empty()) {
    const double wspan = out.model.internal_box[0].second - out.model.internal_box[0].first;
    const int wc =
        1 + static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(par.max_w_cells)));
    gs.mu = wspan / static_cast<double>(wc);
  }
  gs.horizon =
      1 + static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(par.max_horizon)));
  gs.formula = random_formula(rng, par.n_atoms, gs.horizon);
  gs.reward = par.reward;
  gs.kappa = par.kappa;
  gs.gamma = par.gamma;

  // Atom boxes aligned to cell edges, each holding at least one cell
  // representative and excluding at least one.
  for (int i = 0; i < par.n_atoms; ++i) {
    const std::int64_t first = static_cast<std::int64_t>(
        rng.uniform_int(static_cast<std::uint32_t>(n)));
    std::int64_t last = first + static_cast<std::int64_t>(
                                    rng.uniform_int(static_cast<std::uint32_t>(n - first)));
    if (first == 0 && last == n - 1) last = n - 2;  // keep the complement nonempty
    AtomBox ab;
    ab.name = i == 0 ? "p" : "q";
    ab.box = {{lo + static_cast<double>(first) * width,
               lo + static_cast<double>(last + 1) * width}};
    gs.atoms.push_back(std::move(ab));
  }
  out.spec = std::move(gs);
  return out;
}

// Materializes every kernel row of a game, indexed (cell * n_u + u) * n_w + w.
inline std::vector<std::vector<double>> kernel_rows(const AbstractGame& game) {
  const AbstractKernel kernel(game.model(), game.state_grid());
  const std::int64_t cells = game.n_cells();
  std::vector<std::vector<double>> rows(
      static_cast<std::size_t>(cells) * game.n_u() * game.n_w());
  for (CellId c = 0; c < cells; ++c)
    for (int u = 0; u < game.n_u(); ++u)
      for (int w = 0; w < game.n_w(); ++w) {
        auto& row = rows[(static_cast<std::size_t>(c) * game.n_u() + u) * game.n_w() + w];
        row.resize(static_cast<std::size_t>(cells) + 1);
        kernel.row(c, static_cast<std::size_t>(u), game.w_vector(w), row);
      }
  return rows;
}

// Exact value of a fixed pure policy pair by backward recursion over levels,
// mirroring the folded transition semantics.  Used to cross-check the solver
// against explicit policy enumeration.
inline std::vector<double> policy_pair_value0(const AbstractGame& game,
                                              const std::vector<std::vector<double>>& rows,
                                              const Policy& rho, const Policy& xi) {
  const CoSafetyDFA& dfa = game.dfa();
  const RewardMachine& rm = game.reward_machine();
  const int T = game.horizon();
  const std::int64_t n_rows = game.n_cells() + 1;
  const double gamma = game.gamma();
  const int n_w = game.n_w();

  std::vector<std::vector<double>> rtail(dfa.n_states);
  for (int q = 0; q < dfa.n_states; ++q) {
    if (dfa.depth[q] != T) continue;
    rtail[q].resize(static_cast<std::size_t>(n_rows));
    for (CellId c = 0; c < n_rows; ++c)
      rtail[q][static_cast<std::size_t>(c)] = rm.reward(q, dfa.step(q, game.letter_of_cell(c)));
  }

  std::vector<std::vector<double>> v_next(dfa.n_states);
  std::vector<std::vector<double>> vk(dfa.n_states);
  for (int k = T - 1; k >= 0; --k) {
    const bool fold = k + 1 == T;
    for (auto& row : vk) row.clear();
    for (int q : dfa.live_states_at(k)) {
      vk[q].assign(static_cast<std::size_t>(n_rows), 0.0);
      for (CellId cell = 0; cell < n_rows; ++cell) {
        const int q2 = dfa.step(q, game.letter_of_cell(cell));
        const double r1 = rm.reward(q, q2);
        if (dfa.is_terminal(q2)) {
          vk[q][static_cast<std::size_t>(cell)] = r1;
          continue;
        }
        const std::vector<double>& tail = fold ? rtail[q2] : v_next[q2];
        double cont;
        if (cell == n_rows - 1) {
          cont = tail[static_cast<std::size_t>(n_rows - 1)];
        } else {
          const int u = rho.u_at(q, cell);
          const int w = xi.w_at(q, cell);
          const std::vector<double>& row =
              rows[(static_cast<std::size_t>(cell) * game.n_u() + u) * n_w + w];
          double acc = 0.0;
          for (CellId c2 = 0; c2 < n_rows; ++c2)
            acc += row[static_cast<std::size_t>(c2)] * tail[static_cast<std::size_t>(c2)];
          cont = acc;
        }
        vk[q][static_cast<std::size_t>(cell)] = r1 + (fold ? cont : gamma * cont);
      }
    }
    std::swap(v_next, vk);
  }

  std::vector<double> v0(static_cast<std::size_t>(n_rows));
  for (CellId cell = 0; cell < n_rows; ++cell) {
    const GameStep start = game.reset(cell);
    double v = start.reward;
    if (!start.next.terminal) v += v_next[start.next.q][static_cast<std::size_t>(cell)];
    v0[static_cast<std::size_t>(cell)] = v;
  }
  return v0;
}

}  // namespace fixtures
