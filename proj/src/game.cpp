#include "compsyn/game.hpp"

#include <stdexcept>
#include <string>

namespace compsyn {

namespace {

std::vector<std::vector<double>> resolve_w_actions(const Grid& g, InternalGridMode mode) {
  std::vector<std::vector<double>> out;
  if (g.dims() == 0) {
    out.emplace_back();  // a single no-op action when there is nothing to pick
    return out;
  }
  if (mode == InternalGridMode::Cartesian) {
    out.reserve(static_cast<std::size_t>(g.n_cells()));
    for (CellId c = 0; c < g.n_cells(); ++c) out.push_back(g.representative(c));
  } else {
    for (std::size_t axis = 0; axis < g.dims(); ++axis)
      for (std::int64_t cell = 0; cell < g.cells_in_dim(axis); ++cell) {
        const double v = g.lo(axis) + (static_cast<double>(cell) + 0.5) * g.width(axis);
        out.emplace_back(g.dims(), v);
      }
  }
  return out;
}

}  // namespace

AbstractGame::AbstractGame(SubsystemModel model, Grid state_grid, double internal_width,
                           InternalGridMode mode, std::vector<AtomBox> atoms,
                           CoSafetyDFA dfa, RewardMachine rm, double gamma)
    : model_(std::move(model)),
      grid_(std::move(state_grid)),
      mode_(mode),
      atoms_(std::move(atoms)),
      dfa_(std::move(dfa)),
      rm_(std::move(rm)),
      gamma_(gamma) {
  model_.validate();
  if (grid_.dims() != model_.state_dims())
    throw std::invalid_argument("game: state grid dimension mismatch");
  for (std::size_t d = 0; d < grid_.dims(); ++d)
    if (grid_.lo(d) != model_.state_box[d].first || grid_.hi(d) != model_.state_box[d].second)
      throw std::invalid_argument("game: state grid box must equal the model state box");
  if (gamma_ <= 0.0 || gamma_ > 1.0)
    throw std::invalid_argument("game: gamma must lie in (0, 1]");
  if (static_cast<std::size_t>(1u << atoms_.size()) >
      static_cast<std::size_t>(dfa_.n_letters))
    throw std::invalid_argument("game: automaton alphabet too small for the atoms");

  if (model_.internal_dims() > 0) {
    std::vector<double> ilo, ihi;
    for (const auto& [lo, hi] : model_.internal_box) {
      ilo.push_back(lo);
      ihi.push_back(hi);
    }
    internal_grid_ = Grid(std::move(ilo), std::move(ihi), internal_width);
  }
  w_actions_ = resolve_w_actions(internal_grid_, mode_);

  if (grid_.n_cells() > 2'000'000)
    throw std::invalid_argument("game: state grid too large");
  cell_letter_.resize(static_cast<std::size_t>(grid_.n_cells()) + 1, 0u);
  std::vector<double> rep(grid_.dims());
  for (CellId c = 0; c < grid_.n_cells(); ++c) {
    grid_.representative(c, rep);
    cell_letter_[static_cast<std::size_t>(c)] = letter_of(atoms_, rep);
  }
  cell_letter_[static_cast<std::size_t>(grid_.sink())] = 0u;

  scratch_x_.resize(grid_.dims());
  scratch_x2_.resize(grid_.dims());
  scratch_z_.resize(grid_.dims());
}

std::int64_t AbstractGame::state_action_pairs() const {
  std::int64_t live_levels = 0;
  for (int q = 0; q < dfa_.n_states; ++q)
    if (dfa_.depth[q] >= 0 && dfa_.depth[q] < dfa_.horizon) ++live_levels;
  return live_levels * grid_.n_cells() * static_cast<std::int64_t>(n_u()) *
         (1 + static_cast<std::int64_t>(n_w()));
}

GameStep AbstractGame::arrive(CellId cell, int q, int k, double accrued) const {
  if (dfa_.is_terminal(q)) return {{cell, q, k, -1, true}, accrued};
  if (k == dfa_.horizon) {
    const int q2 = dfa_.step(q, cell_letter_[static_cast<std::size_t>(cell)]);
    return {{cell, q2, k, -1, true}, accrued + rm_.reward(q, q2)};
  }
  return {{cell, q, k, -1, false}, accrued};
}

GameStep AbstractGame::reset(CellId cell) const {
  if (cell < 0 || cell > grid_.sink())
    throw std::invalid_argument("game: reset cell out of range");
  return arrive(cell, dfa_.initial, 0, 0.0);
}

GameState AbstractGame::step_max(const GameState& s, int u) const {
  if (s.terminal) throw std::invalid_argument("game: step_max on terminal state");
  if (s.pending_u >= 0) throw std::invalid_argument("game: controller already moved");
  if (u < 0 || u >= static_cast<int>(n_u()))
    throw std::invalid_argument("game: controller action out of range");
  GameState next = s;
  next.pending_u = u;
  return next;
}

GameStep AbstractGame::step_min(const GameState& s, int w, Rng& rng) const {
  const int q2 = dfa_.step(s.q, cell_letter_[static_cast<std::size_t>(s.cell)]);
  const bool moves = !dfa_.is_terminal(q2) && s.cell != grid_.sink();
  if (moves) {
    for (double& z : scratch_z_) z = rng.gauss();
    return step_min_with_noise(s, w, scratch_z_);
  }
  return step_min_with_noise(s, w, {});
}

GameStep AbstractGame::step_min_with_noise(const GameState& s, int w,
                                           std::span<const double> z) const {
  if (s.terminal) throw std::invalid_argument("game: step_min on terminal state");
  if (s.pending_u < 0) throw std::invalid_argument("game: controller must move first");
  if (w < 0 || w >= n_w())
    throw std::invalid_argument("game: adversary action out of range");

  const int q2 = dfa_.step(s.q, cell_letter_[static_cast<std::size_t>(s.cell)]);
  const double r = rm_.reward(s.q, q2);
  if (dfa_.is_terminal(q2)) return {{s.cell, q2, s.k + 1, -1, true}, r};

  CellId cell2 = s.cell;
  if (s.cell != grid_.sink()) {
    if (z.size() != grid_.dims())
      throw std::invalid_argument("game: noise vector has wrong dimension");
    grid_.representative(s.cell, scratch_x_);
    step_subsystem(model_, scratch_x_, static_cast<std::size_t>(s.pending_u),
                   w_actions_[static_cast<std::size_t>(w)], z, scratch_x2_);
    cell2 = grid_.quantize(scratch_x2_);
  }
  return arrive(cell2, q2, s.k + 1, r);
}

int map_w_action(const AbstractGame& fine, const AbstractGame& coarse, int w_fine) {
  if (fine.internal_mode() != coarse.internal_mode())
    throw std::invalid_argument("map_w_action: internal grid modes differ");
  if (w_fine < 0 || w_fine >= fine.n_w())
    throw std::invalid_argument("map_w_action: action out of range");
  if (fine.model().internal_dims() == 0) return 0;

  const Grid& fg = fine.internal_grid();
  const Grid& cg = coarse.internal_grid();
  if (fine.internal_mode() == InternalGridMode::Cartesian) {
    const CellId cell = cg.quantize(fine.w_vector(w_fine));
    if (cell == cg.sink())
      throw std::invalid_argument("map_w_action: fine action outside coarse grid");
    return static_cast<int>(cell);
  }
  // PerAxisSum: actions enumerate (axis, per-axis cell) pairs in axis order.
  int rest = w_fine;
  std::size_t axis = 0;
  while (rest >= fg.cells_in_dim(axis)) {
    rest -= static_cast<int>(fg.cells_in_dim(axis));
    ++axis;
  }
  const double v = fg.lo(axis) + (static_cast<double>(rest) + 0.5) * fg.width(axis);
  std::int64_t ccell =
      static_cast<std::int64_t>((v - cg.lo(axis)) / cg.width(axis) + 1e-9);
  if (ccell >= cg.cells_in_dim(axis)) ccell = cg.cells_in_dim(axis) - 1;
  if (ccell < 0) ccell = 0;
  int base = 0;
  for (std::size_t aj = 0; aj < axis; ++aj) base += static_cast<int>(cg.cells_in_dim(aj));
  return base + static_cast<int>(ccell);
}

}  // namespace compsyn
