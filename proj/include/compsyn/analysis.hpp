#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "compsyn/game.hpp"
#include "compsyn/learner.hpp"
#include "compsyn/model.hpp"

namespace compsyn {

// Half of (1+eps)^n - (1-eps)^n, evaluated to keep relative accuracy at tiny eps.
double penalty(double eps, int n);

struct BoundResult {
  double product = 0.0;
  double penalty = 0.0;
  double lower = 0.0;
  bool vacuous = false;  // lower < 0
};

// Network bound: product of per-subsystem values minus the penalty at the
// largest per-subsystem error.
BoundResult lower_bound(std::span<const double> p, std::span<const double> eps);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// 95% Wilson score interval; n must be positive.
Interval wilson_interval(std::int64_t successes, std::int64_t n);

// One subsystem's controller: the game supplies grid, automaton and labels;
// the policy supplies the input choices.  Games may be shared between
// identical subsystems.
struct SubsystemController {
  const AbstractGame* game = nullptr;
  const Policy* policy = nullptr;
};

struct EvalOptions {
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  std::vector<double> x0;  // concatenated initial state, one block per subsystem
  int workers = 1;
};

struct NetworkEvalResult {
  std::int64_t samples = 0;
  std::int64_t joint_accepted = 0;           // every subsystem satisfied its formula
  std::vector<std::int64_t> accepted;        // per subsystem, judged on continuous labels
  std::vector<std::int64_t> ctrl_accepted;   // per subsystem, judged on quantized labels
};

// Monte Carlo run of the closed network under the per-subsystem controllers.
// Each controller sees only its own quantized state, automaton state and the
// time index; satisfaction is judged on the continuous trajectory.  Each
// trajectory uses its own RNG stream, so results do not depend on `workers`.
NetworkEvalResult evaluate_network(const NetworkModel& net,
                                   std::span<const SubsystemController> ctrl,
                                   const EvalOptions& opt);

struct PercentileTable {
  int horizon = 0;
  int columns = 0;  // subsystem count, or 1 when aggregated
  bool aggregated = false;
  std::vector<int> percentiles;
  std::vector<double> values;  // [(time * columns + col) * percentiles + i]

  double at(int time, int col, std::size_t i) const {
    return values[(static_cast<std::size_t>(time) * columns + col) * percentiles.size() + i];
  }
};

// Nearest-rank percentiles of the first state component per subsystem (or
// pooled over subsystems) at every time 0..horizon.
PercentileTable percentile_trajectories(const NetworkModel& net,
                                        std::span<const SubsystemController> ctrl,
                                        const EvalOptions& opt,
                                        std::span<const int> percentiles, bool aggregate);

// CSV with header time,subsystem,percentile,value (UTF-8, LF).
void write_percentile_csv(const PercentileTable& table, std::ostream& os);

struct AdvEstimate {
  std::int64_t successes = 0;
  std::int64_t samples = 0;
  Interval ci;
};

// Rollout estimate of the subsystem game under a fixed policy pair.
AdvEstimate evaluate_adversarial(const AbstractGame& game, const Policy& pol,
                                 CellId start_cell, std::int64_t samples,
                                 std::uint64_t seed);

}  // namespace compsyn
