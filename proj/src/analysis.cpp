#include "compsyn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "compsyn/rng.hpp"

namespace compsyn {

double penalty(double eps, int n) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("penalty: eps must be in [0, 1]");
  if (n < 1) throw std::invalid_argument("penalty: n must be positive");
  // expm1/log1p keep relative accuracy when eps is tiny and n moderate.
  const double up = std::expm1(static_cast<double>(n) * std::log1p(eps));
  const double down = std::expm1(static_cast<double>(n) * std::log1p(-eps));
  return 0.5 * (up - down);
}

BoundResult lower_bound(std::span<const double> p, std::span<const double> eps) {
  if (p.empty() || p.size() != eps.size())
    throw std::invalid_argument("lower_bound: need matching nonempty p and eps");
  BoundResult r;
  r.product = 1.0;
  double emax = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0))
      throw std::invalid_argument("lower_bound: probabilities must lie in [0, 1]");
    if (!(eps[i] >= 0.0)) throw std::invalid_argument("lower_bound: errors must be nonnegative");
    r.product *= p[i];
    emax = std::max(emax, eps[i]);
  }
  r.penalty = penalty(emax, static_cast<int>(p.size()));
  r.lower = r.product - r.penalty;
  r.vacuous = r.lower < 0.0;
  return r;
}

Interval wilson_interval(std::int64_t successes, std::int64_t n) {
  if (n <= 0) throw std::invalid_argument("wilson_interval: n must be positive");
  if (successes < 0 || successes > n)
    throw std::invalid_argument("wilson_interval: successes out of range");
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

struct NetShape {
  std::vector<std::size_t> offset;
  std::size_t total = 0;
};

NetShape shape_of(const NetworkModel& net) {
  NetShape s;
  s.offset.reserve(net.size());
  for (const auto& sub : net.subsystems) {
    s.offset.push_back(s.total);
    s.total += sub.state_dims();
  }
  return s;
}

void check_eval_inputs(const NetworkModel& net, std::span<const SubsystemController> ctrl,
                       const EvalOptions& opt, const NetShape& shape) {
  net.validate();
  if (ctrl.size() != net.size())
    throw std::invalid_argument("evaluate: one controller per subsystem required");
  if (opt.samples < 1) throw std::invalid_argument("evaluate: samples must be positive");
  if (opt.x0.size() != shape.total)
    throw std::invalid_argument("evaluate: x0 must cover the concatenated network state");
  for (std::size_t i = 0; i < net.size(); ++i) {
    const AbstractGame* g = ctrl[i].game;
    if (g == nullptr || ctrl[i].policy == nullptr)
      throw std::invalid_argument("evaluate: missing controller");
    if (g->state_grid().dims() != net.subsystems[i].state_dims())
      throw std::invalid_argument("evaluate: controller grid does not match subsystem");
    if (g->horizon() != ctrl[0].game->horizon())
      throw std::invalid_argument("evaluate: controllers disagree on the horizon");
    const std::span<const double> x0i(opt.x0.data() + shape.offset[i],
                                      net.subsystems[i].state_dims());
    if (g->quantize_point(x0i) == g->sink())
      throw std::invalid_argument("evaluate: x0 lies outside the state box");
  }
}

struct TrajCounts {
  std::int64_t joint = 0;
  std::vector<std::int64_t> spec_ok;
  std::vector<std::int64_t> ctrl_ok;
};

// Controllers act on quantized labels; satisfaction is judged on the
// continuous trajectory, so each subsystem tracks the automaton twice.  Once
// a controller's monitor ends its input choice stays pinned to the last live
// automaton state.
void run_block(const NetworkModel& net, std::span<const SubsystemController> ctrl,
               const EvalOptions& opt, const NetShape& shape, std::int64_t t0, std::int64_t t1,
               TrajCounts& out) {
  const std::size_t n_sub = net.size();
  const int horizon = ctrl[0].game->horizon();
  out.spec_ok.assign(n_sub, 0);
  out.ctrl_ok.assign(n_sub, 0);

  std::vector<double> x(shape.total), x2(shape.total), z(shape.total);
  std::vector<std::size_t> u(n_sub);
  std::vector<int> qc(n_sub), ql(n_sub), qs(n_sub);

  for (std::int64_t t = t0; t < t1; ++t) {
    Rng rng(opt.seed, static_cast<std::uint64_t>(t));
    std::copy(opt.x0.begin(), opt.x0.end(), x.begin());
    for (std::size_t i = 0; i < n_sub; ++i) {
      qc[i] = ctrl[i].game->dfa().initial;
      ql[i] = qc[i];
      qs[i] = qc[i];
    }
    for (int k = 0; k < horizon; ++k) {
      for (std::size_t i = 0; i < n_sub; ++i) {
        const AbstractGame& g = *ctrl[i].game;
        const std::span<const double> xi(x.data() + shape.offset[i], g.state_grid().dims());
        const CellId cell = g.quantize_point(xi);
        const int q_pol = g.dfa().is_terminal(qc[i]) ? ql[i] : qc[i];
        u[i] = ctrl[i].policy->has_row(q_pol)
                   ? static_cast<std::size_t>(ctrl[i].policy->u_at(q_pol, cell))
                   : 0;
        if (!g.dfa().is_terminal(qc[i])) {
          ql[i] = qc[i];
          qc[i] = g.dfa().step(qc[i], g.letter_of_cell(cell));
        }
        qs[i] = g.dfa().step(qs[i], letter_of(g.atoms(), xi));
      }
      for (std::size_t d = 0; d < shape.total; ++d) z[d] = rng.gauss();
      step_network(net, x, u, z, x2);
      std::swap(x, x2);
    }
    bool all_ok = true;
    for (std::size_t i = 0; i < n_sub; ++i) {
      const AbstractGame& g = *ctrl[i].game;
      const std::span<const double> xi(x.data() + shape.offset[i], g.state_grid().dims());
      qc[i] = g.dfa().step(qc[i], g.letter_of_cell(g.quantize_point(xi)));
      qs[i] = g.dfa().step(qs[i], letter_of(g.atoms(), xi));
      const bool ok = qs[i] == g.dfa().accept_state;
      all_ok = all_ok && ok;
      if (ok) ++out.spec_ok[i];
      if (qc[i] == g.dfa().accept_state) ++out.ctrl_ok[i];
    }
    if (all_ok) ++out.joint;
  }
}

}  // namespace

NetworkEvalResult evaluate_network(const NetworkModel& net,
                                   std::span<const SubsystemController> ctrl,
                                   const EvalOptions& opt) {
  const NetShape shape = shape_of(net);
  check_eval_inputs(net, ctrl, opt, shape);

  int workers = std::max(1, opt.workers);
  workers = static_cast<int>(std::min<std::int64_t>(workers, opt.samples));
  std::vector<TrajCounts> parts(static_cast<std::size_t>(workers));
  if (workers == 1) {
    run_block(net, ctrl, opt, shape, 0, opt.samples, parts[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int wi = 0; wi < workers; ++wi) {
      const std::int64_t t0 = opt.samples * wi / workers;
      const std::int64_t t1 = opt.samples * (wi + 1) / workers;
      pool.emplace_back([&, wi, t0, t1] {
        run_block(net, ctrl, opt, shape, t0, t1, parts[static_cast<std::size_t>(wi)]);
      });
    }
    for (auto& th : pool) th.join();
  }

  NetworkEvalResult res;
  res.samples = opt.samples;
  res.accepted.assign(net.size(), 0);
  res.ctrl_accepted.assign(net.size(), 0);
  for (const TrajCounts& part : parts) {
    res.joint_accepted += part.joint;
    for (std::size_t i = 0; i < net.size(); ++i) {
      res.accepted[i] += part.spec_ok[i];
      res.ctrl_accepted[i] += part.ctrl_ok[i];
    }
  }
  return res;
}

PercentileTable percentile_trajectories(const NetworkModel& net,
                                        std::span<const SubsystemController> ctrl,
                                        const EvalOptions& opt,
                                        std::span<const int> percentiles, bool aggregate) {
  const NetShape shape = shape_of(net);
  check_eval_inputs(net, ctrl, opt, shape);
  if (percentiles.empty()) throw std::invalid_argument("percentiles: need at least one rank");
  for (int p : percentiles)
    if (p < 1 || p > 100) throw std::invalid_argument("percentiles: ranks must be in 1..100");

  const std::size_t n_sub = net.size();
  const std::size_t n = static_cast<std::size_t>(opt.samples);
  const int horizon = ctrl[0].game->horizon();

  PercentileTable table;
  table.horizon = horizon;
  table.columns = aggregate ? 1 : static_cast<int>(n_sub);
  table.aggregated = aggregate;
  table.percentiles.assign(percentiles.begin(), percentiles.end());
  table.values.assign(static_cast<std::size_t>(horizon + 1) * table.columns * percentiles.size(),
                      0.0);

  // All trajectories advance in lockstep so each time slice is available for
  // ranking; per-trajectory streams keep the runs identical to
  // evaluate_network's.
  std::vector<double> x(n * shape.total), z(shape.total);
  std::vector<double> xt(shape.total);
  std::vector<std::size_t> u(n_sub);
  std::vector<int> qc(n * n_sub), ql(n * n_sub);
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    rngs.emplace_back(opt.seed, static_cast<std::uint64_t>(t));
    std::copy(opt.x0.begin(), opt.x0.end(), x.begin() + static_cast<std::ptrdiff_t>(t * shape.total));
    for (std::size_t i = 0; i < n_sub; ++i) {
      qc[t * n_sub + i] = ctrl[i].game->dfa().initial;
      ql[t * n_sub + i] = qc[t * n_sub + i];
    }
  }

  std::vector<double> buf;
  const auto record = [&](int time) {
    const std::size_t npct = table.percentiles.size();
    for (int col = 0; col < table.columns; ++col) {
      buf.clear();
      if (aggregate) {
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t i = 0; i < n_sub; ++i)
            buf.push_back(x[t * shape.total + shape.offset[i]]);
      } else {
        for (std::size_t t = 0; t < n; ++t)
          buf.push_back(x[t * shape.total + shape.offset[static_cast<std::size_t>(col)]]);
      }
      for (std::size_t pi = 0; pi < npct; ++pi) {
        // Nearest rank: the ceil(p*n/100)-th smallest.
        const std::size_t m = buf.size();
        std::size_t idx = (static_cast<std::size_t>(table.percentiles[pi]) * m + 99) / 100;
        idx = std::max<std::size_t>(idx, 1) - 1;
        std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(idx), buf.end());
        table.values[(static_cast<std::size_t>(time) * table.columns + col) * npct + pi] =
            buf[idx];
      }
    }
  };

  record(0);
  for (int k = 0; k < horizon; ++k) {
    for (std::size_t t = 0; t < n; ++t) {
      double* xt0 = x.data() + t * shape.total;
      for (std::size_t i = 0; i < n_sub; ++i) {
        const AbstractGame& g = *ctrl[i].game;
        const std::span<const double> xi(xt0 + shape.offset[i], g.state_grid().dims());
        const CellId cell = g.quantize_point(xi);
        int& qci = qc[t * n_sub + i];
        int& qli = ql[t * n_sub + i];
        const int q_pol = g.dfa().is_terminal(qci) ? qli : qci;
        u[i] = ctrl[i].policy->has_row(q_pol)
                   ? static_cast<std::size_t>(ctrl[i].policy->u_at(q_pol, cell))
                   : 0;
        if (!g.dfa().is_terminal(qci)) {
          qli = qci;
          qci = g.dfa().step(qci, g.letter_of_cell(cell));
        }
      }
      for (std::size_t d = 0; d < shape.total; ++d) z[d] = rngs[t].gauss();
      step_network(net, std::span<const double>(xt0, shape.total), u, z, xt);
      std::copy(xt.begin(), xt.end(), xt0);
    }
    record(k + 1);
  }
  return table;
}

void write_percentile_csv(const PercentileTable& table, std::ostream& os) {
  os << "time,subsystem,percentile,value\n";
  char num[64];
  for (int time = 0; time <= table.horizon; ++time) {
    for (int col = 0; col < table.columns; ++col) {
      for (std::size_t pi = 0; pi < table.percentiles.size(); ++pi) {
        os << time << ',';
        if (table.aggregated)
          os << "all";
        else
          os << col;
        std::snprintf(num, sizeof num, "%.10g", table.at(time, col, pi));
        os << ',' << table.percentiles[pi] << ',' << num << '\n';
      }
    }
  }
}

AdvEstimate evaluate_adversarial(const AbstractGame& game, const Policy& pol, CellId start_cell,
                                 std::int64_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("evaluate_adversarial: samples must be positive");
  if (start_cell < 0 || start_cell > game.n_cells())
    throw std::invalid_argument("evaluate_adversarial: start cell out of range");
  AdvEstimate est;
  est.samples = samples;
  for (std::int64_t t = 0; t < samples; ++t) {
    Rng rng(seed, static_cast<std::uint64_t>(t));
    const auto res = game.rollout(
        start_cell, [&](const GameState& s) { return pol.u_at(s.q, s.cell); },
        [&](const GameState& s) { return pol.w_at(s.q, s.cell); }, rng);
    if (res.accepted) ++est.successes;
  }
  est.ci = wilson_interval(est.successes, est.samples);
  return est;
}

}  // namespace compsyn
