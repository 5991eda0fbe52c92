#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "compsyn/analysis.hpp"
#include "compsyn/game.hpp"
#include "compsyn/learner.hpp"
#include "compsyn/model.hpp"
#include "compsyn/oracle.hpp"
#include "compsyn/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace compsyn;

namespace {

Policy zero_policy(const AbstractGame& g) {
  const QTable layout(g);
  Policy p;
  p.block_of_q.resize(g.dfa().n_states);
  for (int q = 0; q < g.dfa().n_states; ++q) p.block_of_q[q] = layout.block_of_q(q);
  p.rows = layout.rows();
  const std::size_t slots = static_cast<std::size_t>(layout.n_blocks()) * p.rows;
  p.u.assign(slots, 0);
  p.w.assign(slots, 0);
  return p;
}

// the odd terms of the binomial expansion, the quantity penalty() computes
double odd_binomial_sum(double eps, int n) {
  double sum = 0.0;
  double coeff = 1.0;  // C(n, k), updated incrementally
  double power = 1.0;  // eps^k
  for (int k = 0; k <= n; ++k) {
    if (k > 0) {
      coeff = coeff * static_cast<double>(n - k + 1) / static_cast<double>(k);
      power *= eps;
    }
    if (k % 2 == 1) sum += coeff * power;
  }
  return sum;
}

NetworkModel single_net(const SubsystemModel& m) {
  NetworkModel net;
  net.subsystems = {m};
  net.wiring = {{}};
  return net;
}

}  // namespace

TEST_CASE("penalty has closed-form anchors") {
  CHECK(penalty(0.0, 5) == 0.0);
  for (double e : {0.001, 0.05, 0.3}) CHECK(penalty(e, 1) == doctest::Approx(e).epsilon(1e-14));
  // 0.5*((1+e)^2 - (1-e)^2) = 2e
  CHECK(penalty(0.1, 2) == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(penalty(0.004807, 20) == doctest::Approx(0.09626666706067732).epsilon(1e-12));
  CHECK(penalty(0.006571, 7) == doctest::Approx(0.046006930559022496).epsilon(1e-12));
}

TEST_CASE("penalty equals the odd binomial sum") {
  Rng rng(101, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const double eps = 0.2 * rng.uniform01();
    const int n = 1 + static_cast<int>(rng.uniform_int(40));
    const double want = odd_binomial_sum(eps, n);
    CHECK(penalty(eps, n) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("penalty is monotone and validates its domain") {
  double prev = 0.0;
  for (double e = 0.01; e <= 0.2; e += 0.01) {
    const double v = penalty(e, 10);
    CHECK(v > prev);
    prev = v;
  }
  for (int n = 1; n < 30; ++n) CHECK(penalty(0.01, n) < penalty(0.01, n + 1));
  CHECK_THROWS_AS(penalty(-0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(penalty(1.0001, 3), std::invalid_argument);
  CHECK_THROWS_AS(penalty(std::nan(""), 3), std::invalid_argument);
  CHECK_THROWS_AS(penalty(0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(penalty(0.1, -2), std::invalid_argument);
}

TEST_CASE("lower_bound combines products and penalties") {
  {
    const std::vector<double> p(20, 0.999943);
    const std::vector<double> eps(20, 0.004807);
    const BoundResult r = lower_bound(p, eps);
    CHECK(r.lower == doctest::Approx(0.9025939500382543).epsilon(1e-12));
    CHECK(r.product == doctest::Approx(std::pow(0.999943, 20)).epsilon(1e-13));
    CHECK_FALSE(r.vacuous);
  }
  {
    const std::vector<double> p(7, 0.996837);
    const std::vector<double> eps(7, 0.006571);
    const BoundResult r = lower_bound(p, eps);
    CHECK(r.lower == doctest::Approx(0.9320610613307239).epsilon(1e-12));
    CHECK_FALSE(r.vacuous);
  }
  {
    const std::vector<double> p = {0.9};
    const std::vector<double> eps = {0.05};
    const BoundResult r = lower_bound(p, eps);
    CHECK(r.lower == doctest::Approx(0.85).epsilon(1e-13));
  }
  {
    // the penalty takes the worst per-subsystem error
    const std::vector<double> p = {1.0, 1.0};
    const std::vector<double> eps = {0.1, 0.0};
    const BoundResult r = lower_bound(p, eps);
    CHECK(r.penalty == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(r.lower == doctest::Approx(0.8).epsilon(1e-13));
  }
  {
    const std::vector<double> p = {0.5, 0.5};
    const std::vector<double> eps = {0.3, 0.3};
    const BoundResult r = lower_bound(p, eps);
    CHECK(r.product == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(r.penalty == doctest::Approx(0.6).epsilon(1e-13));
    CHECK(r.lower == doctest::Approx(-0.35).epsilon(1e-12));
    CHECK(r.vacuous);
  }
}

TEST_CASE("lower_bound validates its inputs") {
  const std::vector<double> ok = {0.9, 0.9};
  const std::vector<double> eok = {0.01, 0.01};
  CHECK_THROWS_AS(lower_bound({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound(ok, std::vector<double>{0.01}), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound(std::vector<double>{1.2, 0.9}, eok), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound(std::vector<double>{-0.1, 0.9}, eok), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound(ok, std::vector<double>{-0.01, 0.01}), std::invalid_argument);
}

TEST_CASE("wilson_interval matches the frozen 95% case and clamps at the edges") {
  const Interval i = wilson_interval(95, 100);
  CHECK(i.lo == doctest::Approx(0.8882495307680808).epsilon(1e-12));
  CHECK(i.hi == doctest::Approx(0.9784563208456319).epsilon(1e-12));
  CHECK(i.lo < 0.95);
  CHECK(i.hi > 0.95);

  const Interval zero = wilson_interval(0, 10);
  CHECK(zero.lo >= 0.0);
  CHECK(zero.lo <= 1e-12);
  CHECK(zero.hi > 0.2);
  CHECK(zero.hi < 0.4);

  const Interval full = wilson_interval(10, 10);
  CHECK(full.hi <= 1.0);
  CHECK(full.hi >= 1.0 - 1e-12);
  CHECK(full.lo > 0.6);

  CHECK(wilson_interval(50, 100).lo < wilson_interval(60, 100).lo);
  CHECK(wilson_interval(50, 100).hi < wilson_interval(60, 100).hi);

  CHECK_THROWS_AS(wilson_interval(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(1, -5), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(-1, 10), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(11, 10), std::invalid_argument);
}

TEST_CASE("evaluate_adversarial counts certain games exactly") {
  SubsystemModel m = fixtures::scalar_model(0.0, 1.0, {0.5}, {0.0}, 0.0, 0.5, 0.2);
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.horizon = 2;
  gs.atoms = {{"p", {{0.0, 0.5}}}};

  gs.formula = "p | !p";
  const AbstractGame taut = fixtures::make_game_for(m, gs);
  const Policy pt = zero_policy(taut);
  const AdvEstimate yes = evaluate_adversarial(taut, pt, 0, 500, 7);
  CHECK(yes.successes == 500);
  CHECK(yes.samples == 500);
  const Interval want = wilson_interval(500, 500);
  CHECK(yes.ci.lo == want.lo);
  CHECK(yes.ci.hi == want.hi);

  gs.formula = "false";
  const AbstractGame never = fixtures::make_game_for(m, gs);
  const Policy pn = zero_policy(never);
  CHECK(evaluate_adversarial(never, pn, 0, 200, 7).successes == 0);

  const AdvEstimate a = evaluate_adversarial(taut, pt, 1, 300, 11);
  const AdvEstimate b = evaluate_adversarial(taut, pt, 1, 300, 11);
  CHECK(a.successes == b.successes);

  CHECK_NOTHROW(evaluate_adversarial(taut, pt, taut.sink(), 10, 1));
  CHECK_THROWS_AS(evaluate_adversarial(taut, pt, 0, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_adversarial(taut, pt, -1, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_adversarial(taut, pt, taut.sink() + 1, 10, 1), std::invalid_argument);
}

TEST_CASE("evaluate_adversarial tracks the pinned-pair value") {
  SubsystemModel m;
  m.state_box = {{0.0, 1.5}};
  m.ext_inputs = {0.3, 0.9};
  m.a = {{0.6}, {-0.4}};
  m.b = {1.0};
  m.c = {0.1};
  m.r = {0.45};
  m.internal_box = {{0.0, 1.0}};
  m.d_gain = {{0.5}};
  m.lipschitz_x = 0.1;
  m.lipschitz_w = 0.1;
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.mu = 0.5;
  gs.formula = "F p";
  gs.horizon = 2;
  gs.atoms = {{"p", {{0.5, 1.0}}}};
  const AbstractGame g = fixtures::make_game_for(m, gs);

  Policy pol = zero_policy(g);
  for (std::size_t i = 0; i < pol.u.size(); ++i) {
    pol.u[i] = static_cast<int>(i % 2);
    pol.w[i] = static_cast<int>((i / 2) % 2);
  }
  const double v = solve_policy_pair(g, pol).value0[0];
  const AdvEstimate est = evaluate_adversarial(g, pol, 0, 20000, 97);
  const double freq = static_cast<double>(est.successes) / 20000.0;
  const double se = std::sqrt(std::max(v * (1.0 - v), 1e-12) / 20000.0);
  CHECK(std::abs(freq - v) <= 3.5 * se + 1e-9);
  CHECK(est.ci.lo <= v);
  CHECK(est.ci.hi >= v);
}

TEST_CASE("evaluate_network counts certain runs exactly") {
  const SubsystemModel m = fixtures::scalar_model(0.0, 1.0, {0.0}, {0.0}, 0.0, 0.5, 0.01);
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.horizon = 2;
  gs.formula = "p | !p";
  gs.atoms = {{"p", {{0.0, 0.5}}}};
  const AbstractGame g = fixtures::make_game_for(m, gs);
  const Policy pol = zero_policy(g);

  NetworkModel net;
  net.subsystems = {m, m};
  net.wiring = {{}, {}};
  const std::vector<SubsystemController> ctrl = {{&g, &pol}, {&g, &pol}};

  EvalOptions opt;
  opt.samples = 400;
  opt.seed = 3;
  opt.x0 = {0.25, 0.75};
  const NetworkEvalResult res = evaluate_network(net, ctrl, opt);
  CHECK(res.samples == 400);
  CHECK(res.joint_accepted == 400);
  REQUIRE(res.accepted.size() == 2);
  CHECK(res.accepted[0] == 400);
  CHECK(res.accepted[1] == 400);
  CHECK(res.ctrl_accepted[0] == 400);
  CHECK(res.ctrl_accepted[1] == 400);
}

TEST_CASE("evaluate_network is invariant in the worker count") {
  const SubsystemModel m = fixtures::scalar_model(0.0, 1.0, {0.0}, {0.0}, 0.0, 0.5, 0.01);
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.horizon = 2;
  gs.formula = "G[0,2] q";
  gs.atoms = {{"q", {{0.0, 0.5}}}};  // boundary sits on the post-step mean
  const AbstractGame g = fixtures::make_game_for(m, gs);
  const Policy pol = zero_policy(g);

  NetworkModel net;
  net.subsystems = {m, m};
  net.wiring = {{}, {}};
  const std::vector<SubsystemController> ctrl = {{&g, &pol}, {&g, &pol}};

  EvalOptions opt;
  opt.samples = 1000;
  opt.seed = 91;
  opt.x0 = {0.25, 0.25};
  opt.workers = 1;
  const NetworkEvalResult one = evaluate_network(net, ctrl, opt);
  opt.workers = 4;
  const NetworkEvalResult four = evaluate_network(net, ctrl, opt);
  CHECK(one.joint_accepted == four.joint_accepted);
  CHECK(one.accepted == four.accepted);
  CHECK(one.ctrl_accepted == four.ctrl_accepted);
  // the outcome is genuinely stochastic, not saturated at either end
  CHECK(one.accepted[0] > 0);
  CHECK(one.accepted[0] < 1000);
}

TEST_CASE("satisfaction is judged on the continuous state, control on the cell") {
  // the state hovers at 0.55: inside the atom box, but its cell representative
  // (0.75) is outside, so the quantized monitor rejects what the real
  // trajectory satisfies
  const SubsystemModel m = fixtures::scalar_model(0.0, 1.0, {0.3}, {0.0}, 0.0, 0.55, 0.001);
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.horizon = 2;
  gs.formula = "G[0,2] a";
  gs.atoms = {{"a", {{0.0, 0.6}}}};
  const AbstractGame g = fixtures::make_game_for(m, gs);
  const Policy pol = zero_policy(g);

  const NetworkModel net = single_net(m);
  const std::vector<SubsystemController> ctrl = {{&g, &pol}};
  EvalOptions opt;
  opt.samples = 300;
  opt.seed = 5;
  opt.x0 = {0.55};
  const NetworkEvalResult res = evaluate_network(net, ctrl, opt);
  CHECK(res.accepted[0] == 300);
  CHECK(res.joint_accepted == 300);
  CHECK(res.ctrl_accepted[0] == 0);
}

TEST_CASE("a wired network feeds pre-step neighbor states") {
  // two subsystems that swap states each step (plus tiny noise): starting at
  // (1, 3), subsystem 0 sees 3 at time 1, satisfying X p for p = [2, 4]
  SubsystemModel m;
  m.state_box = {{0.0, 4.0}};
  m.ext_inputs = {0.0};
  m.a = {{0.0}};
  m.b = {0.0};
  m.c = {0.0};
  m.r = {0.001};
  m.internal_box = {{0.0, 4.0}};
  m.d_gain = {{1.0}};
  m.lipschitz_x = 0.1;
  m.lipschitz_w = 0.1;

  fixtures::GameSpec gs;
  gs.delta = 1.0;
  gs.mu = 1.0;
  gs.horizon = 2;
  gs.formula = "X p";
  gs.atoms = {{"p", {{2.0, 4.0}}}};
  const AbstractGame g0 = fixtures::make_game_for(m, gs);
  gs.formula = "p | !p";
  const AbstractGame g1 = fixtures::make_game_for(m, gs);
  const Policy p0 = zero_policy(g0);
  const Policy p1 = zero_policy(g1);

  NetworkModel net;
  net.subsystems = {m, m};
  net.wiring = {{{1, 0}}, {{0, 0}}};
  const std::vector<SubsystemController> ctrl = {{&g0, &p0}, {&g1, &p1}};

  EvalOptions opt;
  opt.samples = 200;
  opt.seed = 17;
  opt.x0 = {1.0, 3.0};
  const NetworkEvalResult res = evaluate_network(net, ctrl, opt);
  CHECK(res.accepted[0] == 200);
  CHECK(res.accepted[1] == 200);
  CHECK(res.joint_accepted == 200);
  CHECK(res.ctrl_accepted[0] == 200);  // cell representatives agree here
}

TEST_CASE("evaluate_network validates its inputs") {
  const SubsystemModel m = fixtures::scalar_model(0.0, 1.0, {0.0}, {0.0}, 0.0, 0.5, 0.01);
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.horizon = 2;
  gs.formula = "p | !p";
  gs.atoms = {{"p", {{0.0, 0.5}}}};
  const AbstractGame g = fixtures::make_game_for(m, gs);
  const Policy pol = zero_policy(g);
  const NetworkModel net = single_net(m);

  EvalOptions opt;
  opt.samples = 10;
  opt.x0 = {0.25};
  const std::vector<SubsystemController> ok = {{&g, &pol}};
  CHECK_NOTHROW(evaluate_network(net, ok, opt));

  EvalOptions bad = opt;
  bad.samples = 0;
  CHECK_THROWS_AS(evaluate_network(net, ok, bad), std::invalid_argument);
  bad = opt;
  bad.x0 = {1.5};  // outside the state box
  CHECK_THROWS_AS(evaluate_network(net, ok, bad), std::invalid_argument);
  bad = opt;
  bad.x0 = {0.25, 0.25};
  CHECK_THROWS_AS(evaluate_network(net, ok, bad), std::invalid_argument);

  const std::vector<SubsystemController> missing = {{&g, nullptr}};
  CHECK_THROWS_AS(evaluate_network(net, missing, opt), std::invalid_argument);
  const std::vector<SubsystemController> none;
  CHECK_THROWS_AS(evaluate_network(net, none, opt), std::invalid_argument);

  gs.horizon = 1;
  gs.formula = "p";
  const AbstractGame shorter = fixtures::make_game_for(m, gs);
  const Policy ps = zero_policy(shorter);
  NetworkModel pair;
  pair.subsystems = {m, m};
  pair.wiring = {{}, {}};
  EvalOptions popt;
  popt.samples = 10;
  popt.x0 = {0.25, 0.25};
  const std::vector<SubsystemController> mixed = {{&g, &pol}, {&shorter, &ps}};
  CHECK_THROWS_AS(evaluate_network(pair, mixed, popt), std::invalid_argument);
}

TEST_CASE("percentile trajectories follow a deterministic network exactly") {
  // zero noise: every sample runs the same path 0.2 -> 0.5 -> 0.8
  const SubsystemModel m = fixtures::scalar_model(0.0, 1.0, {0.0}, {1.0}, 0.0, 0.3, 0.0);
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.horizon = 2;
  gs.formula = "p | !p";
  gs.atoms = {{"p", {{0.0, 0.5}}}};
  const AbstractGame g = fixtures::make_game_for(m, gs);
  const Policy pol = zero_policy(g);
  const NetworkModel net = single_net(m);
  const std::vector<SubsystemController> ctrl = {{&g, &pol}};

  EvalOptions opt;
  opt.samples = 5;
  opt.seed = 21;
  opt.x0 = {0.2};
  const std::vector<int> ranks = {1, 50, 100};
  const PercentileTable t = percentile_trajectories(net, ctrl, opt, ranks, false);
  CHECK(t.horizon == 2);
  CHECK(t.columns == 1);
  CHECK_FALSE(t.aggregated);
  REQUIRE(t.percentiles == ranks);
  for (std::size_t pi = 0; pi < 3; ++pi) {
    CHECK(t.at(0, 0, pi) == 0.2);
    CHECK(t.at(1, 0, pi) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.at(2, 0, pi) == doctest::Approx(0.8).epsilon(1e-15));
  }
}

TEST_CASE("percentiles are monotone in rank and honor aggregation") {
  const SubsystemModel m = fixtures::scalar_model(0.0, 1.0, {0.0}, {0.0}, 0.0, 0.5, 0.05);
  fixtures::GameSpec gs;
  gs.delta = 0.5;
  gs.horizon = 3;
  gs.formula = "p | !p";
  gs.atoms = {{"p", {{0.0, 0.5}}}};
  const AbstractGame g = fixtures::make_game_for(m, gs);
  const Policy pol = zero_policy(g);

  NetworkModel net;
  net.subsystems = {m, m};
  net.wiring = {{}, {}};
  const std::vector<SubsystemController> ctrl = {{&g, &pol}, {&g, &pol}};

  EvalOptions opt;
  opt.samples = 64;
  opt.seed = 33;
  opt.x0 = {0.2, 0.6};
  const std::vector<int> ranks = {1, 25, 50, 75, 100};

  const PercentileTable per = percentile_trajectories(net, ctrl, opt, ranks, false);
  CHECK(per.columns == 2);
  for (int time = 0; time <= per.horizon; ++time)
    for (int col = 0; col < per.columns; ++col)
      for (std::size_t pi = 1; pi < ranks.size(); ++pi)
        CHECK(per.at(time, col, pi - 1) <= per.at(time, col, pi));
  for (std::size_t pi = 0; pi < ranks.size(); ++pi) {
    CHECK(per.at(0, 0, pi) == 0.2);
    CHECK(per.at(0, 1, pi) == 0.6);
  }

  const PercentileTable agg = percentile_trajectories(net, ctrl, opt, ranks, true);
  CHECK(agg.columns == 1);
  CHECK(agg.aggregated);
  // time 0 pools half 0.2 and half 0.6
  CHECK(agg.at(0, 0, 0) == 0.2);   // rank 1
  CHECK(agg.at(0, 0, 2) == 0.2);   // rank 50, nearest rank falls in the lower half
  CHECK(agg.at(0, 0, 4) == 0.6);   // rank 100

  EvalOptions one = opt;
  one.samples = 1;
  one.x0 = {0.3, 0.4};
  const PercentileTable single = percentile_trajectories(net, ctrl, one, ranks, false);
  for (int time = 0; time <= single.horizon; ++time)
    for (int col = 0; col < 2; ++col)
      for (std::size_t pi = 1; pi < ranks.size(); ++pi)
        CHECK(single.at(time, col, pi) == single.at(time, col, 0));

  CHECK_THROWS_AS(percentile_trajectories(net, ctrl, opt, {}, false), std::invalid_argument);
  CHECK_THROWS_AS(percentile_trajectories(net, ctrl, opt, std::vector<int>{0}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(percentile_trajectories(net, ctrl, opt, std::vector<int>{101}, false),
                  std::invalid_argument);
}

TEST_CASE("percentile tables serialize to the documented csv") {
  {
    PercentileTable t;
    t.horizon = 1;
    t.columns = 1;
    t.aggregated = true;
    t.percentiles = {50};
    t.values = {0.25, 17.5};
    std::ostringstream os;
    write_percentile_csv(t, os);
    CHECK(os.str() == "time,subsystem,percentile,value\n"
                      "0,all,50,0.25\n"
                      "1,all,50,17.5\n");
  }
  {
    PercentileTable t;
    t.horizon = 0;
    t.columns = 2;
    t.aggregated = false;
    t.percentiles = {10, 90};
    t.values = {1.5, 2.5, -0.125, 0.1234567891};
    std::ostringstream os;
    write_percentile_csv(t, os);
    CHECK(os.str() == "time,subsystem,percentile,value\n"
                      "0,0,10,1.5\n"
                      "0,0,90,2.5\n"
                      "0,1,10,-0.125\n"
                      "0,1,90,0.1234567891\n");
  }
}
