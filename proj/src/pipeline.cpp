#include "compsyn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "compsyn/analysis.hpp"
#include "compsyn/artifact.hpp"
#include "compsyn/formula.hpp"
#include "compsyn/oracle.hpp"

namespace compsyn {
namespace {

namespace fs = std::filesystem;

std::string fnum(double v, const char* format = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunConfig load_with_overrides(const std::string& config_path, const CliOverrides& ov) {
  RunConfig cfg = load_config(config_path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.samples) {
    if (*ov.samples < 1) throw std::invalid_argument("--samples must be positive");
    cfg.evaluate.samples = *ov.samples;
  }
  if (ov.episodes) {
    if (*ov.episodes < 0) throw std::invalid_argument("--episodes must be nonnegative");
    if (!cfg.learn.multilevel.empty())
      throw std::invalid_argument("--episodes cannot override a multilevel schedule");
    cfg.learn.episodes = *ov.episodes;
  }
  if (ov.workers && *ov.workers < 1) throw std::invalid_argument("--workers must be positive");
  return cfg;
}

int worker_count(const CliOverrides& ov) {
  if (ov.workers) return *ov.workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string artifact_name(int group) { return "qtable_g" + std::to_string(group) + ".bin"; }

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error(out_dir + ": cannot create output directory");
}

std::vector<std::size_t> state_offsets(const NetworkModel& net) {
  std::vector<std::size_t> off;
  std::size_t total = 0;
  for (const SubsystemModel& m : net.subsystems) {
    off.push_back(total);
    total += m.state_dims();
  }
  off.push_back(total);
  return off;
}

void write_dfa_txt(const std::string& path, const CoSafetyDFA& dfa) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot write automaton dump");
  os << "states " << dfa.n_states << "\n";
  os << "letters " << dfa.n_letters << "\n";
  os << "horizon " << dfa.horizon << "\n";
  os << "initial " << dfa.initial << "\n";
  os << "accept " << dfa.accept_state << "\n";
  os << "reject " << dfa.reject_state << "\n";
  for (int q = 0; q < dfa.n_states; ++q) os << "depth " << q << " " << dfa.depth[q] << "\n";
  for (int q = 0; q < dfa.n_states; ++q)
    for (std::uint32_t a = 0; a < dfa.n_letters; ++a)
      os << "edge " << q << " " << a << " " << dfa.step(q, a) << "\n";
  if (!os) throw std::runtime_error(path + ": short write");
}

// What the certified objective reports for a start cell: the accepting
// probability recovered from the potential-shaped return.
double satisfaction_from(const AbstractGame& game, const ExactSolution& sol, CellId cell) {
  return game.reward_machine().pot[game.dfa().initial] +
         sol.value0[static_cast<std::size_t>(cell)];
}

struct LoadedGroup {
  AbstractGame game;  // certification semantics
  QTable table;
  Policy policy;
};

std::vector<LoadedGroup> load_groups(const RunConfig& cfg, const NetworkPlan& plan,
                                     const std::string& out_dir) {
  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  if (!fs::exists(manifest_path))
    throw std::invalid_argument(manifest_path + ": no manifest; run learn first");
  const Manifest man = read_manifest(manifest_path);
  const std::uint64_t sem_hash = fnv1a64(canonical_semantics_json(cfg));
  const std::uint64_t spec_hash = fnv1a64(canonical_spec_json(cfg.spec, cfg.grids));
  if (man.semantics_hash != sem_hash)
    throw ArtifactMismatch(manifest_path + ": stored run fingerprint " +
                           hex64(man.semantics_hash) + " does not match configuration " +
                           hex64(sem_hash));
  if (man.groups.size() != plan.representative.size())
    throw ArtifactMismatch(manifest_path + ": group count does not match this configuration");

  std::vector<LoadedGroup> groups;
  groups.reserve(plan.representative.size());
  for (std::size_t g = 0; g < plan.representative.size(); ++g) {
    if (man.groups[g].model_hash != plan.model_hash[g])
      throw ArtifactMismatch(manifest_path + ": group " + std::to_string(g) +
                             " was trained on a different subsystem model");
    AbstractGame game =
        make_game(cfg, plan.net.subsystems[static_cast<std::size_t>(plan.representative[g])],
                  cfg.grids.delta, true);
    ArtifactInfo info;
    QTable table =
        load_qtable((fs::path(out_dir) / man.groups[g].artifact).string(), game, info);
    if (info.semantics_hash != sem_hash || info.model_hash != plan.model_hash[g] ||
        info.spec_hash != spec_hash)
      throw ArtifactMismatch(man.groups[g].artifact +
                             ": artifact fingerprints do not match this configuration");
    Policy policy = extract_policy(table, game);
    groups.push_back({std::move(game), std::move(table), std::move(policy)});
  }
  return groups;
}

std::vector<SubsystemController> controllers_of(const NetworkPlan& plan,
                                                const std::vector<LoadedGroup>& groups) {
  std::vector<SubsystemController> ctrl;
  ctrl.reserve(plan.net.size());
  for (std::size_t i = 0; i < plan.net.size(); ++i) {
    const LoadedGroup& g = groups[static_cast<std::size_t>(plan.group_of[i])];
    ctrl.push_back({&g.game, &g.policy});
  }
  return ctrl;
}

CellId start_cell_of(const AbstractGame& game, std::span<const double> x0_block) {
  const CellId cell = game.quantize_point(x0_block);
  if (cell == game.sink())
    throw std::invalid_argument("evaluate.x0: start state lies outside the state box");
  return cell;
}

double monolithic_log10_pairs(const RunConfig& cfg, const std::vector<LoadedGroup>& groups,
                              const NetworkPlan& plan) {
  double cells = 0.0, inputs = 0.0, lw = 0.0;
  for (std::size_t i = 0; i < plan.net.size(); ++i) {
    const AbstractGame& g = groups[static_cast<std::size_t>(plan.group_of[i])].game;
    cells += std::log10(static_cast<double>(g.n_cells()));
    inputs += std::log10(static_cast<double>(g.n_u()));
    lw += std::log10(static_cast<double>(std::max(g.n_w(), 1)));
  }
  const double joint_w = lw + std::log1p(std::pow(10.0, -lw)) / std::log(10.0);
  return std::log10(static_cast<double>(std::max(cfg.spec.horizon, 1))) + cells + inputs +
         joint_w;
}

void report_header(std::ostream& out, const char* command, const std::string& config_path,
                   const RunConfig& cfg, const NetworkPlan& plan) {
  out << "command: " << command << "\n";
  out << "config: " << config_path << "\n";
  out << "seed: " << cfg.seed << "\n";
  out << "network: " << cfg.network.builder << " n=" << plan.net.size()
      << " model=" << (cfg.network.model_available ? "available" : "unavailable") << "\n";
  out << "groups: " << plan.representative.size() << "\n";
}

}  // namespace

NetworkPlan plan_network(const RunConfig& cfg) {
  NetworkPlan plan;
  plan.net = build_network(cfg);
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < plan.net.size(); ++i) {
    const std::string key = canonical_model_json(plan.net.subsystems[i]);
    int group = -1;
    if (cfg.learn.share_policy) {
      const auto it = seen.find(key);
      if (it != seen.end()) group = it->second;
    }
    if (group < 0) {
      group = static_cast<int>(plan.representative.size());
      plan.representative.push_back(static_cast<int>(i));
      plan.model_hash.push_back(fnv1a64(key));
      seen.emplace(key, group);
    }
    plan.group_of.push_back(group);
  }
  return plan;
}

AbstractGame make_game(const RunConfig& cfg, const SubsystemModel& model, double delta,
                       bool certification, std::optional<double> mu) {
  std::vector<double> lo, hi;
  for (auto [l, h] : model.state_box) {
    lo.push_back(l);
    hi.push_back(h);
  }
  Grid grid(std::move(lo), std::move(hi), delta);
  std::vector<std::string> names;
  for (const AtomBox& ab : cfg.spec.atoms) names.push_back(ab.name);
  const ParsedSpec ps = parse_scltl(cfg.spec.formula, names);
  CoSafetyDFA dfa = to_dfa(*ps.formula, cfg.spec.horizon, static_cast<int>(names.size()));
  RewardMachine rm = make_reward_machine(
      dfa, certification ? RewardMode::Base : cfg.spec.reward_mode, cfg.spec.kappa);
  return AbstractGame(model, std::move(grid), mu.value_or(cfg.grids.mu),
                      cfg.grids.internal_mode, cfg.spec.atoms, std::move(dfa), std::move(rm),
                      certification ? 1.0 : cfg.learn.gamma);
}

void cmd_learn(const std::string& config_path, const CliOverrides& ov,
               const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_with_overrides(config_path, ov);
  const NetworkPlan plan = plan_network(cfg);
  ensure_out_dir(out_dir);

  const std::uint64_t sem_hash = fnv1a64(canonical_semantics_json(cfg));
  const std::uint64_t spec_hash = fnv1a64(canonical_spec_json(cfg.spec, cfg.grids));

  Manifest man;
  man.created_unix = static_cast<std::int64_t>(std::time(nullptr));
  man.config_path = config_path;
  man.seed = cfg.seed;
  man.semantics_hash = sem_hash;

  report_header(out, "learn", config_path, cfg, plan);

  for (std::size_t g = 0; g < plan.representative.size(); ++g) {
    const SubsystemModel& model =
        plan.net.subsystems[static_cast<std::size_t>(plan.representative[g])];
    const AbstractGame game = make_game(cfg, model, cfg.grids.delta, false);
    if (g == 0) {
      out << "horizon: " << game.horizon() << "\n";
      out << "grid: delta=" << fnum(game.state_grid().delta(), "%.6g")
          << " cells=" << game.n_cells() << "\n";
      out << "internal: mu=" << fnum(cfg.grids.mu, "%.6g") << " actions=" << game.n_w()
          << "\n";
      out << "automaton: states=" << game.dfa().n_states << "\n";
      man.state_action_pairs = game.state_action_pairs();
    }

    LearnOptions base;
    base.episodes = cfg.learn.episodes;
    base.explore = cfg.learn.explore;
    base.lr = cfg.learn.lr;
    base.seed = cfg.seed;
    base.stream = static_cast<std::uint64_t>(g) << 32;
    base.init_uniform = cfg.learn.init_uniform;
    if (!cfg.learn.init_uniform) {
      if (cfg.learn.init_x.size() != model.state_dims())
        throw std::invalid_argument("learn.init.x: dimension mismatch with the subsystem");
      base.init_cell = game.quantize_point(cfg.learn.init_x);
      if (base.init_cell == game.sink())
        throw std::invalid_argument("learn.init.x: start state lies outside the state box");
    }

    QTable table;
    if (!cfg.learn.multilevel.empty()) {
      if (!cfg.learn.init_uniform)
        throw std::invalid_argument("learn.init: point start requires a single-grid schedule");
      std::vector<AbstractGame> stages;
      std::vector<std::int64_t> budget;
      stages.reserve(cfg.learn.multilevel.size());
      for (const StageConfig& st : cfg.learn.multilevel) {
        err << "group " << g << ": stage delta=" << st.delta
            << " mu=" << st.mu.value_or(cfg.grids.mu) << " episodes=" << st.episodes << "\n";
        stages.push_back(make_game(cfg, model, st.delta, false, st.mu));
        budget.push_back(st.episodes);
      }
      table = multilevel_train(stages, budget, base);
    } else {
      err << "group " << g << ": training episodes=" << cfg.learn.episodes << "\n";
      TrainResult tr = train(game, base);
      table = std::move(tr.table);
    }

    ArtifactInfo info;
    info.semantics_hash = sem_hash;
    info.model_hash = plan.model_hash[g];
    info.spec_hash = spec_hash;
    info.horizon = cfg.spec.horizon;
    for (std::size_t d = 0; d < game.state_grid().dims(); ++d) {
      info.grid_lo.push_back(game.state_grid().lo(d));
      info.grid_hi.push_back(game.state_grid().hi(d));
      info.grid_n.push_back(game.state_grid().cells_in_dim(d));
    }
    const std::string name = artifact_name(static_cast<int>(g));
    save_qtable((fs::path(out_dir) / name).string(), info, table);

    ManifestGroup mg;
    mg.artifact = name;
    for (std::size_t i = 0; i < plan.net.size(); ++i)
      if (plan.group_of[i] == static_cast<int>(g)) mg.subsystems.push_back(static_cast<int>(i));
    mg.model_hash = plan.model_hash[g];
    mg.spec_hash = spec_hash;
    mg.episodes = cfg.learn.episodes;
    mg.visited_fraction = table.visited_fraction();
    man.groups.push_back(mg);

    out << "group " << g << ": subsystems=" << mg.subsystems.size()
        << " pairs=" << game.state_action_pairs() << " episodes=" << cfg.learn.episodes
        << " visited=" << fnum(mg.visited_fraction, "%.4f") << " artifact=" << name << "\n";
    if (g == 0) out << "state-action pairs per subsystem: " << game.state_action_pairs() << "\n";

    if (g == 0)
      write_dfa_txt((fs::path(out_dir) / "dfa.txt").string(), game.dfa());
  }

  write_manifest((fs::path(out_dir) / "manifest.json").string(), man);
  out << "semantics hash: " << hex64(sem_hash) << "\n";
  out << "wrote " << (fs::path(out_dir) / "manifest.json").string() << "\n";
}

void cmd_bound(const std::string& config_path, const CliOverrides& ov,
               const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_with_overrides(config_path, ov);
  const NetworkPlan plan = plan_network(cfg);
  const std::vector<LoadedGroup> groups = load_groups(cfg, plan, out_dir);
  const std::size_t n_sub = plan.net.size();
  const std::vector<std::size_t> off = state_offsets(plan.net);
  const std::vector<double> x0 = network_x0(cfg, plan.net);

  report_header(out, "bound", config_path, cfg, plan);
  out << "state-action pairs per subsystem: " << groups[0].game.state_action_pairs() << "\n";
  out << "monolithic pairs log10: " << fnum(monolithic_log10_pairs(cfg, groups, plan), "%.1f")
      << "\n";

  // Worst-case per-subsystem values, then the sampled joint estimate.
  std::vector<ExactSolution> br(groups.size());
  if (cfg.network.model_available) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      err << "group " << g << ": best response\n";
      br[g] = solve_best_response(groups[g].game, groups[g].policy);
    }
  }

  std::vector<double> p(n_sub), eps(n_sub);
  std::map<std::pair<int, CellId>, AdvEstimate> sampled;
  for (std::size_t i = 0; i < n_sub; ++i) {
    const int g = plan.group_of[i];
    const AbstractGame& game = groups[static_cast<std::size_t>(g)].game;
    const SubsystemModel& model = plan.net.subsystems[i];
    const std::span<const double> block(x0.data() + off[i], model.state_dims());
    const CellId cell = start_cell_of(game, block);
    std::string method;
    if (cfg.network.model_available) {
      p[i] = satisfaction_from(game, br[static_cast<std::size_t>(g)], cell);
      method = "dp";
    } else {
      const auto key = std::make_pair(g, cell);
      auto it = sampled.find(key);
      if (it == sampled.end()) {
        err << "subsystem " << i << ": adversarial sampling\n";
        it = sampled
                 .emplace(key, evaluate_adversarial(game,
                                                    groups[static_cast<std::size_t>(g)].policy,
                                                    cell, cfg.evaluate.samples, cfg.seed))
                 .first;
      }
      p[i] = it->second.ci.lo;
      method = "sampled-lower";
    }
    eps[i] = abstraction_error(cfg.spec.horizon, box_volume(model.state_box),
                               game.state_grid().delta(), model.lipschitz_x, cfg.grids.mu,
                               model.lipschitz_w);
    out << "subsystem " << i << ": p=" << fnum(p[i]) << " eps=" << fnum(eps[i])
        << " method=" << method << "\n";
  }

  const BoundResult bres = lower_bound(p, eps);
  out << "epsilon: " << fnum(*std::max_element(eps.begin(), eps.end())) << "\n";
  out << "product: " << fnum(bres.product) << "\n";
  out << "penalty: " << fnum(bres.penalty) << "\n";
  out << "p_low: " << fnum(bres.lower) << "\n";
  out << "vacuous: " << (bres.vacuous ? "yes" : "no") << "\n";

  EvalOptions eopt;
  eopt.samples = cfg.evaluate.samples;
  eopt.seed = cfg.seed;
  eopt.x0 = x0;
  eopt.workers = worker_count(ov);
  err << "sampling joint satisfaction\n";
  const std::vector<SubsystemController> ctrl = controllers_of(plan, groups);
  const NetworkEvalResult nr = evaluate_network(plan.net, ctrl, eopt);
  const Interval ci = wilson_interval(nr.joint_accepted, nr.samples);
  out << "p_sampled: " << fnum(static_cast<double>(nr.joint_accepted) / nr.samples)
      << " ci=[" << fnum(ci.lo) << ", " << fnum(ci.hi) << "] n=" << nr.samples << "\n";
}

void cmd_evaluate(const std::string& config_path, const CliOverrides& ov,
                  const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_with_overrides(config_path, ov);
  const NetworkPlan plan = plan_network(cfg);
  const std::vector<LoadedGroup> groups = load_groups(cfg, plan, out_dir);
  const std::vector<SubsystemController> ctrl = controllers_of(plan, groups);

  EvalOptions eopt;
  eopt.samples = cfg.evaluate.samples;
  eopt.seed = cfg.seed;
  eopt.x0 = network_x0(cfg, plan.net);
  eopt.workers = worker_count(ov);

  report_header(out, "evaluate", config_path, cfg, plan);
  err << "sampling " << eopt.samples << " trajectories\n";
  const NetworkEvalResult nr = evaluate_network(plan.net, ctrl, eopt);
  const Interval ci = wilson_interval(nr.joint_accepted, nr.samples);
  out << "p_sampled: " << fnum(static_cast<double>(nr.joint_accepted) / nr.samples)
      << " ci=[" << fnum(ci.lo) << ", " << fnum(ci.hi) << "] n=" << nr.samples << "\n";
  for (std::size_t i = 0; i < plan.net.size(); ++i)
    out << "subsystem " << i
        << ": accepted=" << fnum(static_cast<double>(nr.accepted[i]) / nr.samples)
        << " ctrl_track=" << fnum(static_cast<double>(nr.ctrl_accepted[i]) / nr.samples)
        << "\n";

  err << "collecting percentiles\n";
  const PercentileTable pt =
      percentile_trajectories(plan.net, ctrl, eopt, cfg.evaluate.percentiles,
                              cfg.evaluate.aggregate_percentiles);
  ensure_out_dir(out_dir);
  const std::string csv_path = (fs::path(out_dir) / "percentiles.csv").string();
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error(csv_path + ": cannot write percentile table");
  write_percentile_csv(pt, csv);
  if (!csv) throw std::runtime_error(csv_path + ": short write");
  out << "wrote " << csv_path << "\n";
}

void cmd_oracle(const std::string& config_path, const CliOverrides& ov,
                const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_with_overrides(config_path, ov);
  if (!cfg.network.model_available)
    throw ModelUnavailable(
        "oracle: worst-case values need the model; network.model_available is false");
  const NetworkPlan plan = plan_network(cfg);
  const std::vector<std::size_t> off = state_offsets(plan.net);
  const std::vector<double> x0 = network_x0(cfg, plan.net);

  report_header(out, "oracle", config_path, cfg, plan);

  std::vector<AbstractGame> games;
  std::vector<ExactSolution> sols;
  for (std::size_t g = 0; g < plan.representative.size(); ++g) {
    games.push_back(
        make_game(cfg, plan.net.subsystems[static_cast<std::size_t>(plan.representative[g])],
                  cfg.grids.delta, true));
    err << "group " << g << ": backward induction\n";
    sols.push_back(solve_game(games[g]));
  }

  // Learned tables are optional garnish here: report their best-response
  // values when artifacts are present.
  std::vector<ExactSolution> br;
  bool have_tables = false;
  if (fs::exists(fs::path(out_dir) / "manifest.json")) {
    const std::vector<LoadedGroup> groups = load_groups(cfg, plan, out_dir);
    br.resize(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      err << "group " << g << ": best response\n";
      br[g] = solve_best_response(groups[g].game, groups[g].policy);
    }
    have_tables = true;
  }

  for (std::size_t i = 0; i < plan.net.size(); ++i) {
    const int g = plan.group_of[i];
    const AbstractGame& game = games[static_cast<std::size_t>(g)];
    const std::span<const double> block(x0.data() + off[i],
                                        plan.net.subsystems[i].state_dims());
    const CellId cell = start_cell_of(game, block);
    out << "subsystem " << i
        << ": v_minimax=" << fnum(satisfaction_from(game, sols[static_cast<std::size_t>(g)], cell));
    if (have_tables)
      out << " p_plus=" << fnum(satisfaction_from(game, br[static_cast<std::size_t>(g)], cell));
    out << "\n";
  }

  ensure_out_dir(out_dir);
  std::vector<double> rep(games[0].state_grid().dims());
  for (std::size_t g = 0; g < games.size(); ++g) {
    const AbstractGame& game = games[g];
    const std::string path =
        (fs::path(out_dir) / ("oracle_g" + std::to_string(g) + ".csv")).string();
    std::ofstream csv(path, std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error(path + ": cannot write value table");
    csv << "cell";
    rep.resize(game.state_grid().dims());
    for (std::size_t d = 0; d < rep.size(); ++d) csv << ",x" << d;
    csv << ",value\n";
    char num[64];
    for (CellId c = 0; c < game.n_cells(); ++c) {
      game.state_grid().representative(c, rep);
      csv << c;
      for (const double v : rep) {
        std::snprintf(num, sizeof num, "%.10g", v);
        csv << ',' << num;
      }
      std::snprintf(num, sizeof num, "%.10g",
                    satisfaction_from(game, sols[g], c));
      csv << ',' << num << '\n';
    }
    if (!csv) throw std::runtime_error(path + ": short write");
    out << "wrote " << path << "\n";
  }
}

void cmd_export_traj(const std::string& config_path, const CliOverrides& ov,
                     const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_with_overrides(config_path, ov);
  const NetworkPlan plan = plan_network(cfg);
  const std::vector<LoadedGroup> groups = load_groups(cfg, plan, out_dir);
  const std::vector<std::size_t> off = state_offsets(plan.net);
  const std::vector<double> x0 = network_x0(cfg, plan.net);
  const std::size_t n_sub = plan.net.size();
  const int horizon = groups[0].game.horizon();

  // Default to a small dump; --samples raises it.  Trajectory t here equals
  // trajectory t of evaluate, stream for stream.
  const std::int64_t n_traj = ov.samples ? *ov.samples : std::min<std::int64_t>(
                                                             cfg.evaluate.samples, 100);

  report_header(out, "export-traj", config_path, cfg, plan);
  ensure_out_dir(out_dir);
  const std::string path = (fs::path(out_dir) / "trajectories.csv").string();
  std::ofstream csv(path, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error(path + ": cannot write trajectory dump");
  csv << "trajectory,time,subsystem,component,value\n";

  err << "simulating " << n_traj << " trajectories\n";
  std::vector<double> x(off[n_sub]), x2(off[n_sub]), z(off[n_sub]);
  std::vector<std::size_t> u(n_sub);
  std::vector<int> qc(n_sub), ql(n_sub);
  char num[64];
  const auto emit = [&](std::int64_t t, int time) {
    for (std::size_t i = 0; i < n_sub; ++i)
      for (std::size_t d = 0; d < plan.net.subsystems[i].state_dims(); ++d) {
        std::snprintf(num, sizeof num, "%.10g", x[off[i] + d]);
        csv << t << ',' << time << ',' << i << ',' << d << ',' << num << '\n';
      }
  };

  for (std::int64_t t = 0; t < n_traj; ++t) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(t));
    std::copy(x0.begin(), x0.end(), x.begin());
    for (std::size_t i = 0; i < n_sub; ++i) {
      qc[i] = groups[static_cast<std::size_t>(plan.group_of[i])].game.dfa().initial;
      ql[i] = qc[i];
    }
    emit(t, 0);
    for (int k = 0; k < horizon; ++k) {
      for (std::size_t i = 0; i < n_sub; ++i) {
        const LoadedGroup& lg = groups[static_cast<std::size_t>(plan.group_of[i])];
        const std::span<const double> xi(x.data() + off[i],
                                         plan.net.subsystems[i].state_dims());
        const CellId cell = lg.game.quantize_point(xi);
        const int q_pol = lg.game.dfa().is_terminal(qc[i]) ? ql[i] : qc[i];
        u[i] = lg.policy.has_row(q_pol)
                   ? static_cast<std::size_t>(lg.policy.u_at(q_pol, cell))
                   : 0;
        if (!lg.game.dfa().is_terminal(qc[i])) {
          ql[i] = qc[i];
          qc[i] = lg.game.dfa().step(qc[i], lg.game.letter_of_cell(cell));
        }
      }
      for (std::size_t d = 0; d < off[n_sub]; ++d) z[d] = rng.gauss();
      step_network(plan.net, x, u, z, x2);
      std::swap(x, x2);
      emit(t, k + 1);
    }
  }
  if (!csv) throw std::runtime_error(path + ": short write");
  out << "trajectories: " << n_traj << "\n";
  out << "wrote " << path << "\n";
}

}  // namespace compsyn
