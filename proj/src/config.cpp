#include "compsyn/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include "compsyn/formula.hpp"
#include "json.hpp"

namespace compsyn {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& what) {
  throw std::invalid_argument(origin + ": " + path + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path, const std::string& origin) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(origin, path, "unknown key '" + it.key() + "'");
  }
}

const json* get(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& need(const json& obj, const char* key, const std::string& path,
                 const std::string& origin) {
  const json* v = get(obj, key);
  if (!v) fail(origin, path, std::string("missing required key '") + key + "'");
  return *v;
}

const json& need_object(const json& v, const std::string& path, const std::string& origin) {
  if (!v.is_object()) fail(origin, path, "expected an object");
  return v;
}

double as_num(const json& v, const std::string& path, const std::string& origin) {
  if (!v.is_number()) fail(origin, path, "expected a number");
  return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& path, const std::string& origin) {
  if (!v.is_number_integer()) fail(origin, path, "expected an integer");
  return v.get<std::int64_t>();
}

bool as_bool(const json& v, const std::string& path, const std::string& origin) {
  if (!v.is_boolean()) fail(origin, path, "expected a boolean");
  return v.get<bool>();
}

std::string as_str(const json& v, const std::string& path, const std::string& origin) {
  if (!v.is_string()) fail(origin, path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_num_vec(const json& v, const std::string& path,
                               const std::string& origin) {
  if (!v.is_array()) fail(origin, path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_num(v[i], path + "[" + std::to_string(i) + "]", origin));
  return out;
}

std::vector<std::pair<double, double>> as_box(const json& v, const std::string& path,
                                              const std::string& origin, bool allow_point) {
  if (!v.is_array()) fail(origin, path, "expected an array of [lo, hi] pairs");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    const json& pair = v[i];
    if (!pair.is_array() || pair.size() != 2) fail(origin, at, "expected [lo, hi]");
    const double lo = as_num(pair[0], at, origin);
    const double hi = as_num(pair[1], at, origin);
    if (!(allow_point ? lo <= hi : lo < hi))
      fail(origin, at, allow_point ? "needs lo <= hi" : "needs lo < hi");
    out.emplace_back(lo, hi);
  }
  return out;
}

SubsystemModel parse_subsystem(const json& v, const std::string& path,
                               const std::string& origin) {
  need_object(v, path, origin);
  check_keys(v,
             {"state_box", "internal_box", "inputs", "a", "b", "D", "c", "r", "lipschitz_x",
              "lipschitz_w"},
             path, origin);
  SubsystemModel m;
  m.state_box = as_box(need(v, "state_box", path, origin), path + ".state_box", origin, false);
  if (const json* ib = get(v, "internal_box"))
    m.internal_box = as_box(*ib, path + ".internal_box", origin, false);
  m.ext_inputs = as_num_vec(need(v, "inputs", path, origin), path + ".inputs", origin);

  const json& a = need(v, "a", path, origin);
  if (!a.is_array()) fail(origin, path + ".a", "expected one row per input");
  for (std::size_t u = 0; u < a.size(); ++u)
    m.a.push_back(as_num_vec(a[u], path + ".a[" + std::to_string(u) + "]", origin));

  m.b = as_num_vec(need(v, "b", path, origin), path + ".b", origin);
  if (const json* d = get(v, "D")) {
    if (!d->is_array()) fail(origin, path + ".D", "expected one row per state dimension");
    for (std::size_t i = 0; i < d->size(); ++i)
      m.d_gain.push_back(as_num_vec((*d)[i], path + ".D[" + std::to_string(i) + "]", origin));
  } else {
    m.d_gain.assign(m.state_box.size(), std::vector<double>(m.internal_box.size(), 0.0));
  }
  m.c = as_num_vec(need(v, "c", path, origin), path + ".c", origin);
  m.r = as_num_vec(need(v, "r", path, origin), path + ".r", origin);
  m.lipschitz_x = as_num(need(v, "lipschitz_x", path, origin), path + ".lipschitz_x", origin);
  m.lipschitz_w = as_num(need(v, "lipschitz_w", path, origin), path + ".lipschitz_w", origin);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    fail(origin, path, e.what());
  }
  return m;
}

NetworkConfig parse_network(const json& v, const std::string& origin) {
  const std::string path = "network";
  need_object(v, path, origin);
  check_keys(v, {"builder", "n", "model_available", "custom", "lipschitz_x", "lipschitz_w"},
             path, origin);
  NetworkConfig net;
  net.builder = as_str(need(v, "builder", path, origin), path + ".builder", origin);
  if (net.builder != "room" && net.builder != "traffic" && net.builder != "custom")
    fail(origin, path + ".builder", "expected 'room', 'traffic' or 'custom'");
  if (const json* n = get(v, "n"))
    net.n = static_cast<int>(as_int(*n, path + ".n", origin));
  if (const json* ma = get(v, "model_available"))
    net.model_available = as_bool(*ma, path + ".model_available", origin);
  if (const json* lx = get(v, "lipschitz_x"))
    net.lipschitz_x = as_num(*lx, path + ".lipschitz_x", origin);
  if (const json* lw = get(v, "lipschitz_w"))
    net.lipschitz_w = as_num(*lw, path + ".lipschitz_w", origin);

  if (net.builder == "custom") {
    const json& c = need_object(need(v, "custom", path, origin), path + ".custom", origin);
    check_keys(c, {"subsystems", "wiring"}, path + ".custom", origin);
    const json& subs = need(c, "subsystems", path + ".custom", origin);
    if (!subs.is_array() || subs.empty())
      fail(origin, path + ".custom.subsystems", "expected a nonempty array");
    for (std::size_t i = 0; i < subs.size(); ++i)
      net.custom.subsystems.push_back(parse_subsystem(
          subs[i], path + ".custom.subsystems[" + std::to_string(i) + "]", origin));
    const json& wiring = need(c, "wiring", path + ".custom", origin);
    if (!wiring.is_array() || wiring.size() != subs.size())
      fail(origin, path + ".custom.wiring", "expected one entry list per subsystem");
    for (std::size_t i = 0; i < wiring.size(); ++i) {
      const std::string at = path + ".custom.wiring[" + std::to_string(i) + "]";
      if (!wiring[i].is_array()) fail(origin, at, "expected an array of [source, component]");
      std::vector<WiringEntry> row;
      for (std::size_t j = 0; j < wiring[i].size(); ++j) {
        const json& e = wiring[i][j];
        const std::string eat = at + "[" + std::to_string(j) + "]";
        if (!e.is_array() || e.size() != 2) fail(origin, eat, "expected [source, component]");
        row.push_back({static_cast<int>(as_int(e[0], eat, origin)),
                       static_cast<int>(as_int(e[1], eat, origin))});
      }
      net.custom.wiring.push_back(std::move(row));
    }
    try {
      net.custom.validate();
    } catch (const std::invalid_argument& e) {
      fail(origin, path + ".custom", e.what());
    }
  } else if (net.n < 1) {
    fail(origin, path + ".n", "preset networks need a positive subsystem count");
  }
  return net;
}

GridConfig parse_grids(const json& v, const std::string& origin) {
  const std::string path = "grids";
  need_object(v, path, origin);
  check_keys(v, {"delta", "mu", "internal_grid"}, path, origin);
  GridConfig g;
  g.delta = as_num(need(v, "delta", path, origin), path + ".delta", origin);
  if (!(g.delta > 0.0)) fail(origin, path + ".delta", "must be positive");
  if (const json* mu = get(v, "mu")) {
    g.mu = as_num(*mu, path + ".mu", origin);
    if (!(g.mu >= 0.0)) fail(origin, path + ".mu", "must be nonnegative");
  }
  if (const json* ig = get(v, "internal_grid")) {
    const std::string mode = as_str(*ig, path + ".internal_grid", origin);
    if (mode == "cartesian")
      g.internal_mode = InternalGridMode::Cartesian;
    else if (mode == "per_axis_sum")
      g.internal_mode = InternalGridMode::PerAxisSum;
    else
      fail(origin, path + ".internal_grid", "expected 'cartesian' or 'per_axis_sum'");
  }
  return g;
}

SpecConfig parse_spec(const json& v, const std::string& origin) {
  const std::string path = "spec";
  need_object(v, path, origin);
  check_keys(v, {"formula", "horizon", "atoms", "reward_mode", "kappa"}, path, origin);
  SpecConfig s;
  s.formula = as_str(need(v, "formula", path, origin), path + ".formula", origin);
  s.horizon = static_cast<int>(as_int(need(v, "horizon", path, origin), path + ".horizon", origin));
  if (s.horizon < 1) fail(origin, path + ".horizon", "must be at least 1");
  const json& atoms = need_object(need(v, "atoms", path, origin), path + ".atoms", origin);
  for (auto it = atoms.begin(); it != atoms.end(); ++it) {
    AtomBox ab;
    ab.name = it.key();
    ab.box = as_box(it.value(), path + ".atoms." + it.key(), origin, true);
    s.atoms.push_back(std::move(ab));
  }
  if (const json* rm = get(v, "reward_mode")) {
    const std::string mode = as_str(*rm, path + ".reward_mode", origin);
    if (mode == "base")
      s.reward_mode = RewardMode::Base;
    else if (mode == "shaped")
      s.reward_mode = RewardMode::Shaped;
    else
      fail(origin, path + ".reward_mode", "expected 'base' or 'shaped'");
  }
  if (const json* k = get(v, "kappa")) {
    s.kappa = as_num(*k, path + ".kappa", origin);
    if (!(s.kappa >= 0.0)) fail(origin, path + ".kappa", "must be nonnegative");
  }

  // Parse once here so a bad formula is caught at load time.
  std::vector<std::string> names;
  for (const AtomBox& ab : s.atoms) names.push_back(ab.name);
  try {
    parse_scltl(s.formula, names);
  } catch (const std::invalid_argument& e) {
    fail(origin, path + ".formula", e.what());
  }
  return s;
}

LearnConfig parse_learn(const json& v, const std::string& origin, const GridConfig& grids) {
  const std::string path = "learn";
  need_object(v, path, origin);
  check_keys(v,
             {"episodes", "lr", "explore", "gamma", "init", "share_policy", "multilevel"},
             path, origin);
  LearnConfig l;
  l.episodes = as_int(need(v, "episodes", path, origin), path + ".episodes", origin);
  if (l.episodes < 0) fail(origin, path + ".episodes", "must be nonnegative");

  if (const json* lr = get(v, "lr")) {
    need_object(*lr, path + ".lr", origin);
    const std::string kind = as_str(need(*lr, "kind", path + ".lr", origin),
                                    path + ".lr.kind", origin);
    if (kind == "linear") {
      check_keys(*lr, {"kind", "start", "end"}, path + ".lr", origin);
      l.lr.kind = LearnRate::Kind::Linear;
      l.lr.a0 = as_num(need(*lr, "start", path + ".lr", origin), path + ".lr.start", origin);
      l.lr.a1 = as_num(need(*lr, "end", path + ".lr", origin), path + ".lr.end", origin);
      if (!(l.lr.a0 > 0.0 && l.lr.a0 <= 1.0 && l.lr.a1 > 0.0 && l.lr.a1 <= 1.0))
        fail(origin, path + ".lr", "rates must lie in (0, 1]");
    } else if (kind == "robbins_monro") {
      check_keys(*lr, {"kind", "c"}, path + ".lr", origin);
      l.lr.kind = LearnRate::Kind::RobbinsMonro;
      l.lr.c = as_num(need(*lr, "c", path + ".lr", origin), path + ".lr.c", origin);
      if (!(l.lr.c > 0.0 && l.lr.c < 1.0)) fail(origin, path + ".lr.c", "must lie in (0, 1)");
    } else {
      fail(origin, path + ".lr.kind", "expected 'linear' or 'robbins_monro'");
    }
  }

  if (const json* e = get(v, "explore")) {
    l.explore = as_num(*e, path + ".explore", origin);
    if (!(l.explore >= 0.0 && l.explore <= 1.0))
      fail(origin, path + ".explore", "must lie in [0, 1]");
  }
  if (const json* g = get(v, "gamma")) {
    l.gamma = as_num(*g, path + ".gamma", origin);
    if (!(l.gamma > 0.0 && l.gamma <= 1.0)) fail(origin, path + ".gamma", "must lie in (0, 1]");
  }
  if (const json* init = get(v, "init")) {
    need_object(*init, path + ".init", origin);
    check_keys(*init, {"mode", "x"}, path + ".init", origin);
    const std::string mode = as_str(need(*init, "mode", path + ".init", origin),
                                    path + ".init.mode", origin);
    if (mode == "uniform") {
      l.init_uniform = true;
    } else if (mode == "point") {
      l.init_uniform = false;
      l.init_x = as_num_vec(need(*init, "x", path + ".init", origin), path + ".init.x", origin);
    } else {
      fail(origin, path + ".init.mode", "expected 'uniform' or 'point'");
    }
  }
  if (const json* sp = get(v, "share_policy"))
    l.share_policy = as_bool(*sp, path + ".share_policy", origin);

  if (const json* ml = get(v, "multilevel")) {
    if (!ml->is_array() || ml->empty())
      fail(origin, path + ".multilevel", "expected a nonempty array of stages");
    std::int64_t total = 0;
    for (std::size_t i = 0; i < ml->size(); ++i) {
      const std::string at = path + ".multilevel[" + std::to_string(i) + "]";
      need_object((*ml)[i], at, origin);
      check_keys((*ml)[i], {"delta", "mu", "episodes"}, at, origin);
      StageConfig st;
      st.delta = as_num(need((*ml)[i], "delta", at, origin), at + ".delta", origin);
      st.episodes = as_int(need((*ml)[i], "episodes", at, origin), at + ".episodes", origin);
      if (!(st.delta > 0.0)) fail(origin, at + ".delta", "must be positive");
      if (st.episodes < 0) fail(origin, at + ".episodes", "must be nonnegative");
      if (const json* mu = get((*ml)[i], "mu")) {
        st.mu = as_num(*mu, at + ".mu", origin);
        if (!(*st.mu > 0.0)) fail(origin, at + ".mu", "must be positive");
      }
      if (i > 0) {
        if (!(st.delta < l.multilevel.back().delta))
          fail(origin, at + ".delta", "stages must strictly refine");
        if (st.mu.value_or(grids.mu) > l.multilevel.back().mu.value_or(grids.mu))
          fail(origin, at + ".mu", "stages must not coarsen the internal grid");
      }
      total += st.episodes;
      l.multilevel.push_back(st);
    }
    if (l.multilevel.back().delta != grids.delta)
      fail(origin, path + ".multilevel", "last stage must land on grids.delta");
    if (l.multilevel.back().mu.value_or(grids.mu) != grids.mu)
      fail(origin, path + ".multilevel", "last stage must land on grids.mu");
    if (total != l.episodes)
      fail(origin, path + ".multilevel", "stage episodes must sum to learn.episodes");
  }
  return l;
}

EvaluateConfig parse_evaluate(const json& v, const std::string& origin) {
  const std::string path = "evaluate";
  need_object(v, path, origin);
  check_keys(v, {"samples", "percentiles", "percentile_scope", "x0"}, path, origin);
  EvaluateConfig e;
  if (const json* s = get(v, "samples")) {
    e.samples = as_int(*s, path + ".samples", origin);
    if (e.samples < 1) fail(origin, path + ".samples", "must be positive");
  }
  if (const json* p = get(v, "percentiles")) {
    if (!p->is_array() || p->empty())
      fail(origin, path + ".percentiles", "expected a nonempty array");
    e.percentiles.clear();
    for (std::size_t i = 0; i < p->size(); ++i) {
      const std::int64_t r =
          as_int((*p)[i], path + ".percentiles[" + std::to_string(i) + "]", origin);
      if (r < 1 || r > 100)
        fail(origin, path + ".percentiles[" + std::to_string(i) + "]", "must lie in 1..100");
      e.percentiles.push_back(static_cast<int>(r));
    }
  }
  if (const json* sc = get(v, "percentile_scope")) {
    const std::string scope = as_str(*sc, path + ".percentile_scope", origin);
    if (scope == "per_subsystem")
      e.aggregate_percentiles = false;
    else if (scope == "aggregate")
      e.aggregate_percentiles = true;
    else
      fail(origin, path + ".percentile_scope", "expected 'per_subsystem' or 'aggregate'");
  }
  if (const json* x0 = get(v, "x0")) e.x0 = as_num_vec(*x0, path + ".x0", origin);
  return e;
}

json model_obj(const SubsystemModel& m) {
  json j;
  json sb = json::array();
  for (auto [lo, hi] : m.state_box) sb.push_back({lo, hi});
  json ib = json::array();
  for (auto [lo, hi] : m.internal_box) ib.push_back({lo, hi});
  j["state_box"] = std::move(sb);
  j["internal_box"] = std::move(ib);
  j["inputs"] = m.ext_inputs;
  j["a"] = m.a;
  j["b"] = m.b;
  j["D"] = m.d_gain;
  j["c"] = m.c;
  j["r"] = m.r;
  j["lipschitz_x"] = m.lipschitz_x;
  j["lipschitz_w"] = m.lipschitz_w;
  return j;
}

json spec_obj(const SpecConfig& spec, const GridConfig& grids) {
  json atoms = json::object();
  for (const AtomBox& ab : spec.atoms) {
    json box = json::array();
    for (auto [lo, hi] : ab.box) box.push_back({lo, hi});
    atoms[ab.name] = std::move(box);
  }
  json j;
  j["formula"] = spec.formula;
  j["horizon"] = spec.horizon;
  j["atoms"] = std::move(atoms);
  j["reward_mode"] = spec.reward_mode == RewardMode::Base ? "base" : "shaped";
  j["kappa"] = spec.kappa;
  j["delta"] = grids.delta;
  j["mu"] = grids.mu;
  j["internal_grid"] =
      grids.internal_mode == InternalGridMode::Cartesian ? "cartesian" : "per_axis_sum";
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument(origin + ": top level must be an object");
  check_keys(root, {"seed", "network", "grids", "spec", "learn", "evaluate"}, "config", origin);

  RunConfig cfg;
  if (const json* seed = get(root, "seed")) {
    if (!seed->is_number_unsigned() && !seed->is_number_integer())
      fail(origin, "seed", "expected an integer");
    const std::int64_t s = seed->get<std::int64_t>();
    if (s < 0) fail(origin, "seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  cfg.network = parse_network(need(root, "network", "config", origin), origin);
  cfg.grids = parse_grids(need(root, "grids", "config", origin), origin);
  cfg.spec = parse_spec(need(root, "spec", "config", origin), origin);
  cfg.learn = parse_learn(need(root, "learn", "config", origin), origin, cfg.grids);
  if (const json* ev = get(root, "evaluate")) cfg.evaluate = parse_evaluate(*ev, origin);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

NetworkModel build_network(const RunConfig& cfg) {
  NetworkModel net;
  if (cfg.network.builder == "room")
    net = build_room_network(cfg.network.n);
  else if (cfg.network.builder == "traffic")
    net = build_traffic_network(cfg.network.n);
  else
    net = cfg.network.custom;
  for (SubsystemModel& m : net.subsystems) {
    if (cfg.network.lipschitz_x) m.lipschitz_x = *cfg.network.lipschitz_x;
    if (cfg.network.lipschitz_w) m.lipschitz_w = *cfg.network.lipschitz_w;
  }
  net.validate();
  return net;
}

std::vector<double> network_x0(const RunConfig& cfg, const NetworkModel& net) {
  std::size_t total = 0;
  bool uniform_dims = true;
  for (const SubsystemModel& m : net.subsystems) {
    total += m.state_dims();
    uniform_dims = uniform_dims && m.state_dims() == net.subsystems[0].state_dims();
  }
  const std::vector<double>& x0 = cfg.evaluate.x0;
  if (x0.empty()) throw std::invalid_argument("evaluate.x0: required for this command");
  if (x0.size() == total) return x0;
  if (uniform_dims && x0.size() == net.subsystems[0].state_dims()) {
    std::vector<double> full;
    full.reserve(total);
    for (std::size_t i = 0; i < net.size(); ++i) full.insert(full.end(), x0.begin(), x0.end());
    return full;
  }
  throw std::invalid_argument(
      "evaluate.x0: expected one subsystem state block or the full network state");
}

std::string canonical_model_json(const SubsystemModel& m) { return model_obj(m).dump(); }

std::string canonical_spec_json(const SpecConfig& spec, const GridConfig& grids) {
  return spec_obj(spec, grids).dump();
}

std::string canonical_semantics_json(const RunConfig& cfg) {
  const NetworkModel net = build_network(cfg);
  json models = json::array();
  for (const SubsystemModel& m : net.subsystems) models.push_back(model_obj(m));
  json wiring = json::array();
  for (const auto& row : net.wiring) {
    json r = json::array();
    for (const WiringEntry& e : row) r.push_back({e.source, e.component});
    wiring.push_back(std::move(r));
  }
  json j;
  j["models"] = std::move(models);
  j["wiring"] = std::move(wiring);
  j["spec"] = spec_obj(cfg.spec, cfg.grids);
  return j.dump();
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace compsyn
