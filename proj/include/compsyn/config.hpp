#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compsyn/game.hpp"
#include "compsyn/learner.hpp"
#include "compsyn/model.hpp"
#include "compsyn/reward.hpp"

namespace compsyn {

struct NetworkConfig {
  std::string builder = "custom";  // room | traffic | custom
  int n = 0;                       // subsystem count for the presets
  bool model_available = true;
  NetworkModel custom;
  std::optional<double> lipschitz_x;  // applied to every subsystem when set
  std::optional<double> lipschitz_w;
};

struct GridConfig {
  double delta = 0.0;
  double mu = 0.0;
  InternalGridMode internal_mode = InternalGridMode::Cartesian;
};

struct SpecConfig {
  std::string formula;
  int horizon = 1;
  std::vector<AtomBox> atoms;  // alphabetical; bit i of a letter is atoms[i]
  RewardMode reward_mode = RewardMode::Shaped;
  double kappa = 1e-3;
};

struct StageConfig {
  double delta = 0.0;
  std::optional<double> mu;  // internal grid width; empty = grids.mu
  std::int64_t episodes = 0;
};

struct LearnConfig {
  std::int64_t episodes = 0;
  LearnRate lr;
  double explore = 0.1;
  double gamma = 1.0;
  bool init_uniform = true;
  std::vector<double> init_x;  // start state when init is a point
  bool share_policy = true;
  std::vector<StageConfig> multilevel;  // empty = single grid
};

struct EvaluateConfig {
  std::int64_t samples = 100000;
  std::vector<int> percentiles = {1, 10, 50, 90, 99};
  bool aggregate_percentiles = false;
  std::vector<double> x0;  // one subsystem block (broadcast) or the full network state
};

struct RunConfig {
  std::uint64_t seed = 1;
  NetworkConfig network;
  GridConfig grids;
  SpecConfig spec;
  LearnConfig learn;
  EvaluateConfig evaluate;
};

// Reads and validates a JSON run configuration.  Errors throw
// std::invalid_argument anchored as "<origin>: <path>: <problem>".
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin);

// Instantiates the configured network with lipschitz overrides applied.
NetworkModel build_network(const RunConfig& cfg);

// The full initial network state: x0 broadcast per subsystem if it was given
// as a single block.
std::vector<double> network_x0(const RunConfig& cfg, const NetworkModel& net);

// Canonical (key-sorted, shortest round-trip numerals) JSON strings used for
// artifact fingerprints.
std::string canonical_model_json(const SubsystemModel& m);
std::string canonical_spec_json(const SpecConfig& spec, const GridConfig& grids);
std::string canonical_semantics_json(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace compsyn
