#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsyn/config.hpp"
#include "compsyn/game.hpp"
#include "compsyn/learner.hpp"

namespace compsyn {

// A worst-case value query was asked of a run whose model is declared
// unavailable.
struct ModelUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> samples;
  std::optional<std::int64_t> episodes;
  std::optional<int> workers;
};

// Subsystems partitioned into controller groups: one learned table per
// group.  With share_policy identical subsystem models collapse into one
// group, otherwise every subsystem trains alone.
struct NetworkPlan {
  NetworkModel net;
  std::vector<int> group_of;              // per subsystem
  std::vector<int> representative;        // per group
  std::vector<std::uint64_t> model_hash;  // per group
};

NetworkPlan plan_network(const RunConfig& cfg);

// The per-subsystem game on a given grid width.  Certification games always
// judge plain acceptance: potential rewards without shaping and no discount.
// mu overrides the configured internal grid width (coarse schedule stages).
AbstractGame make_game(const RunConfig& cfg, const SubsystemModel& model, double delta,
                       bool certification, std::optional<double> mu = std::nullopt);

// Command entry points shared by the CLI and tests.  They throw on failure:
// std::invalid_argument for bad configs or inputs, ArtifactMismatch for
// stored tables that do not fit the run, ModelUnavailable for worst-case
// queries without a model, std::runtime_error for output failures.
void cmd_learn(const std::string& config_path, const CliOverrides& ov,
               const std::string& out_dir, std::ostream& out, std::ostream& err);
void cmd_bound(const std::string& config_path, const CliOverrides& ov,
               const std::string& out_dir, std::ostream& out, std::ostream& err);
void cmd_evaluate(const std::string& config_path, const CliOverrides& ov,
                  const std::string& out_dir, std::ostream& out, std::ostream& err);
void cmd_oracle(const std::string& config_path, const CliOverrides& ov,
                const std::string& out_dir, std::ostream& out, std::ostream& err);
void cmd_export_traj(const std::string& config_path, const CliOverrides& ov,
                     const std::string& out_dir, std::ostream& out, std::ostream& err);

}  // namespace compsyn
