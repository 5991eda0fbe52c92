#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsyn/game.hpp"
#include "compsyn/learner.hpp"

namespace compsyn {

// A stored table that does not fit the run it is being used with: different
// fingerprints, shapes or automaton layout.
struct ArtifactMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArtifactInfo {
  std::uint32_t version = 1;
  std::uint64_t semantics_hash = 0;  // whole-run fingerprint (models+wiring+spec)
  std::uint64_t model_hash = 0;      // this subsystem's model
  std::uint64_t spec_hash = 0;       // formula, atoms, reward mode, grids
  std::int32_t horizon = 0;
  std::vector<double> grid_lo, grid_hi;
  std::vector<std::int64_t> grid_n;
  std::int64_t rows = 0;
  std::int32_t n_u = 0;
  std::int32_t n_w = 0;
  std::vector<std::int32_t> q_of_block;
};

// Little-endian binary dump: header, the controller block (row minima), then
// the full adversary table.  The controller block doubles as an integrity
// check on load.
void save_qtable(const std::string& path, const ArtifactInfo& info, const QTable& table);

// Reads the table back for `game`.  Shape disagreements raise
// ArtifactMismatch; unreadable or corrupt files raise invalid_argument.
// Fingerprints are returned for the caller to judge.
QTable load_qtable(const std::string& path, const AbstractGame& game, ArtifactInfo& info_out);

struct ManifestGroup {
  std::string artifact;          // file name relative to the manifest
  std::vector<int> subsystems;   // members controlled by this table
  std::uint64_t model_hash = 0;
  std::uint64_t spec_hash = 0;
  std::int64_t episodes = 0;
  double visited_fraction = 0.0;
};

struct Manifest {
  std::uint32_t version = 1;
  std::int64_t created_unix = 0;  // wall clock; the one field repeat runs may differ in
  std::string config_path;
  std::uint64_t seed = 0;
  std::uint64_t semantics_hash = 0;
  std::int64_t state_action_pairs = 0;
  std::vector<ManifestGroup> groups;
};

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

}  // namespace compsyn
