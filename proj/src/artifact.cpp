#include "compsyn/artifact.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "json.hpp"

namespace compsyn {
namespace {

constexpr char kMagic[4] = {'C', 'S', 'Q', 'T'};
constexpr std::uint32_t kVersion = 2;

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::invalid_argument(path + ": truncated artifact");
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s, const std::string& path) {
  if (s.size() != 16) throw std::invalid_argument(path + ": malformed hash field");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9')
      v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else
      throw std::invalid_argument(path + ": malformed hash field");
  }
  return v;
}

}  // namespace

void save_qtable(const std::string& path, const ArtifactInfo& info, const QTable& table) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot write artifact");

  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  put(os, info.semantics_hash);
  put(os, info.model_hash);
  put(os, info.spec_hash);
  put(os, info.horizon);
  put(os, static_cast<std::uint32_t>(info.grid_lo.size()));
  for (std::size_t d = 0; d < info.grid_lo.size(); ++d) {
    put(os, info.grid_lo[d]);
    put(os, info.grid_hi[d]);
    put(os, info.grid_n[d]);
  }
  put(os, table.rows());
  put(os, static_cast<std::int32_t>(table.n_u()));
  put(os, static_cast<std::int32_t>(table.n_w()));
  put(os, static_cast<std::int32_t>(table.n_blocks()));
  for (int b = 0; b < table.n_blocks(); ++b)
    put(os, static_cast<std::int32_t>(table.q_of_block(b)));

  const auto qmax = table.raw_qmax();
  const auto qmin = table.raw_qmin();
  os.write(reinterpret_cast<const char*>(qmax.data()),
           static_cast<std::streamsize>(qmax.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(qmin.data()),
           static_cast<std::streamsize>(qmin.size() * sizeof(double)));
  if (!os) throw std::runtime_error(path + ": short write while saving artifact");
}

QTable load_qtable(const std::string& path, const AbstractGame& game, ArtifactInfo& info_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument(path + ": cannot open artifact");

  char magic[4];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::invalid_argument(path + ": not a table artifact");
  ArtifactInfo info;
  info.version = take<std::uint32_t>(is, path);
  if (info.version != kVersion)
    throw ArtifactMismatch(path + ": unsupported artifact version " +
                           std::to_string(info.version));
  info.semantics_hash = take<std::uint64_t>(is, path);
  info.model_hash = take<std::uint64_t>(is, path);
  info.spec_hash = take<std::uint64_t>(is, path);
  info.horizon = take<std::int32_t>(is, path);
  const std::uint32_t dims = take<std::uint32_t>(is, path);
  for (std::uint32_t d = 0; d < dims; ++d) {
    info.grid_lo.push_back(take<double>(is, path));
    info.grid_hi.push_back(take<double>(is, path));
    info.grid_n.push_back(take<std::int64_t>(is, path));
  }
  info.rows = take<std::int64_t>(is, path);
  info.n_u = take<std::int32_t>(is, path);
  info.n_w = take<std::int32_t>(is, path);
  const std::int32_t n_blocks = take<std::int32_t>(is, path);
  if (n_blocks < 0 || n_blocks > 1 << 20)
    throw std::invalid_argument(path + ": implausible block count");
  for (std::int32_t b = 0; b < n_blocks; ++b)
    info.q_of_block.push_back(take<std::int32_t>(is, path));

  QTable table(game);
  const bool shape_ok = info.horizon == game.horizon() && info.rows == table.rows() &&
                        info.n_u == table.n_u() && info.n_w == table.n_w() &&
                        n_blocks == table.n_blocks() &&
                        dims == game.state_grid().dims();
  if (!shape_ok)
    throw ArtifactMismatch(path + ": table shape does not match this configuration");
  for (std::int32_t b = 0; b < n_blocks; ++b)
    if (info.q_of_block[static_cast<std::size_t>(b)] != table.q_of_block(b))
      throw ArtifactMismatch(path + ": automaton layout does not match this configuration");
  for (std::uint32_t d = 0; d < dims; ++d)
    if (info.grid_lo[d] != game.state_grid().lo(d) || info.grid_hi[d] != game.state_grid().hi(d) ||
        info.grid_n[d] != game.state_grid().cells_in_dim(d))
      throw ArtifactMismatch(path + ": grid does not match this configuration");

  std::vector<double> qmax(table.raw_qmax().size());
  std::vector<double> qmin(table.raw_qmin().size());
  is.read(reinterpret_cast<char*>(qmax.data()),
          static_cast<std::streamsize>(qmax.size() * sizeof(double)));
  is.read(reinterpret_cast<char*>(qmin.data()),
          static_cast<std::streamsize>(qmin.size() * sizeof(double)));
  if (!is) throw std::invalid_argument(path + ": truncated artifact");

  table.load_qmin(qmin);
  table.load_qmax(qmax);
  info_out = info;
  return table;
}

void write_manifest(const std::string& path, const Manifest& m) {
  nlohmann::json groups = nlohmann::json::array();
  for (const ManifestGroup& g : m.groups) {
    nlohmann::json jg;
    jg["artifact"] = g.artifact;
    jg["subsystems"] = g.subsystems;
    jg["model_hash"] = hex64(g.model_hash);
    jg["spec_hash"] = hex64(g.spec_hash);
    jg["episodes"] = g.episodes;
    jg["visited_fraction"] = g.visited_fraction;
    groups.push_back(std::move(jg));
  }
  nlohmann::json j;
  j["version"] = m.version;
  j["created_unix"] = m.created_unix;
  j["config"] = m.config_path;
  j["seed"] = m.seed;
  j["semantics_hash"] = hex64(m.semantics_hash);
  j["state_action_pairs"] = m.state_action_pairs;
  j["groups"] = std::move(groups);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot write manifest");
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error(path + ": short write while saving manifest");
}

Manifest read_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument(path + ": cannot open manifest");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  Manifest m;
  try {
    m.version = j.at("version").get<std::uint32_t>();
    m.created_unix = j.at("created_unix").get<std::int64_t>();
    m.config_path = j.at("config").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.semantics_hash = parse_hex64(j.at("semantics_hash").get<std::string>(), path);
    m.state_action_pairs = j.at("state_action_pairs").get<std::int64_t>();
    for (const auto& jg : j.at("groups")) {
      ManifestGroup g;
      g.artifact = jg.at("artifact").get<std::string>();
      g.subsystems = jg.at("subsystems").get<std::vector<int>>();
      g.model_hash = parse_hex64(jg.at("model_hash").get<std::string>(), path);
      g.spec_hash = parse_hex64(jg.at("spec_hash").get<std::string>(), path);
      g.episodes = jg.at("episodes").get<std::int64_t>();
      g.visited_fraction = jg.at("visited_fraction").get<double>();
      m.groups.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  if (m.version != 1) throw std::invalid_argument(path + ": unsupported manifest version");
  return m;
}

}  // namespace compsyn
