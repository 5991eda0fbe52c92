#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "compsyn/artifact.hpp"
#include "compsyn/pipeline.hpp"

namespace {

using CommandFn = void (*)(const std::string&, const compsyn::CliOverrides&,
                           const std::string&, std::ostream&, std::ostream&);

struct CommandSpec {
  const char* name;
  const char* help;
  CommandFn fn;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized controller synthesis for stochastic networks"};
  app.set_version_flag("--version", "0.1.0");
  app.require_subcommand(1);

  const CommandSpec commands[] = {
      {"learn", "train per-group tables and write artifacts", compsyn::cmd_learn},
      {"bound", "assemble the certified satisfaction lower bound", compsyn::cmd_bound},
      {"evaluate", "sample the closed-loop network", compsyn::cmd_evaluate},
      {"oracle", "exact values by backward induction", compsyn::cmd_oracle},
      {"export-traj", "dump sampled closed-loop trajectories", compsyn::cmd_export_traj},
  };

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::int64_t samples = 0;
  std::int64_t episodes = 0;
  int workers = 0;
  compsyn::CliOverrides ov;
  std::function<void()> run;

  for (const CommandSpec& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "run configuration (json)")->required();
    CLI::Option* so = sub->add_option("--seed", seed, "override the config seed");
    CLI::Option* sa = sub->add_option("--samples", samples, "override the sample count");
    CLI::Option* sw = sub->add_option("--workers", workers, "simulation threads");
    CLI::Option* se = sub->add_option("--episodes", episodes, "override the episode budget");
    sub->add_option("--out", out_dir, "artifact directory");
    sub->callback([&, fn = c.fn, so, sa, sw, se] {
      if (so->count()) ov.seed = seed;
      if (sa->count()) ov.samples = samples;
      if (sw->count()) ov.workers = workers;
      if (se->count()) ov.episodes = episodes;
      run = [&, fn] { fn(config_path, ov, out_dir, std::cout, std::cerr); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    run();
  } catch (const compsyn::ArtifactMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const compsyn::ModelUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
