#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "compsyn/analysis.hpp"
#include "compsyn/artifact.hpp"
#include "compsyn/formula.hpp"
#include "compsyn/grid.hpp"
#include "compsyn/model.hpp"
#include "compsyn/pipeline.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using CommandFn = void (*)(const std::string&, const compsyn::CliOverrides&,
                           const std::string&, std::ostream&, std::ostream&);

std::string run_command(CommandFn fn, const std::string& config, const std::string& out_dir,
                        std::optional<std::uint64_t> seed, std::optional<std::int64_t> samples,
                        std::optional<std::int64_t> episodes, std::optional<int> workers) {
  compsyn::CliOverrides ov;
  ov.seed = seed;
  ov.samples = samples;
  ov.episodes = episodes;
  ov.workers = workers;
  std::ostringstream out, err;
  fn(config, ov, out_dir, out, err);
  return out.str();
}

void bind_command(py::module_& m, const char* name, CommandFn fn, const char* doc) {
  m.def(
      name,
      [fn](const std::string& config, const std::string& out_dir,
           std::optional<std::uint64_t> seed, std::optional<std::int64_t> samples,
           std::optional<std::int64_t> episodes, std::optional<int> workers) {
        return run_command(fn, config, out_dir, seed, samples, episodes, workers);
      },
      "config"_a, "out_dir"_a = "out", "seed"_a = py::none(), "samples"_a = py::none(),
      "episodes"_a = py::none(), "workers"_a = py::none(), doc);
}

}  // namespace

PYBIND11_MODULE(compo_synth, m) {
  m.doc() = "decentralized controller synthesis for stochastic networks";
  m.attr("__version__") = "0.1.0";

  py::register_exception<compsyn::ArtifactMismatch>(m, "ArtifactMismatch");
  py::register_exception<compsyn::ModelUnavailable>(m, "ModelUnavailable");

  m.def("penalty", &compsyn::penalty, "eps"_a, "n"_a,
        "interconnection penalty of the n-subsystem lower bound");
  m.def(
      "lower_bound",
      [](const std::vector<double>& p, const std::vector<double>& eps) {
        const compsyn::BoundResult r = compsyn::lower_bound(p, eps);
        return py::dict("product"_a = r.product, "penalty"_a = r.penalty, "lower"_a = r.lower,
                        "vacuous"_a = r.vacuous);
      },
      "p"_a, "eps"_a, "compositional satisfaction lower bound from per-subsystem values");
  m.def(
      "wilson_interval",
      [](std::int64_t successes, std::int64_t n) {
        const compsyn::Interval ci = compsyn::wilson_interval(successes, n);
        return py::make_tuple(ci.lo, ci.hi);
      },
      "successes"_a, "n"_a, "95% score interval for a binomial proportion");
  m.def("abstraction_error", &compsyn::abstraction_error, "horizon"_a, "volume"_a, "delta"_a,
        "lipschitz_x"_a, "mu"_a, "lipschitz_w"_a,
        "per-subsystem quantization error over the horizon");

  py::class_<compsyn::Grid>(m, "Grid")
      .def(py::init<std::vector<double>, std::vector<double>, double>(), "lo"_a, "hi"_a,
           "delta"_a)
      .def_property_readonly("n_cells", &compsyn::Grid::n_cells)
      .def_property_readonly("sink", &compsyn::Grid::sink)
      .def_property_readonly("dims", &compsyn::Grid::dims)
      .def("quantize",
           [](const compsyn::Grid& g, const std::vector<double>& x) { return g.quantize(x); },
           "x"_a)
      .def("representative",
           [](const compsyn::Grid& g, compsyn::CellId cell) { return g.representative(cell); },
           "cell"_a);

  m.def(
      "spec_info",
      [](const std::string& formula, int horizon,
         std::optional<std::vector<std::string>> atoms) {
        const compsyn::ParsedSpec ps = compsyn::parse_scltl(formula, atoms);
        const compsyn::CoSafetyDFA dfa =
            compsyn::to_dfa(*ps.formula, horizon, static_cast<int>(ps.atoms.size()));
        return py::dict("atoms"_a = ps.atoms, "states"_a = dfa.n_states,
                        "letters"_a = dfa.n_letters, "initial"_a = dfa.initial,
                        "accept"_a = dfa.accept_state, "reject"_a = dfa.reject_state);
      },
      "formula"_a, "horizon"_a, "atoms"_a = py::none(),
      "parse a bounded co-safe formula and summarize its automaton");
  m.def(
      "word_accepted",
      [](const std::string& formula, int horizon,
         const std::vector<std::uint32_t>& word,
         std::optional<std::vector<std::string>> atoms) {
        const compsyn::ParsedSpec ps = compsyn::parse_scltl(formula, atoms);
        const compsyn::CoSafetyDFA dfa =
            compsyn::to_dfa(*ps.formula, horizon, static_cast<int>(ps.atoms.size()));
        return compsyn::dfa_accepts(dfa, word);
      },
      "formula"_a, "horizon"_a, "word"_a, "atoms"_a = py::none(),
      "run a letter word of length horizon+1 through the automaton");

  m.def(
      "network_info",
      [](const std::string& builder, int n) {
        const compsyn::NetworkModel net = builder == "room"
                                              ? compsyn::build_room_network(n)
                                              : compsyn::build_traffic_network(n);
        py::list boxes;
        for (const compsyn::SubsystemModel& s : net.subsystems) boxes.append(s.state_box);
        return py::dict("n"_a = net.size(), "state_boxes"_a = boxes,
                        "inputs"_a = net.subsystems[0].ext_inputs.size(),
                        "internal_dims"_a = net.subsystems[0].internal_dims());
      },
      "builder"_a, "n"_a, "summary of a built-in network preset");

  bind_command(m, "run_learn", &compsyn::cmd_learn, "train tables, returns the text report");
  bind_command(m, "run_bound", &compsyn::cmd_bound,
               "assemble the certified lower bound, returns the text report");
  bind_command(m, "run_evaluate", &compsyn::cmd_evaluate,
               "sample the closed loop, returns the text report");
  bind_command(m, "run_oracle", &compsyn::cmd_oracle,
               "exact values by backward induction, returns the text report");
  bind_command(m, "run_export_traj", &compsyn::cmd_export_traj,
               "dump sampled trajectories, returns the text report");
}
