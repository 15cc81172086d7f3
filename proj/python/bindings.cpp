#include "resilient_mfac/config.hpp"
#include "resilient_mfac/engine.hpp"
#include "resilient_mfac/threat.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace rmfac;

namespace {

// Owns a finished run and exposes it as numpy arrays.
class SimulationRun {
 public:
  SimulationRun(LoadedConfig loaded, SimTrace trace) : loaded_(std::move(loaded)), trace_(std::move(trace)) {}

  std::size_t n_agents() const { return trace_.n_agents; }
  Step steps() const { return trace_.steps(); }
  Step horizon() const { return loaded_.scenario.horizon; }
  std::string variant() const { return to_string(loaded_.scenario.variant); }
  const std::vector<std::string>& warnings() const { return loaded_.warnings; }
  std::optional<std::string> fault() const {
    if (!trace_.fault) return std::nullopt;
    return trace_.fault->message;
  }

  // Array of shape (steps, n_agents, dim) built from one Vec field.
  template <typename Get>
  py::array_t<double> stack(Get get) const {
    const auto n = static_cast<py::ssize_t>(trace_.n_agents);
    const auto steps = static_cast<py::ssize_t>(trace_.steps());
    const auto dim = static_cast<py::ssize_t>(trace_.output_dim);
    py::array_t<double> out({steps, n, dim});
    auto view = out.mutable_unchecked<3>();
    for (py::ssize_t k = 0; k < steps; ++k)
      for (py::ssize_t i = 0; i < n; ++i) {
        const Vec& v = get(trace_.records[static_cast<std::size_t>(k * n + i)]);
        for (py::ssize_t m = 0; m < dim; ++m) view(k, i, m) = v(m);
      }
    return out;
  }

  py::array_t<int> channel_bits() const {
    const auto n = static_cast<py::ssize_t>(trace_.n_agents);
    const auto steps = static_cast<py::ssize_t>(trace_.steps());
    const auto dim = static_cast<py::ssize_t>(trace_.output_dim);
    py::array_t<int> out({steps, n, dim});
    auto view = out.mutable_unchecked<3>();
    for (py::ssize_t k = 0; k < steps; ++k)
      for (py::ssize_t i = 0; i < n; ++i)
        for (py::ssize_t m = 0; m < dim; ++m) view(k, i, m) = trace_.records[static_cast<std::size_t>(k * n + i)].h(m);
    return out;
  }

  std::optional<py::array_t<double>> leader() const {
    if (!loaded_.scenario.leader) return std::nullopt;
    const auto steps = static_cast<py::ssize_t>(trace_.leader.size());
    const auto dim = static_cast<py::ssize_t>(trace_.output_dim);
    py::array_t<double> out({steps, dim});
    auto view = out.mutable_unchecked<2>();
    for (py::ssize_t k = 0; k < steps; ++k)
      for (py::ssize_t m = 0; m < dim; ++m) view(k, m) = (*trace_.leader[static_cast<std::size_t>(k)])(m);
    return out;
  }

  py::dict metrics(Step begin, Step end) const {
    const auto m = consensus_metrics(trace_, begin, end);
    py::dict d;
    d["rms_xi"] = m.rms_xi;
    d["sup_xi"] = m.sup_xi;
    d["network_rms_xi"] = m.network_rms_xi;
    d["max_disagreement"] = m.max_disagreement;
    d["mean_output"] = m.mean_output;
    d["mean_tracking_error"] = m.mean_tracking_error;
    return d;
  }

 private:
  LoadedConfig loaded_;
  SimTrace trace_;
};

SimulationRun run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed,
                         std::optional<std::string> variant) {
  std::optional<ControllerVariant> v;
  if (variant) v = parse_variant(*variant);
  auto loaded = load_config(path, seed, v);
  SimTrace trace;
  {
    py::gil_scoped_release release;
    trace = run_scenario(loaded.scenario);
  }
  return SimulationRun(std::move(loaded), std::move(trace));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulation core: scenario loading, closed-loop runs and attack models.";

  static py::exception<Error> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DivergenceFault&) {
      throw;  // reported through SimulationRun.fault when raised during a run
    } catch (const Error& e) {
      py::set_error(config_error, e.what());
    }
  });

  py::class_<SimulationRun>(m, "SimulationRun")
      .def_property_readonly("n_agents", &SimulationRun::n_agents)
      .def_property_readonly("steps", &SimulationRun::steps, "Logged steps; shorter than horizon after a fault.")
      .def_property_readonly("horizon", &SimulationRun::horizon)
      .def_property_readonly("variant", &SimulationRun::variant)
      .def_property_readonly("warnings", &SimulationRun::warnings)
      .def_property_readonly("fault", &SimulationRun::fault)
      .def_property_readonly("y", [](const SimulationRun& r) { return r.stack([](const StepRecord& s) -> const Vec& { return s.y; }); })
      .def_property_readonly("received", [](const SimulationRun& r) {
        return r.stack([](const StepRecord& s) -> const Vec& { return s.ya.value; });
      }, "Received outputs; NaN on denied channels.")
      .def_property_readonly("u", [](const SimulationRun& r) { return r.stack([](const StepRecord& s) -> const Vec& { return s.u; }); })
      .def_property_readonly("xi", [](const SimulationRun& r) { return r.stack([](const StepRecord& s) -> const Vec& { return s.xi; }); })
      .def_property_readonly("chi", [](const SimulationRun& r) { return r.stack([](const StepRecord& s) -> const Vec& { return s.chi; }); })
      .def_property_readonly("chi_tilde", [](const SimulationRun& r) {
        return r.stack([](const StepRecord& s) -> const Vec& { return s.chi_tilde; });
      })
      .def_property_readonly("h", &SimulationRun::channel_bits, "1 where a channel was delivered, 0 where denied.")
      .def_property_readonly("leader", &SimulationRun::leader)
      .def("metrics", &SimulationRun::metrics, py::arg("begin"), py::arg("end"),
           "Consensus statistics over steps [begin, end).");

  m.def("run", &run_config, py::arg("config"), py::arg("seed") = py::none(), py::arg("variant") = py::none(),
        "Load a scenario file and run it to the horizon or the first divergence.");

  m.def(
      "validate",
      [](const std::filesystem::path& path) { return load_config(path).warnings; },
      py::arg("config"), "Check a scenario file. Returns soft warnings; raises ConfigError on hard errors.");

  m.def(
      "fdi_signal",
      [](Step k, const Vec& y, double amplitude, double period) {
        FdiSpec spec;
        spec.amplitude = amplitude;
        spec.horizon = period;
        return fdi_signal(spec, k, y);
      },
      py::arg("k"), py::arg("y"), py::arg("amplitude") = 0.5, py::arg("period") = 1500.0,
      "Injected offset for a two-channel output at step k.");
}
