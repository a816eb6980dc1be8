// Python bindings. Configs and reports cross the boundary as JSON text; the
// Python package converts them to dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ocitune/error.hpp"
#include "ocitune/io.hpp"
#include "ocitune/studies.hpp"

namespace py = pybind11;
using namespace ocitune;

namespace {

ExperimentConfig parse(const std::string& config_json) { return config_from_json(Json::parse(config_json)); }

ExperimentConfig study(const std::string& name) {
  if (name == "diagonal") return studies::diagonal_study();
  if (name == "block_triangular") return studies::block_study();
  if (name == "mismatched") return studies::mismatched_study();
  fail(ErrorCode::InvalidArgument, "unknown study '" + name + "'");
}

py::dict collect(const std::string& config_json, std::uint64_t seed) {
  const Collection c = collect_closed_loop(parse(config_json), seed);
  py::dict out;
  out["r"] = c.batch.r;
  out["u"] = c.batch.u;
  out["y"] = c.batch.y;
  out["y_signal"] = c.y_signal;
  out["y_noise"] = c.y_noise;
  out["metadata"] = c.batch.metadata;
  return out;
}

std::string identify(const std::string& config_json, const Signal& u, const Signal& y) {
  const ExperimentConfig cfg = parse(config_json);
  DataBatch batch{Signal::Zero(u.rows(), u.cols()), u, y, {}};
  return identification_report(cfg, run_oci(cfg, batch)).dump();
}

std::string run_monte_carlo(const std::string& config_json, std::size_t runs, std::optional<std::size_t> threads) {
  McSummary s;
  {
    py::gil_scoped_release release;
    s = monte_carlo(parse(config_json), runs, threads);
  }
  const auto box = [](const BoxStats& b) {
    return Json{{"count", b.count}, {"q1", b.q1},         {"median", b.median},         {"q3", b.q3},
                {"lo_whisker", b.lo_whisker}, {"hi_whisker", b.hi_whisker}, {"outliers", b.outliers}};
  };
  Json rows = Json::array();
  for (const RunRecord& r : s.runs)
    rows.push_back({{"seed", r.seed}, {"failed", r.failed}, {"stable", r.stable}, {"jmr", r.jmr},
                    {"z_nm", r.z_nm}, {"cost", r.cost}});
  return Json{{"jmr", box(s.jmr)}, {"z_nm", box(s.z_nm)}, {"failed", s.failed}, {"unstable", s.unstable}, {"runs", rows}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Closed-loop controller tuning from one data batch";
  m.attr("__version__") = kToolVersion;

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("study_config", [](const std::string& name) { return to_json(study(name)).dump(); }, py::arg("name"),
        "Built-in study config as JSON text.");
  m.def("validate_config", [](const std::string& c) { return to_json(parse(c)).dump(); }, py::arg("config_json"),
        "Parse and validate a config; returns its canonical JSON.");
  m.def("collect", &collect, py::arg("config_json"), py::arg("seed"), "Simulate the initial closed loop.");
  m.def("identify", &identify, py::arg("config_json"), py::arg("u"), py::arg("y"),
        "Identify controller and reference model; returns the report as JSON text.");
  m.def("monte_carlo", &run_monte_carlo, py::arg("config_json"), py::arg("runs"), py::arg("threads") = py::none(),
        "Monte Carlo campaign summary as JSON text.");
  m.def("prbs", &prbs, py::arg("channels"), py::arg("amplitude"), py::arg("hold"), py::arg("length"), py::arg("seed"));
  m.def("snr_db", &snr_db, py::arg("signal"), py::arg("noise"));
  m.def(
      "transmission_zeros",
      [](const std::string& matrix_json) {
        std::vector<std::pair<Complex, Eigen::VectorXcd>> out;
        for (const auto& z : ocitune::transmission_zeros(transfer_matrix_from_json(Json::parse(matrix_json), "matrix")))
          out.emplace_back(z.z, z.y_dir);
        return out;
      },
      py::arg("matrix_json"), "Transmission zeros with output directions of a transfer matrix given as JSON.");
}
