#include "cli.hpp"
#include "ssdr/dataset.hpp"
#include "ssdr/errors.hpp"
#include "ssdr/estimators.hpp"
#include "ssdr/projection.hpp"
#include "ssdr/qda.hpp"
#include "ssdr/report.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ssdr;
using nlohmann::json;

namespace {

// Option dicts arrive as JSON text and use the config file's pipeline keys.
PrecisionEstimatorSpec spec_from(const std::string& options) {
  const json j = json::parse(options.empty() ? "{}" : options);
  json with_kind = j;
  if (!with_kind.contains("estimator")) with_kind["estimator"] = "sample";
  return cli::pipeline_from_json(with_kind, "", MryPenalty::Simple).estimator;
}

LabeledDataset dataset(const Matrix& x, const std::vector<int>& y) {
  return LabeledDataset(x, y);
}

py::dict estimate_to_dict(const PrecisionEstimate& e) {
  py::dict d;
  d["omega"] = e.omega.mat();
  d["iterations"] = e.diagnostics.iterations;
  d["kkt_residual"] = e.diagnostics.kkt_residual;
  d["shrinkage_coefficients"] = e.diagnostics.shrinkage_coefficients;
  d["repaired"] = e.diagnostics.repaired;
  return d;
}

std::string report_json(const cli::RunResult& r) {
  return report_to_json(r.report, r.info).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ssdr C++ core";
  m.attr("__version__") = tool_version();

  py::register_exception<Error>(m, "SsdrError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const json::exception& e) {
      const std::string msg = std::string("invalid options: ") + e.what();
      py::set_error(PyExc_ValueError, msg.c_str());
    }
  });

  m.def(
      "estimate_precision",
      [](const Matrix& cov, std::size_t n, const Vector& mean, const std::string& options) {
        ClassSummary cs;
        cs.n = n;
        cs.cov = SymMatrix(cov);
        cs.mean = mean.size() ? mean : Vector::Zero(cov.rows());
        cs.prior = 1.0;
        return estimate_to_dict(estimate(cs, spec_from(options)));
      },
      py::arg("cov"), py::arg("n"), py::arg("mean"), py::arg("options"));

  m.def(
      "mhat",
      [](const Matrix& x, const std::vector<int>& y, const std::string& options) {
        return build_mhat(summarize(dataset(x, y)), spec_from(options));
      },
      py::arg("x"), py::arg("y"), py::arg("options"));

  m.def(
      "projection_basis",
      [](const Matrix& mhat, Eigen::Index r) {
        const ProjectionBasis b = projection_basis(mhat, r);
        return py::make_tuple(b.u, b.singular_values, b.numerical_rank, b.beyond_rank);
      },
      py::arg("mhat"), py::arg("r"));

  py::class_<QdaModel>(m, "QdaModel")
      .def_static(
          "fit",
          [](const Matrix& x, const std::vector<int>& y, const std::string& options) {
            return fit(summarize(dataset(x, y)), spec_from(options));
          },
          py::arg("x"), py::arg("y"), py::arg("options"))
      .def_property_readonly("p", &QdaModel::p)
      .def_property_readonly("k", &QdaModel::k)
      .def("scores", [](const QdaModel& q, const Matrix& x) { return scores(q, x); })
      .def("predict", [](const QdaModel& q, const Matrix& x) { return classify(q, x); })
      .def("error_rate", [](const QdaModel& q, const Matrix& x, const std::vector<int>& y) {
        return conditional_error_rate(q, dataset(x, y));
      });

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& label, bool header) {
        CsvSchema schema;
        schema.header = header;
        if (!label.empty() && label[0] == '#') {
          schema.label_column = static_cast<std::size_t>(std::stoul(label.substr(1)));
        } else {
          schema.label_column = label;
        }
        const LabeledDataset ds = load_csv(path, schema);
        return py::make_tuple(ds.features(), ds.labels(), ds.class_names());
      },
      py::arg("path"), py::arg("label"), py::arg("header"));

  m.def(
      "simulate",
      [](const std::string& config) {
        cli::SimulateSettings s = cli::simulate_from_json(json::parse(config));
        cli::finalize(s, "python");
        py::gil_scoped_release release;
        return report_json(cli::execute(s));
      },
      py::arg("config"));

  m.def(
      "cross_validate",
      [](const std::string& config, const std::string& base_dir) {
        cli::CvSettings s = cli::cv_from_json(json::parse(config), base_dir);
        cli::finalize(s, "python");
        py::gil_scoped_release release;
        return report_json(cli::execute(s));
      },
      py::arg("config"), py::arg("base_dir"));
}
