#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "iyow/config.hpp"
#include "iyow/error.hpp"
#include "iyow/pipeline.hpp"
#include "iyow/sae.hpp"
#include "iyow/special_functions.hpp"
#include "iyow/stats.hpp"
#include "iyow/themes.hpp"

namespace py = pybind11;

namespace {

using namespace iyow;

std::vector<std::uint8_t> as_labels(const std::vector<bool>& v) { return {v.begin(), v.end()}; }

py::dict ols_dict(const OlsFit& fit) {
  py::dict d;
  d["names"] = fit.names;
  d["dropped_columns"] = fit.dropped_columns;
  d["beta"] = fit.beta;
  d["hc3_se"] = fit.hc3_se;
  d["classical_se"] = fit.classical_se;
  d["residuals"] = fit.residuals;
  d["leverage"] = fit.leverage;
  d["rss"] = fit.rss;
  d["r2"] = fit.r2;
  d["adj_r2"] = fit.adj_r2;
  d["n"] = fit.n;
  d["p"] = fit.p;
  return d;
}

py::dict nested_f_dict(const NestedFResult& r) {
  py::dict d;
  d["f_stat"] = r.f_stat;
  d["p_value"] = r.p_value;
  d["df_num"] = r.df_num;
  d["df_den"] = r.df_den;
  d["adj_r2_base"] = r.adj_r2_base;
  d["adj_r2_full"] = r.adj_r2_full;
  d["ratio"] = r.ratio;
  d["dropped_columns"] = r.dropped_columns;
  return d;
}

py::dict run(const std::filesystem::path& config_path, const std::optional<std::string>& stages,
             const std::optional<std::string>& axis, bool dry_run, bool mock_providers) {
  const RunConfig config = load_config(config_path);
  RunOptions options;
  if (stages) options.stages = parse_stage_list(*stages);
  if (axis) {
    const auto a = parse_axis(*axis);
    if (!a) throw ConfigError("unknown axis '" + *axis + "'");
    options.axis = *a;
  }
  options.dry_run = dry_run;
  options.mock_providers = mock_providers;
  std::ostringstream log;
  options.log = &log;
  RunSummary summary;
  {
    py::gil_scoped_release release;
    summary = run_pipeline(config, options);
  }
  py::list records;
  for (const auto& r : summary.stages) {
    py::dict d;
    d["axis"] = std::string(to_string(r.axis));
    d["stage"] = std::string(to_string(r.stage));
    d["status"] = std::string(to_string(r.status));
    d["detail"] = r.detail;
    records.append(d);
  }
  py::dict out;
  out["stages"] = records;
  out["provider_calls"] = summary.provider_calls;
  out["log"] = log.str();
  return out;
}

}  // namespace

PYBIND11_MODULE(iyow, m) {
  m.doc() = "Survey open-text theme discovery: sparse autoencoder, theme statistics, pipeline runner.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<CorpusError>(m, "CorpusError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ProviderError>(m, "ProviderError", base);
  py::register_exception<NumericError>(m, "NumericError", base);
  py::register_exception<StageError>(m, "StageError", base);

  py::class_<SaeConfig>(m, "SaeConfig")
      .def(py::init<>())
      .def_readwrite("latent_dim", &SaeConfig::latent_dim)
      .def_readwrite("sparsity", &SaeConfig::sparsity)
      .def_readwrite("epochs", &SaeConfig::epochs)
      .def_readwrite("batch_size", &SaeConfig::batch_size)
      .def_readwrite("learning_rate", &SaeConfig::learning_rate)
      .def_readwrite("seed", &SaeConfig::seed)
      .def_readwrite("dead_latent_patience", &SaeConfig::dead_latent_patience);

  py::class_<SaeModel>(m, "SaeModel")
      .def_property_readonly("latent_dim", &SaeModel::latent_dim)
      .def_property_readonly("input_dim", &SaeModel::input_dim)
      .def_readonly("config", &SaeModel::config)
      .def_readonly("decoder_weights", &SaeModel::decoder_weights)
      .def("encode", [](const SaeModel& s, const Eigen::VectorXd& x) { return encode(s, x); })
      .def("decode", [](const SaeModel& s, const Eigen::VectorXd& z) { return decode(s, z); })
      .def("activations", [](const SaeModel& s, const Eigen::MatrixXd& x) { return activations(s, x).values; })
      .def("to_bytes", [](const SaeModel& s) { return py::bytes(serialize_model(s)); })
      .def_static("from_bytes", [](const py::bytes& b) { return deserialize_model(std::string(b)); })
      .def_static("load", &load_model)
      .def("save", [](const SaeModel& s, const std::filesystem::path& p) { save_model(s, p); });

  m.def("top_k", &top_k, py::arg("pre_activations"), py::arg("k"));
  m.def(
      "train_sae",
      [](const Eigen::MatrixXd& data, const SaeConfig& config) {
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(data, config);
        }
        return py::make_tuple(r.model, r.loss_trace);
      },
      py::arg("data"), py::arg("config"), "Returns (model, per-epoch mean loss).");

  m.def(
      "ols",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
        return ols_dict(ols(X, y, std::move(names)));
      },
      py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{});
  m.def(
      "nested_f",
      [](const Eigen::MatrixXd& base, const Eigen::MatrixXd& full, const Eigen::VectorXd& y) {
        return nested_f_dict(nested_f(base, full, y));
      },
      py::arg("base"), py::arg("full"), py::arg("y"));
  m.def(
      "bh_adjust",
      [](const std::vector<double>& p, double fdr) {
        const BhResult r = bh_adjust(p, fdr);
        return py::make_tuple(r.rejected, r.adjusted);
      },
      py::arg("p_values"), py::arg("fdr") = 0.05, "Returns (rejected, adjusted).");
  m.def(
      "cohens_kappa",
      [](const std::vector<bool>& a, const std::vector<bool>& b) { return cohens_kappa(as_labels(a), as_labels(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "f1_score",
      [](const std::vector<bool>& predicted, const std::vector<bool>& truth) {
        return f1_score(confusion(as_labels(predicted), as_labels(truth)));
      },
      py::arg("predicted"), py::arg("truth"));
  m.def("f_sf", &f_sf, py::arg("x"), py::arg("df_num"), py::arg("df_den"));

  m.def("run", &run, py::arg("config_path"), py::arg("stages") = std::nullopt, py::arg("axis") = std::nullopt,
        py::arg("dry_run") = false, py::arg("mock_providers") = false,
        "Runs the pipeline and returns per-stage records and the provider call count.");
}
