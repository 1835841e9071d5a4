#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "spoofdet/benchmarks.hpp"
#include "spoofdet/detector.hpp"
#include "spoofdet/evaluation.hpp"
#include "spoofdet/experiment.hpp"
#include "spoofdet/model_io.hpp"
#include "spoofdet/signal_model.hpp"

namespace py = pybind11;
using namespace spoofdet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

MeasurementSet measurements_from_array(const Array& values) {
  if (values.ndim() != 3) throw DimensionError("values must have shape (locations, estimates, features)");
  const auto l = std::size_t(values.shape(0)), e = std::size_t(values.shape(1)),
             m = std::size_t(values.shape(2));
  return MeasurementSet(l, e, m, std::vector<double>(values.data(), values.data() + values.size()));
}

Array measurements_to_array(const MeasurementSet& ms) {
  Array out({ms.num_locations(), ms.num_estimates(), ms.num_features()});
  std::copy(ms.values().begin(), ms.values().end(), out.mutable_data());
  return out;
}

ExperimentConfig config_from(const py::dict& settings, std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  for (const auto& [key, value] : settings) {
    apply_setting(c, py::str(key).cast<std::string>(), py::str(value).cast<std::string>());
  }
  return c;
}

py::list summary_rows(const EvalReport& report) {
  py::list rows;
  for (const auto& r : summarize(report)) {
    py::dict d;
    d["algorithm"] = r.algorithm;
    d["sweep_var"] = r.sweep_var;
    d["sweep_value"] = r.sweep_value;
    d["mean_accuracy"] = r.mean_accuracy;
    d["std_error"] = r.std_error;
    d["iterations"] = r.iterations;
    rows.append(d);
  }
  return rows;
}

std::vector<LabeledDistance> labeled(const std::vector<double>& distances,
                                     const std::vector<bool>& is_diff) {
  if (distances.size() != is_diff.size()) throw DimensionError("distances and labels differ in length");
  std::vector<LabeledDistance> out(distances.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {distances[i], is_diff[i] ? Label::Diff : Label::Same};
  }
  return out;
}

// Held by value so the std::variant caster from stl.h does not intercept it.
struct Model {
  AnyModel model;
};

std::string model_kind(const AnyModel& m) {
  if (std::holds_alternative<DetectorModel>(m)) return "DNNC";
  if (const auto* d = std::get_if<DbcModel>(&m)) return d->norm_order == 1 ? "DBC1" : "DBC2";
  return "KMC";
}

}  // namespace

PYBIND11_MODULE(_spoofdet, m) {
  m.doc() = "Spoofing detection from pairs of RSS vectors";

  auto base = py::register_exception<Error>(m, "SpoofdetError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<DegeneratePowerError>(m, "DegeneratePowerError", base);
  py::register_exception<TrainingError>(m, "TrainingError", base);
  py::register_exception<IoError>(m, "IoError", base);

  py::enum_<Hypothesis>(m, "Hypothesis").value("H0", Hypothesis::H0).value("H1", Hypothesis::H1);

  py::class_<Decision>(m, "Decision")
      .def_readonly("hypothesis", &Decision::hypothesis)
      .def_readonly("statistic", &Decision::statistic)
      .def_readonly("posterior", &Decision::posterior)
      .def("__repr__", [](const Decision& d) {
        return "Decision(" + std::string(to_string(d.hypothesis)) +
               ", statistic=" + std::to_string(d.statistic) + ")";
      });

  m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view>(&derive_seed),
        py::arg("parent"), py::arg("tag"));

  // Signal model.
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("num_locations", &ScenarioConfig::num_locations)
      .def_readwrite("receiver_groups", &ScenarioConfig::receiver_groups)
      .def_readwrite("antennas_per_group", &ScenarioConfig::antennas_per_group)
      .def_readwrite("antenna_spacing_m", &ScenarioConfig::antenna_spacing_m)
      .def_readwrite("receiver_height_m", &ScenarioConfig::receiver_height_m)
      .def_readwrite("path_loss_exponent", &ScenarioConfig::path_loss_exponent)
      .def_readwrite("reference_loss_db", &ScenarioConfig::reference_loss_db)
      .def_readwrite("shadowing_std_db", &ScenarioConfig::shadowing_std_db)
      .def_readwrite("shadowing_decorrelation_m", &ScenarioConfig::shadowing_decorrelation_m)
      .def_readwrite("noise_power_dbm", &ScenarioConfig::noise_power_dbm)
      .def_readwrite("tx_power_dbm", &ScenarioConfig::tx_power_dbm)
      .def_readwrite("sampling_interval_s", &ScenarioConfig::sampling_interval_s)
      .def_readwrite("tone_frequency_hz", &ScenarioConfig::tone_frequency_hz);

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("num_locations", &Scenario::num_locations)
      .def_property_readonly("num_receivers", &Scenario::num_receivers)
      .def_property_readonly("receivers",
                             [](const Scenario& s) {
                               std::vector<std::array<double, 3>> out;
                               for (const auto& p : s.receivers()) out.push_back({p.x, p.y, p.z});
                               return out;
                             })
      .def_property_readonly("locations",
                             [](const Scenario& s) {
                               std::vector<std::array<double, 3>> out;
                               for (const auto& p : s.locations()) out.push_back({p.x, p.y, p.z});
                               return out;
                             })
      .def("received_signal_dbm", &Scenario::received_signal_dbm, py::arg("location"),
           py::arg("receiver"));

  m.def("generate_scenario", &generate_scenario, py::arg("config"), py::arg("seed"));
  m.def("true_rss", [](const Scenario& s, std::size_t l) { return true_rss(s, l).rss_dbm; },
        py::arg("scenario"), py::arg("location"));
  m.def("draw_sample_window",
        [](const Scenario& s, std::size_t l, std::size_t r, std::size_t n, std::uint64_t seed) {
          return draw_sample_window(s, l, r, n, seed).samples;
        },
        py::arg("scenario"), py::arg("location"), py::arg("receiver"), py::arg("num_samples"),
        py::arg("seed"));
  m.def("estimate_rss",
        [](const std::vector<std::complex<double>>& samples) { return estimate_rss(samples); },
        py::arg("samples"));
  m.def("estimate_rss_vector", &estimate_rss_vector, py::arg("scenario"), py::arg("location"),
        py::arg("num_samples"), py::arg("seed"));

  // Measurements and pairs.
  py::class_<MeasurementSet>(m, "MeasurementSet")
      .def(py::init(&measurements_from_array), py::arg("values"))
      .def_property_readonly("num_locations", &MeasurementSet::num_locations)
      .def_property_readonly("num_estimates", &MeasurementSet::num_estimates)
      .def_property_readonly("num_features", &MeasurementSet::num_features)
      .def_property_readonly("values", &measurements_to_array)
      .def("save", [](const MeasurementSet& ms, const std::filesystem::path& p) { save_measurements(ms, p); })
      .def_static("load", &load_measurements, py::arg("path"))
      .def("select_features",
           [](const MeasurementSet& ms, const std::vector<std::size_t>& ch) { return select_features(ms, ch); })
      .def(py::self == py::self);

  m.def("generate_corpus", &generate_corpus, py::arg("scenario"), py::arg("estimates"),
        py::arg("num_samples"), py::arg("seed"));

  py::class_<PairSet>(m, "PairSet")
      .def("__len__", &PairSet::size)
      .def_readonly("per_class", &PairSet::per_class)
      .def_property_readonly("first",
                             [](const PairSet& p) {
                               std::vector<std::vector<double>> out;
                               for (const auto& x : p.pairs) out.push_back(x.first);
                               return out;
                             })
      .def_property_readonly("second",
                             [](const PairSet& p) {
                               std::vector<std::vector<double>> out;
                               for (const auto& x : p.pairs) out.push_back(x.second);
                               return out;
                             })
      .def_property_readonly("is_diff", [](const PairSet& p) {
        std::vector<bool> out;
        for (const auto& x : p.pairs) out.push_back(x.label == Label::Diff);
        return out;
      });

  m.def("build_pair_set",
        [](const MeasurementSet& ms, const std::vector<std::size_t>& ids, std::size_t per_class,
           std::uint64_t seed) { return build_pair_set(ms, ids, per_class, seed); },
        py::arg("measurements"), py::arg("location_ids"), py::arg("per_class"), py::arg("seed"));

  // Benchmarks.
  m.def("tune_threshold",
        [](const std::vector<double>& d, const std::vector<bool>& is_diff) {
          const ThresholdFit fit = tune_threshold(labeled(d, is_diff));
          return py::make_tuple(fit.threshold, fit.accuracy);
        },
        py::arg("distances"), py::arg("is_diff"),
        "Best threshold for 'H1 iff distance > threshold' and its accuracy.");
  m.def("pair_distance",
        [](const std::vector<double>& a, const std::vector<double>& b, int q) {
          return pair_distance(a, b, q);
        },
        py::arg("first"), py::arg("second"), py::arg("norm_order") = 2);
  m.def("lloyd_kmeans",
        [](const std::vector<std::vector<double>>& pts, std::size_t k, std::uint64_t seed) {
          const KmeansResult r = lloyd_kmeans(pts, k, seed);
          py::dict d;
          d["centroids"] = r.centroids;
          d["assignment"] = r.assignment;
          d["wcss_history"] = r.wcss_history;
          d["iterations"] = r.iterations;
          d["converged"] = r.converged;
          return d;
        },
        py::arg("points"), py::arg("k"), py::arg("seed"));

  // Models.
  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& a) { return model_kind(a.model); })
      .def_property_readonly("feature_count", [](const Model& a) { return model_feature_count(a.model); })
      .def("decide",
           [](const Model& a, const std::vector<double>& f, const std::vector<double>& g) {
             return decide_any(a.model, f, g);
           },
           py::arg("first"), py::arg("second"))
      .def("save", [](const Model& a, const std::filesystem::path& p) { save_model(a.model, p); })
      .def_static("load", [](const std::filesystem::path& p) { return Model{load_model(p)}; },
                  py::arg("path"));

  m.def("train",
        [](const MeasurementSet& corpus, const std::string& algorithm, std::uint64_t seed,
           std::size_t locations, const py::dict& settings) {
          const ExperimentConfig c = config_from(settings, seed);
          const SweepPoint point{"locations", std::to_string(locations), locations, {}};
          const std::uint64_t s = derive_seed(seed, "train");
          std::vector<EpochRecord> history;
          AnyModel model;
          double accuracy = 0.0;
          {
            py::gil_scoped_release release;
            const TrialData trial = prepare_trial(corpus, point, c.protocol, s);
            model = train_algorithm(parse_algorithm(algorithm), trial, c.protocol, s, &history);
            accuracy = evaluate_accuracy(trial.test, [&](const LabeledPair& p) {
              return decide_any(model, p.first, p.second).hypothesis;
            });
          }
          return py::make_tuple(Model{std::move(model)}, accuracy, history.size());
        },
        py::arg("corpus"), py::arg("algorithm"), py::arg("seed"), py::arg("locations") = 45,
        py::arg("settings") = py::dict(),
        "Train one algorithm the way the CLI does. Returns (model, test accuracy, epochs).");

  // Experiments.
  m.def("config_text",
        [](const py::dict& settings, std::uint64_t seed) { return format_config(config_from(settings, seed)); },
        py::arg("settings") = py::dict(), py::arg("seed") = 0);
  m.def("build_corpus",
        [](std::uint64_t seed, const py::dict& settings) { return build_corpus(config_from(settings, seed)); },
        py::arg("seed"), py::arg("settings") = py::dict());

  auto sweep = [&m](const char* name, auto run) {
    m.def(name,
          [run](std::uint64_t seed, const py::dict& settings, const std::string& out) {
            const ExperimentConfig c = config_from(settings, seed);
            EvalReport report;
            {
              py::gil_scoped_release release;
              report = run(c);
            }
            if (!out.empty()) {
              emit_report(report, out);
              std::filesystem::path raw(out);
              raw.replace_extension(".raw.csv");
              emit_raw(report, raw);
            }
            return summary_rows(report);
          },
          py::arg("seed"), py::arg("settings") = py::dict(), py::arg("out") = "");
  };
  sweep("sweep_locations", [](const ExperimentConfig& c) { return sweep_locations(build_corpus(c), c); });
  sweep("sweep_features", [](const ExperimentConfig& c) { return sweep_features(build_corpus(c), c); });
  sweep("sweep_samples", [](const ExperimentConfig& c) { return sweep_samples(c); });
}
