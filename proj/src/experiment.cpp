#include "spoofdet/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "text_util.hpp"

namespace spoofdet {

namespace {

std::string key_str(std::string_view key) { return std::string(key); }

double as_double(std::string_view key, std::string_view value) {
  const auto v = text::parse_double(value);
  if (!v) throw ConfigError(key_str(key), "expected a number, got '" + std::string(value) + "'");
  return *v;
}

std::uint64_t as_uint(std::string_view key, std::string_view value) {
  const auto v = text::parse_uint(value);
  if (!v) throw ConfigError(key_str(key), "expected a non-negative integer, got '" + std::string(value) + "'");
  return *v;
}

std::vector<std::size_t> as_uint_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  for (auto item : text::split(value, ',')) {
    if (text::trim(item).empty()) continue;
    out.push_back(std::size_t(as_uint(key, item)));
  }
  if (out.empty()) throw ConfigError(key_str(key), "list is empty");
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string fmt(double v) {
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  return text::format_double(v);
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;
struct Field {
  Setter set;
  Getter get;
};

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto sc = [](auto member) {
      return [member](ExperimentConfig& c) -> auto& { return std::invoke(member, c.scenario); };
    };
    auto pc = [](auto member) {
      return [member](ExperimentConfig& c) -> auto& { return std::invoke(member, c.protocol); };
    };
    auto tc = [](auto member) {
      return [member](ExperimentConfig& c) -> auto& { return std::invoke(member, c.protocol.train); };
    };
    // Getter lambdas take const configs; wrap mutable accessors for reading.
    auto dfield = [](auto access) {
      return Field{[access](ExperimentConfig& c, std::string_view k, std::string_view v) {
                     access(c) = as_double(k, v);
                   },
                   [access](const ExperimentConfig& c) {
                     return fmt(access(const_cast<ExperimentConfig&>(c)));
                   }};
    };
    auto sfield = [](auto access) {
      return Field{[access](ExperimentConfig& c, std::string_view k, std::string_view v) {
                     access(c) = std::size_t(as_uint(k, v));
                   },
                   [access](const ExperimentConfig& c) {
                     return std::to_string(access(const_cast<ExperimentConfig&>(c)));
                   }};
    };

    t.emplace_back("seed", Field{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                   c.seed = as_uint(k, v);
                                 },
                                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    t.emplace_back("corpus", Field{[](ExperimentConfig& c, std::string_view, std::string_view v) {
                                     c.corpus = std::string(v);
                                   },
                                   [](const ExperimentConfig& c) { return c.corpus; }});

    t.emplace_back("num_locations", sfield(sc(&ScenarioConfig::num_locations)));
    t.emplace_back("region_min_x", dfield([](ExperimentConfig& c) -> double& { return c.scenario.region_min.x; }));
    t.emplace_back("region_min_y", dfield([](ExperimentConfig& c) -> double& { return c.scenario.region_min.y; }));
    t.emplace_back("region_min_z", dfield([](ExperimentConfig& c) -> double& { return c.scenario.region_min.z; }));
    t.emplace_back("region_max_x", dfield([](ExperimentConfig& c) -> double& { return c.scenario.region_max.x; }));
    t.emplace_back("region_max_y", dfield([](ExperimentConfig& c) -> double& { return c.scenario.region_max.y; }));
    t.emplace_back("region_max_z", dfield([](ExperimentConfig& c) -> double& { return c.scenario.region_max.z; }));
    t.emplace_back("receiver_groups", sfield(sc(&ScenarioConfig::receiver_groups)));
    t.emplace_back("antennas_per_group", sfield(sc(&ScenarioConfig::antennas_per_group)));
    t.emplace_back("antenna_spacing_m", dfield(sc(&ScenarioConfig::antenna_spacing_m)));
    t.emplace_back("receiver_height_m", dfield(sc(&ScenarioConfig::receiver_height_m)));
    t.emplace_back("path_loss_exponent", dfield(sc(&ScenarioConfig::path_loss_exponent)));
    t.emplace_back("reference_loss_db", dfield(sc(&ScenarioConfig::reference_loss_db)));
    t.emplace_back("shadowing_std_db", dfield(sc(&ScenarioConfig::shadowing_std_db)));
    t.emplace_back("shadowing_decorrelation_m", dfield(sc(&ScenarioConfig::shadowing_decorrelation_m)));
    t.emplace_back("noise_power_dbm", dfield(sc(&ScenarioConfig::noise_power_dbm)));
    t.emplace_back("tx_power_dbm", dfield(sc(&ScenarioConfig::tx_power_dbm)));
    t.emplace_back("sampling_interval_s", dfield(sc(&ScenarioConfig::sampling_interval_s)));
    t.emplace_back("tone_frequency_hz", dfield(sc(&ScenarioConfig::tone_frequency_hz)));

    t.emplace_back("num_samples", sfield([](ExperimentConfig& c) -> std::size_t& { return c.num_samples; }));
    t.emplace_back("estimates", sfield([](ExperimentConfig& c) -> std::size_t& { return c.estimates; }));

    t.emplace_back("algorithms",
                   Field{[](ExperimentConfig& c, std::string_view, std::string_view v) {
                           c.algorithms.clear();
                           for (auto item : text::split(v, ',')) {
                             if (!text::trim(item).empty()) c.algorithms.push_back(parse_algorithm(item));
                           }
                           if (c.algorithms.empty()) throw ConfigError("algorithms", "list is empty");
                         },
                         [](const ExperimentConfig& c) {
                           std::string out;
                           for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
                             out += (i ? "," : "") + std::string(to_string(c.algorithms[i]));
                           }
                           return out;
                         }});
    t.emplace_back("locations_grid",
                   Field{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                           c.locations_grid = as_uint_list(k, v);
                         },
                         [](const ExperimentConfig& c) { return join(c.locations_grid); }});
    t.emplace_back("feature_subsets",
                   Field{[](ExperimentConfig& c, std::string_view, std::string_view v) {
                           c.feature_subsets.clear();
                           for (auto item : text::split(v, ',')) {
                             if (!text::trim(item).empty()) c.feature_subsets.push_back(parse_feature_subset(item));
                           }
                           if (c.feature_subsets.empty()) throw ConfigError("feature_subsets", "list is empty");
                         },
                         [](const ExperimentConfig& c) {
                           std::string out;
                           for (std::size_t i = 0; i < c.feature_subsets.size(); ++i) {
                             out += (i ? "," : "") + format_feature_subset(c.feature_subsets[i]);
                           }
                           return out;
                         }});
    t.emplace_back("feature_sweep_locations", sfield([](ExperimentConfig& c) -> std::size_t& { return c.feature_sweep_locations; }));
    t.emplace_back("samples_grid",
                   Field{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                           c.samples_grid = as_uint_list(k, v);
                         },
                         [](const ExperimentConfig& c) { return join(c.samples_grid); }});
    t.emplace_back("samples_sweep_locations", sfield([](ExperimentConfig& c) -> std::size_t& { return c.samples_sweep_locations; }));
    t.emplace_back("iterations", sfield([](ExperimentConfig& c) -> std::size_t& { return c.iterations; }));
    t.emplace_back("threads", sfield([](ExperimentConfig& c) -> std::size_t& { return c.threads; }));

    t.emplace_back("k_train", sfield(pc(&ProtocolConfig::k_train)));
    t.emplace_back("k_val", sfield(pc(&ProtocolConfig::k_val)));
    t.emplace_back("k_test", sfield(pc(&ProtocolConfig::k_test)));
    t.emplace_back("train_fraction", dfield(pc(&ProtocolConfig::train_fraction)));
    t.emplace_back("kappa", sfield(pc(&ProtocolConfig::kappa)));

    t.emplace_back("learning_rate", dfield(tc(&TrainConfig::learning_rate)));
    t.emplace_back("batch_size", sfield(tc(&TrainConfig::batch_size)));
    t.emplace_back("max_epochs", sfield(tc(&TrainConfig::max_epochs)));
    t.emplace_back("patience",
                   Field{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                           c.protocol.train.patience =
                               text::trim(v) == "inf" ? kUnlimitedPatience : std::size_t(as_uint(k, v));
                         },
                         [](const ExperimentConfig& c) {
                           return c.protocol.train.patience == kUnlimitedPatience
                                      ? std::string("inf")
                                      : std::to_string(c.protocol.train.patience);
                         }});
    t.emplace_back("l1", dfield(tc(&TrainConfig::l1)));
    t.emplace_back("negative_slope", dfield(tc(&TrainConfig::negative_slope)));
    t.emplace_back("hidden_layers",
                   Field{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                           c.protocol.train.hidden_layers = as_uint_list(k, v);
                         },
                         [](const ExperimentConfig& c) { return join(c.protocol.train.hidden_layers); }});
    return t;
  }();
  return table;
}

}  // namespace

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = text::trim(key);
  value = text::trim(value);
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(config, key, value);
      return;
    }
  }
  throw ConfigError(std::string(key), "unknown configuration key");
}

void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(row), "expected key = value in " + path.string());
    }
    apply_setting(config, view.substr(0, eq), view.substr(eq + 1));
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig config;
  apply_config_file(config, path);
  return config;
}

std::string format_config(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const auto& [name, field] : fields()) out << name << " = " << field.get(config) << '\n';
  return out.str();
}

Scenario build_scenario(const ExperimentConfig& config) {
  return generate_scenario(config.scenario, derive_seed(config.seed, "scenario"));
}

MeasurementSet build_corpus(const ExperimentConfig& config) {
  if (!config.corpus.empty()) return load_measurements(config.corpus);
  return generate_corpus(build_scenario(config), config.estimates, config.num_samples,
                         derive_seed(config.seed, "corpus"));
}

namespace {

bool has_dnnc(const ExperimentConfig& config) {
  return std::find(config.algorithms.begin(), config.algorithms.end(), Algorithm::Dnnc) !=
         config.algorithms.end();
}

void check_locations(const ExperimentConfig& config, std::size_t used, std::size_t available,
                     const char* key) {
  if (has_dnnc(config) && used < kMinDnncLocations) {
    throw ConfigError(key, "DNNC needs at least " + std::to_string(kMinDnncLocations) +
                               " locations, got " + std::to_string(used));
  }
  if (used + 2 > available) {
    throw ConfigError(key, std::to_string(used) + " locations leave fewer than 2 of " +
                               std::to_string(available) + " for testing");
  }
}

SweepOptions options_for(const ExperimentConfig& config, ProgressFn progress) {
  return {config.iterations, config.seed, config.threads, std::move(progress)};
}

}  // namespace

EvalReport sweep_locations(const MeasurementSet& corpus, const ExperimentConfig& config,
                           ProgressFn progress) {
  if (config.locations_grid.empty()) throw ConfigError("locations_grid", "grid is empty");
  std::vector<SweepPoint> points;
  for (std::size_t l : config.locations_grid) {
    check_locations(config, l, corpus.num_locations(), "locations_grid");
    points.push_back({"locations", std::to_string(l), l, {}});
  }
  const std::vector<const MeasurementSet*> corpora(points.size(), &corpus);
  EvalReport report = run_sweep(corpora, points, config.algorithms, config.protocol,
                                options_for(config, std::move(progress)));
  report.config_echo = format_config(config);
  return report;
}

EvalReport sweep_features(const MeasurementSet& corpus, const ExperimentConfig& config,
                          ProgressFn progress) {
  if (config.feature_subsets.empty()) throw ConfigError("feature_subsets", "list is empty");
  check_locations(config, config.feature_sweep_locations, corpus.num_locations(),
                  "feature_sweep_locations");
  std::vector<SweepPoint> points;
  for (const auto& subset : config.feature_subsets) {
    select_features(corpus, subset);  // validates ids against M
    points.push_back({"features", format_feature_subset(subset), config.feature_sweep_locations, subset});
  }
  const std::vector<const MeasurementSet*> corpora(points.size(), &corpus);
  EvalReport report = run_sweep(corpora, points, config.algorithms, config.protocol,
                                options_for(config, std::move(progress)));
  report.config_echo = format_config(config);
  return report;
}

EvalReport sweep_samples(const ExperimentConfig& config, ProgressFn progress) {
  if (!config.corpus.empty()) {
    throw ConfigError("corpus", "the samples sweep regenerates synthetic corpora; unset corpus");
  }
  if (config.samples_grid.empty()) throw ConfigError("samples_grid", "grid is empty");
  const Scenario scenario = build_scenario(config);
  std::vector<MeasurementSet> owned;
  std::vector<SweepPoint> points;
  for (std::size_t n : config.samples_grid) {
    if (n == 0) throw ConfigError("samples_grid", "sample counts must be >= 1");
    owned.push_back(
        generate_corpus(scenario, config.estimates, n, derive_seed(config.seed, "corpus")));
    check_locations(config, config.samples_sweep_locations, owned.back().num_locations(),
                    "samples_sweep_locations");
    points.push_back({"samples", std::to_string(n), config.samples_sweep_locations, {}});
  }
  std::vector<const MeasurementSet*> corpora;
  for (const auto& c : owned) corpora.push_back(&c);
  EvalReport report = run_sweep(corpora, points, config.algorithms, config.protocol,
                                options_for(config, std::move(progress)));
  report.config_echo = format_config(config);
  return report;
}

}  // namespace spoofdet
