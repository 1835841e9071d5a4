#include "spoofdet/signal_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"

namespace spoofdet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dbm_to_linear(double dbm) { return std::pow(10.0, dbm / 10.0); }

void require_power(double dbm, const char* field) {
  if (std::isnan(dbm) || dbm == std::numeric_limits<double>::infinity()) {
    throw ConfigError(field, "must be finite or -inf");
  }
}

void validate(const ScenarioConfig& c) {
  if (c.num_locations < 2) throw ConfigError("num_locations", "need at least 2 locations");
  if (!(c.region_max.x > c.region_min.x) || !(c.region_max.y > c.region_min.y) ||
      !(c.region_max.z >= c.region_min.z)) {
    throw ConfigError("region", "region_max must exceed region_min in x and y");
  }
  if (c.receivers.empty() && (c.receiver_groups == 0 || c.antennas_per_group == 0)) {
    throw ConfigError("receiver_groups", "need at least one receiver channel");
  }
  if (!(c.antenna_spacing_m >= 0.0)) throw ConfigError("antenna_spacing_m", "must be >= 0");
  if (!(c.path_loss_exponent > 0.0) || !std::isfinite(c.path_loss_exponent)) {
    throw ConfigError("path_loss_exponent", "must be > 0");
  }
  if (!std::isfinite(c.reference_loss_db)) throw ConfigError("reference_loss_db", "must be finite");
  if (!(c.shadowing_std_db >= 0.0) || !std::isfinite(c.shadowing_std_db)) {
    throw ConfigError("shadowing_std_db", "must be >= 0");
  }
  if (!(c.shadowing_decorrelation_m >= 0.0)) {
    throw ConfigError("shadowing_decorrelation_m", "must be >= 0");
  }
  require_power(c.noise_power_dbm, "noise_power_dbm");
  require_power(c.tx_power_dbm, "tx_power_dbm");
  if (!(c.sampling_interval_s > 0.0)) throw ConfigError("sampling_interval_s", "must be > 0");
  if (!std::isfinite(c.tone_frequency_hz)) throw ConfigError("tone_frequency_hz", "must be finite");
}

}  // namespace

std::vector<Point3> antenna_group_layout(const ScenarioConfig& c) {
  const double w = c.region_max.x - c.region_min.x;
  const double h = c.region_max.y - c.region_min.y;
  const double perimeter = 2.0 * (w + h);
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(double(c.antennas_per_group))));

  std::vector<Point3> out;
  out.reserve(c.receiver_groups * c.antennas_per_group);
  for (std::size_t g = 0; g < c.receiver_groups; ++g) {
    double s = perimeter * double(g) / double(c.receiver_groups);
    Point3 base{c.region_min.x, c.region_min.y, c.receiver_height_m};
    if (s <= w) {
      base.x += s;
    } else if ((s -= w) <= h) {
      base.x = c.region_max.x;
      base.y += s;
    } else if ((s -= h) <= w) {
      base.x = c.region_max.x - s;
      base.y = c.region_max.y;
    } else {
      s -= w;
      base.y = c.region_max.y - s;
    }
    for (std::size_t a = 0; a < c.antennas_per_group; ++a) {
      out.push_back({base.x + c.antenna_spacing_m * double(a % cols),
                     base.y + c.antenna_spacing_m * double(a / cols), base.z});
    }
  }
  return out;
}

Scenario::Scenario(ScenarioConfig config, std::vector<Point3> receivers,
                   std::vector<Point3> locations, std::vector<double> shadowing_db,
                   std::vector<double> channel_phase)
    : config_(std::move(config)),
      receivers_(std::move(receivers)),
      locations_(std::move(locations)),
      shadowing_db_(std::move(shadowing_db)),
      channel_phase_(std::move(channel_phase)) {
  const std::size_t cells = locations_.size() * receivers_.size();
  if (shadowing_db_.size() != cells || channel_phase_.size() != cells) {
    throw DataError("scenario shadowing/phase tables do not match L x M");
  }
}

void Scenario::check_ids(std::size_t location, std::size_t receiver) const {
  if (location >= locations_.size()) {
    throw DataError("unknown location id " + std::to_string(location));
  }
  if (receiver >= receivers_.size()) {
    throw DataError("unknown receiver id " + std::to_string(receiver));
  }
}

double Scenario::shadowing_db(std::size_t location, std::size_t receiver) const {
  check_ids(location, receiver);
  return shadowing_db_[location * receivers_.size() + receiver];
}

double Scenario::channel_phase(std::size_t location, std::size_t receiver) const {
  check_ids(location, receiver);
  return channel_phase_[location * receivers_.size() + receiver];
}

double Scenario::received_signal_dbm(std::size_t location, std::size_t receiver) const {
  check_ids(location, receiver);
  const double d = std::max(1.0, distance(locations_[location], receivers_[receiver]));
  return config_.tx_power_dbm - config_.reference_loss_db -
         10.0 * config_.path_loss_exponent * std::log10(d) + shadowing_db(location, receiver);
}

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  validate(config);
  std::vector<Point3> receivers =
      config.receivers.empty() ? antenna_group_layout(config) : config.receivers;
  const std::size_t num_rx = receivers.size();

  Engine rng = make_engine(seed);
  std::uniform_real_distribution<double> ux(config.region_min.x, config.region_max.x);
  std::uniform_real_distribution<double> uy(config.region_min.y, config.region_max.y);
  std::uniform_real_distribution<double> uz(config.region_min.z, config.region_max.z);

  std::vector<Point3> locations;
  locations.reserve(config.num_locations);
  while (locations.size() < config.num_locations) {
    Point3 p{ux(rng), uy(rng), config.region_max.z > config.region_min.z ? uz(rng)
                                                                          : config.region_min.z};
    if (std::find(locations.begin(), locations.end(), p) == locations.end()) {
      locations.push_back(p);
    }
  }

  // Cross-channel shadowing covariance: sigma^2 exp(-|r_m - r_m'| / d_c).
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(long(num_rx), long(num_rx));
  if (config.shadowing_decorrelation_m > 0.0) {
    for (std::size_t a = 0; a < num_rx; ++a) {
      for (std::size_t b = 0; b < num_rx; ++b) {
        corr(long(a), long(b)) =
            std::exp(-distance(receivers[a], receivers[b]) / config.shadowing_decorrelation_m);
      }
    }
    corr.diagonal().array() += 1e-12;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("shadowing_decorrelation_m", "shadowing correlation is not positive definite");
  }
  const Eigen::MatrixXd factor = llt.matrixL();

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> shadowing(config.num_locations * num_rx);
  Eigen::VectorXd z(static_cast<Eigen::Index>(num_rx));
  for (std::size_t n = 0; n < config.num_locations; ++n) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const Eigen::VectorXd s = config.shadowing_std_db * (factor * z);
    for (std::size_t m = 0; m < num_rx; ++m) shadowing[n * num_rx + m] = s(long(m));
  }

  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<double> phases(config.num_locations * num_rx);
  for (auto& p : phases) p = phase(rng);

  return Scenario(config, std::move(receivers), std::move(locations), std::move(shadowing),
                  std::move(phases));
}

TrueRssVector true_rss(const Scenario& scenario, std::size_t location) {
  TrueRssVector out{location, {}};
  out.rss_dbm.reserve(scenario.num_receivers());
  const double noise = dbm_to_linear(scenario.config().noise_power_dbm);
  for (std::size_t m = 0; m < scenario.num_receivers(); ++m) {
    const double total = dbm_to_linear(scenario.received_signal_dbm(location, m)) + noise;
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw DegeneratePowerError("zero received power at location " + std::to_string(location) +
                                 ", receiver " + std::to_string(m));
    }
    out.rss_dbm.push_back(10.0 * std::log10(total));
  }
  return out;
}

SampleWindow draw_sample_window(const Scenario& scenario, std::size_t location,
                                std::size_t receiver, std::size_t num_samples, std::uint64_t seed) {
  if (num_samples == 0) throw ConfigError("num_samples", "must be >= 1");
  const auto& cfg = scenario.config();
  const double amplitude = std::sqrt(dbm_to_linear(scenario.received_signal_dbm(location, receiver)));
  const std::complex<double> gain = std::polar(amplitude, scenario.channel_phase(location, receiver));
  const double noise_std = std::sqrt(dbm_to_linear(cfg.noise_power_dbm) / 2.0);
  const double step = kTwoPi * cfg.tone_frequency_hz * cfg.sampling_interval_s;

  Engine rng = make_engine(seed);
  const double phi = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  SampleWindow w{location, receiver, {}, cfg.sampling_interval_s};
  w.samples.resize(num_samples);
  for (std::size_t k = 0; k < num_samples; ++k) {
    const std::complex<double> tone = std::polar(1.0, step * double(k) + phi);
    const double re = normal(rng);
    const double im = normal(rng);
    w.samples[k] = gain * tone + noise_std * std::complex<double>(re, im);
  }
  return w;
}

double estimate_rss(std::span<const std::complex<double>> samples) {
  if (samples.empty()) throw ConfigError("num_samples", "window is empty");
  double energy = 0.0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw DataError("non-finite sample in window");
    }
    energy += std::norm(s);
  }
  if (!(energy > 0.0)) throw DegeneratePowerError("all-zero sample window");
  return 10.0 * std::log10(energy / double(samples.size()));
}

double estimate_rss(const SampleWindow& window) { return estimate_rss(window.samples); }

std::vector<double> estimate_rss_vector(const Scenario& scenario, std::size_t location,
                                        std::size_t num_samples, std::uint64_t seed) {
  std::vector<double> out(scenario.num_receivers());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m] = estimate_rss(
        draw_sample_window(scenario, location, m, num_samples, derive_seed(seed, m)));
  }
  return out;
}

MeasurementSet generate_corpus(const Scenario& scenario, std::size_t estimates,
                               std::size_t num_samples, std::uint64_t seed) {
  if (estimates < 2) throw ConfigError("estimates", "need at least 2 estimates per location");
  std::vector<double> values;
  values.reserve(scenario.num_locations() * estimates * scenario.num_receivers());
  for (std::size_t n = 0; n < scenario.num_locations(); ++n) {
    const std::uint64_t location_seed = derive_seed(seed, n);
    for (std::size_t j = 0; j < estimates; ++j) {
      const auto f = estimate_rss_vector(scenario, n, num_samples, derive_seed(location_seed, j));
      values.insert(values.end(), f.begin(), f.end());
    }
  }
  return MeasurementSet(scenario.num_locations(), estimates, scenario.num_receivers(),
                        std::move(values), scenario.locations());
}

void write_sample_window(const SampleWindow& window, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("RSSW", 4);
  binary::put_u32(out, static_cast<std::uint32_t>(window.samples.size()));
  binary::put_u32(out, static_cast<std::uint32_t>(window.receiver));
  binary::put_u32(out, static_cast<std::uint32_t>(window.location));
  for (const auto& s : window.samples) {
    binary::put_f32(out, static_cast<float>(s.real()));
    binary::put_f32(out, static_cast<float>(s.imag()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

SampleWindow read_sample_window(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  binary::Reader r(in, path.string());
  if (r.tag(4) != "RSSW") throw DataError(path.string() + ": bad magic, expected RSSW");
  const std::uint32_t n = r.u32();
  SampleWindow w;
  w.receiver = r.u32();
  w.location = r.u32();
  w.samples.resize(n);
  for (auto& s : w.samples) {
    const float re = r.f32();
    const float im = r.f32();
    s = {re, im};
  }
  return w;
}

}  // namespace spoofdet
