#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "spoofdet/signal_model.hpp"
#include "support.hpp"

using namespace spoofdet;

namespace {

// One receiver at the origin, one location 0.5 m away (inside the 1 m
// near-field clamp), zero shadowing.
Scenario single_link(double tx_dbm, double noise_dbm) {
  ScenarioConfig cfg;
  cfg.num_locations = 1;
  cfg.tx_power_dbm = tx_dbm;
  cfg.reference_loss_db = 0.0;
  cfg.noise_power_dbm = noise_dbm;
  return Scenario(cfg, {{0.0, 0.0, 0.0}}, {{0.5, 0.0, 0.0}}, {0.0}, {0.3});
}

double linear(double dbm) { return std::pow(10.0, dbm / 10.0); }

}  // namespace

TEST_CASE("default scenario has 52 locations and 16 channels in 4 colocated groups") {
  const Scenario s = generate_scenario(ScenarioConfig{}, 11);
  CHECK(s.num_locations() == 52);
  CHECK(s.num_receivers() == 16);
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t a = 1; a < 4; ++a) {
      CHECK(distance(s.receivers()[4 * g], s.receivers()[4 * g + a]) < 0.1);
    }
  }
  CHECK(distance(s.receivers()[0], s.receivers()[4]) > 100.0);
}

TEST_CASE("scenario generation is deterministic per seed") {
  ScenarioConfig cfg;
  cfg.num_locations = 2;
  cfg.receiver_groups = 1;
  cfg.antennas_per_group = 1;
  const Scenario a = generate_scenario(cfg, 5);
  const Scenario b = generate_scenario(cfg, 5);
  CHECK(a.num_receivers() == 1);
  CHECK(a.locations() == b.locations());
  for (std::size_t n = 0; n < 2; ++n) {
    CHECK(a.shadowing_db(n, 0) == b.shadowing_db(n, 0));
    CHECK(a.channel_phase(n, 0) == b.channel_phase(n, 0));
  }
  const Scenario c = generate_scenario(cfg, 6);
  CHECK_FALSE(a.locations() == c.locations());
}

TEST_CASE("invalid scenario configs name the offending field") {
  ScenarioConfig cfg;
  cfg.num_locations = 0;
  try {
    generate_scenario(cfg, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "num_locations");
  }
  ScenarioConfig bad_gamma;
  bad_gamma.path_loss_exponent = -1.0;
  CHECK_THROWS_AS(generate_scenario(bad_gamma, 1), ConfigError);
  ScenarioConfig bad_noise;
  bad_noise.noise_power_dbm = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(generate_scenario(bad_noise, 1), ConfigError);
}

TEST_CASE("true RSS adds signal and noise powers linearly") {
  const Scenario equal = single_link(-90.0, -90.0);
  CHECK(true_rss(equal, 0).rss_dbm[0] == doctest::Approx(10.0 * std::log10(2e-9)).epsilon(1e-12));
  CHECK(true_rss(equal, 0).rss_dbm[0] == doctest::Approx(-86.9897).epsilon(1e-6));

  const Scenario silent = single_link(-std::numeric_limits<double>::infinity(), -90.0);
  CHECK(true_rss(silent, 0).rss_dbm[0] == doctest::Approx(-90.0).epsilon(1e-14));

  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(true_rss(single_link(-inf, -inf), 0), DegeneratePowerError);
  CHECK_THROWS_AS(true_rss(equal, 1), DataError);
}

TEST_CASE("true RSS matches a straight-line path-loss recomputation") {
  ScenarioConfig cfg;
  cfg.num_locations = 30;
  const Scenario s = generate_scenario(cfg, 99);
  for (std::size_t n = 0; n < s.num_locations(); ++n) {
    const auto f = true_rss(s, n).rss_dbm;
    REQUIRE(f.size() == 16);
    for (std::size_t m = 0; m < 16; ++m) {
      const Point3 p = s.locations()[n];
      const Point3 r = s.receivers()[m];
      double d = std::sqrt(std::pow(p.x - r.x, 2) + std::pow(p.y - r.y, 2) + std::pow(p.z - r.z, 2));
      if (d < 1.0) d = 1.0;
      const double pr = cfg.tx_power_dbm - cfg.reference_loss_db -
                        10.0 * cfg.path_loss_exponent * std::log10(d) + s.shadowing_db(n, m);
      const double oracle = 10.0 * std::log10(linear(pr) + linear(cfg.noise_power_dbm));
      CHECK(f[m] == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("shadowing is strongly correlated within an antenna group only") {
  ScenarioConfig cfg;
  cfg.num_locations = 1500;
  const Scenario s = generate_scenario(cfg, 3);
  auto corr = [&](std::size_t a, std::size_t b) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    const double n = double(s.num_locations());
    for (std::size_t i = 0; i < s.num_locations(); ++i) {
      const double x = s.shadowing_db(i, a), y = s.shadowing_db(i, b);
      sa += x;
      sb += y;
      saa += x * x;
      sbb += y * y;
      sab += x * y;
    }
    const double cov = sab / n - sa * sb / n / n;
    return cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  };
  CHECK(corr(0, 1) > 0.9);
  CHECK(std::abs(corr(0, 4)) < 0.1);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < s.num_locations(); ++i) sum_sq += std::pow(s.shadowing_db(i, 5), 2);
  CHECK(std::sqrt(sum_sq / double(s.num_locations())) == doctest::Approx(6.0).epsilon(0.08));
}

TEST_CASE("noiseless windows have constant modulus at the signal power") {
  const Scenario s = single_link(-70.0, -std::numeric_limits<double>::infinity());
  const SampleWindow w = draw_sample_window(s, 0, 0, 4, 17);
  REQUIRE(w.samples.size() == 4);
  for (const auto& r : w.samples) CHECK(std::norm(r) == doctest::Approx(linear(-70.0)).epsilon(1e-12));
}

TEST_CASE("window power converges to signal plus noise power") {
  const Scenario s = single_link(-88.0, -90.0);
  const SampleWindow w = draw_sample_window(s, 0, 0, 1'000'000, 4);
  long double total = 0.0L;
  for (const auto& r : w.samples) total += std::norm(r);
  const double mean = double(total / w.samples.size());
  CHECK(std::abs(mean / (linear(-88.0) + linear(-90.0)) - 1.0) < 0.01);
}

TEST_CASE("windows are reproducible per seed") {
  const Scenario s = generate_scenario(ScenarioConfig{}, 2);
  const SampleWindow a = draw_sample_window(s, 7, 3, 64, 123);
  const SampleWindow b = draw_sample_window(s, 7, 3, 64, 123);
  CHECK(a.samples == b.samples);
  CHECK_FALSE(a.samples == draw_sample_window(s, 7, 3, 64, 124).samples);
  CHECK_THROWS_AS(draw_sample_window(s, 7, 3, 0, 1), ConfigError);
}

TEST_CASE("RSS estimate of hand-computed windows") {
  const std::vector<std::complex<double>> unit(4, {1.0, 0.0});
  CHECK(estimate_rss(unit) == doctest::Approx(0.0));
  const std::vector<std::complex<double>> two{{2.0, 0.0}, {0.0, 0.0}};
  CHECK(estimate_rss(two) == doctest::Approx(3.0103).epsilon(1e-5));
  const std::vector<std::complex<double>> zeros(3);
  CHECK_THROWS_AS(estimate_rss(zeros), DegeneratePowerError);
  const std::vector<std::complex<double>> bad{{std::nan(""), 0.0}};
  CHECK_THROWS_AS(estimate_rss(bad), DataError);
}

TEST_CASE("RSS estimate matches an extended-precision oracle") {
  const Scenario s = generate_scenario(ScenarioConfig{}, 8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SampleWindow w = draw_sample_window(s, seed % 52, seed % 16, 16 + seed, seed);
    long double acc = 0.0L;
    for (const auto& r : w.samples) {
      acc += static_cast<long double>(r.real()) * r.real() + static_cast<long double>(r.imag()) * r.imag();
    }
    const double oracle = double(10.0L * std::log10(acc / w.samples.size()));
    CHECK(estimate_rss(w) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("RSS vector estimate") {
  SUBCASE("single receiver reduces to the scalar estimate") {
    ScenarioConfig cfg;
    cfg.receiver_groups = 1;
    cfg.antennas_per_group = 1;
    const Scenario s = generate_scenario(cfg, 1);
    const auto v = estimate_rss_vector(s, 2, 16, 77);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == estimate_rss(draw_sample_window(s, 2, 0, 16, derive_seed(77, 0))));
  }
  SUBCASE("reproducible per seed") {
    const Scenario s = generate_scenario(ScenarioConfig{}, 1);
    CHECK(estimate_rss_vector(s, 4, 16, 9) == estimate_rss_vector(s, 4, 16, 9));
    CHECK(estimate_rss_vector(s, 4, 16, 9) != estimate_rss_vector(s, 4, 16, 10));
  }
  SUBCASE("long windows converge to the true RSS") {
    ScenarioConfig cfg;
    cfg.receiver_groups = 2;
    cfg.antennas_per_group = 2;
    const Scenario s = generate_scenario(cfg, 21);
    const auto truth = true_rss(s, 0).rss_dbm;
    std::vector<double> mean(truth.size(), 0.0);
    for (std::uint64_t r = 0; r < 20; ++r) {
      const auto v = estimate_rss_vector(s, 0, 1'000'000, r);
      for (std::size_t m = 0; m < v.size(); ++m) mean[m] += v[m] / 20.0;
    }
    for (std::size_t m = 0; m < truth.size(); ++m) CHECK(std::abs(mean[m] - truth[m]) < 0.1);
  }
}

TEST_CASE("generated corpus has one estimate vector per (location, estimate)") {
  ScenarioConfig cfg;
  cfg.num_locations = 5;
  const Scenario s = generate_scenario(cfg, 3);
  const MeasurementSet ms = generate_corpus(s, 7, 16, 44);
  CHECK(ms.num_locations() == 5);
  CHECK(ms.num_estimates() == 7);
  CHECK(ms.num_features() == 16);
  REQUIRE(ms.coordinates().has_value());
  CHECK(*ms.coordinates() == s.locations());
  const auto direct = estimate_rss_vector(s, 3, 16, derive_seed(derive_seed(44, 3), 6));
  const auto stored = ms.feature(3, 6);
  CHECK(std::equal(direct.begin(), direct.end(), stored.begin(), stored.end()));
  CHECK(generate_corpus(s, 7, 16, 44) == ms);
  CHECK_THROWS_AS(generate_corpus(s, 1, 16, 44), ConfigError);
}

TEST_CASE("sample windows survive a binary round trip at float precision") {
  test_support::TempDir dir("window");
  const Scenario s = generate_scenario(ScenarioConfig{}, 3);
  const SampleWindow w = draw_sample_window(s, 5, 9, 32, 8);
  write_sample_window(w, dir / "w.bin");
  CHECK(std::filesystem::file_size(dir / "w.bin") == 16 + 32 * 8);
  const SampleWindow back = read_sample_window(dir / "w.bin");
  CHECK(back.location == 5);
  CHECK(back.receiver == 9);
  REQUIRE(back.samples.size() == 32);
  for (std::size_t k = 0; k < 32; ++k) {
    CHECK(back.samples[k].real() == static_cast<float>(w.samples[k].real()));
    CHECK(back.samples[k].imag() == static_cast<float>(w.samples[k].imag()));
  }
  std::filesystem::resize_file(dir / "w.bin", 20);
  CHECK_THROWS_AS(read_sample_window(dir / "w.bin"), DataError);
}
