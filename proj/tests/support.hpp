// Shared fixtures for the unit tests.
#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "spoofdet/common.hpp"
#include "spoofdet/dataset.hpp"

namespace test_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("spoofdet_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Corpus whose location n sits around center[n] with Gaussian jitter.
inline spoofdet::MeasurementSet blob_corpus(std::size_t locations, std::size_t estimates,
                                            std::size_t features, double spread, double jitter,
                                            std::uint64_t seed) {
  spoofdet::Engine rng(seed);
  std::uniform_real_distribution<double> center(-spread, spread);
  std::normal_distribution<double> noise(0.0, jitter);
  std::vector<double> values;
  for (std::size_t n = 0; n < locations; ++n) {
    std::vector<double> c(features);
    for (auto& v : c) v = -60.0 + center(rng);
    for (std::size_t e = 0; e < estimates; ++e) {
      for (double v : c) values.push_back(v + noise(rng));
    }
  }
  return spoofdet::MeasurementSet(locations, estimates, features, std::move(values));
}

}  // namespace test_support
