#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "spoofdet/dataset.hpp"
#include "spoofdet/signal_model.hpp"
#include "support.hpp"

using namespace spoofdet;
using test_support::TempDir;

namespace {

MeasurementSet counting_corpus(std::size_t L, std::size_t E, std::size_t M) {
  // value(n, j, m) = 1000 n + 10 j + m: every vector identifies its origin.
  std::vector<double> v;
  for (std::size_t n = 0; n < L; ++n)
    for (std::size_t j = 0; j < E; ++j)
      for (std::size_t m = 0; m < M; ++m) v.push_back(1000.0 * n + 10.0 * j + m);
  return MeasurementSet(L, E, M, std::move(v));
}

}  // namespace

TEST_CASE("measurement set validates its contents") {
  CHECK_THROWS_AS(MeasurementSet(2, 2, 1, {1, 2, 3}), DataError);
  CHECK_THROWS_AS(MeasurementSet(2, 1, 1, {1, 2}), DataError);
  CHECK_THROWS_AS(MeasurementSet(1, 2, 1, {1, std::nan("")}), DataError);
  const MeasurementSet ms = counting_corpus(3, 4, 2);
  CHECK(ms.feature(2, 3)[1] == 2031.0);
  CHECK_THROWS_AS(ms.feature(3, 0), DimensionError);
}

TEST_CASE("pair sets have K SAME pairs followed by K DIFF pairs with correct provenance") {
  const MeasurementSet ms = counting_corpus(6, 5, 3);
  const std::vector<std::size_t> ids{1, 3, 4};
  const PairSet set = build_pair_set(ms, ids, 200, 7);
  REQUIRE(set.size() == 400);
  CHECK(set.per_class == 200);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set.pairs[i];
    CHECK((p.label == Label::Same) == (i < 200));
    CHECK(std::count(ids.begin(), ids.end(), p.first_location) == 1);
    CHECK(std::count(ids.begin(), ids.end(), p.second_location) == 1);
    CHECK(p.first_estimate != p.second_estimate);
    if (p.label == Label::Same) {
      CHECK(p.first_location == p.second_location);
    } else {
      CHECK(p.first_location != p.second_location);
    }
    CHECK(p.first[0] == 1000.0 * p.first_location + 10.0 * p.first_estimate);
    CHECK(p.second[2] == 1000.0 * p.second_location + 10.0 * p.second_estimate + 2);
  }
  CHECK(build_pair_set(ms, ids, 200, 7).pairs.size() == 400);
  CHECK(build_pair_set(ms, ids, 200, 7).pairs[123].first == set.pairs[123].first);
}

TEST_CASE("with two estimates a SAME pair uses exactly estimates 0 and 1") {
  const MeasurementSet ms = counting_corpus(4, 2, 1);
  const std::vector<std::size_t> ids{0, 1, 2, 3};
  for (const auto& p : build_pair_set(ms, ids, 50, 3).pairs) {
    if (p.label != Label::Same) continue;
    CHECK(std::set<std::size_t>{p.first_estimate, p.second_estimate} == std::set<std::size_t>{0, 1});
  }
}

TEST_CASE("full-size pair sets build from 40 locations") {
  const MeasurementSet ms = counting_corpus(52, 20, 2);
  const LocationSplit split = split_locations(ms, 40, 0.8, 1);
  CHECK(build_pair_set(ms, split.train, 1250, 2).size() == 2500);
  CHECK(build_pair_set(ms, split.validation, 150, 3).size() == 300);
}

TEST_CASE("SAME-pair locations are uniform over the subset (chi-square, alpha 0.01)") {
  const MeasurementSet ms = counting_corpus(20, 3, 1);
  const std::vector<std::size_t> ids{0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
  const PairSet set = build_pair_set(ms, ids, 100000, 2024);
  std::map<std::size_t, double> counts;
  for (std::size_t i = 0; i < set.per_class; ++i) counts[set.pairs[i].first_location] += 1.0;
  REQUIRE(counts.size() == 10);
  double chi2 = 0.0;
  for (const auto& [id, c] : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 21.666);  // chi-square(9) upper 1% point
}

TEST_CASE("pair set input validation") {
  const MeasurementSet ms = counting_corpus(4, 3, 1);
  const std::vector<std::size_t> one{0};
  const std::vector<std::size_t> missing{0, 9};
  const std::vector<std::size_t> ok{0, 1};
  CHECK_THROWS_AS(build_pair_set(ms, one, 5, 1), ConfigError);
  CHECK_THROWS_AS(build_pair_set(ms, missing, 5, 1), ConfigError);
  CHECK_THROWS_AS(build_pair_set(ms, ok, 0, 1), ConfigError);
}

TEST_CASE("location split sizes and determinism") {
  const MeasurementSet ms = counting_corpus(52, 2, 1);
  const LocationSplit s = split_locations(ms, 40, 0.8, 5);
  CHECK(s.train.size() == 32);
  CHECK(s.validation.size() == 8);
  CHECK(s.test.size() == 12);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 52);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  const LocationSplit again = split_locations(ms, 40, 0.8, 5);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);
  CHECK(again.test == s.test);
  CHECK(split_locations(ms, 40, 0.8, 6).train != s.train);

  CHECK_THROWS_AS(split_locations(ms, 4, 0.9, 1), ConfigError);  // round(3.6) = 4 leaves no validation
  CHECK_THROWS_AS(split_locations(ms, 53, 0.8, 1), ConfigError);
  CHECK_THROWS_AS(split_locations(ms, 40, 1.0, 1), ConfigError);
}

TEST_CASE("feature selection") {
  const MeasurementSet ms = counting_corpus(3, 2, 16);
  std::vector<std::size_t> all(16);
  for (std::size_t i = 0; i < 16; ++i) all[i] = i;
  CHECK(select_features(ms, all) == ms);

  const std::vector<std::size_t> same_rx{0, 1};
  const std::vector<std::size_t> cross_rx{0, 4};
  const MeasurementSet a = select_features(ms, same_rx);
  const MeasurementSet b = select_features(ms, cross_rx);
  CHECK(a.num_features() == 2);
  CHECK(a.feature(2, 1)[1] == 2011.0);
  CHECK(b.feature(2, 1)[1] == 2014.0);

  const std::vector<std::size_t> reversed{4, 0};
  CHECK(select_features(ms, reversed).feature(0, 0)[0] == 4.0);
  const std::vector<std::size_t> dup{1, 1};
  const std::vector<std::size_t> out_of_range{16};
  CHECK_THROWS_AS(select_features(ms, dup), ConfigError);
  CHECK_THROWS_AS(select_features(ms, out_of_range), ConfigError);
}

TEST_CASE("corpus CSV round trip keeps full precision and coordinates") {
  TempDir dir("csv");
  ScenarioConfig cfg;
  const Scenario s = generate_scenario(cfg, 12);
  const MeasurementSet ms = generate_corpus(s, 4, 16, 13);
  save_measurements(ms, dir / "corpus.csv");
  CHECK(std::filesystem::exists(dir / "corpus.locations.csv"));
  CHECK(locations_sidecar_path("a/b.csv") == std::filesystem::path("a/b.locations.csv"));
  const MeasurementSet back = load_measurements(dir / "corpus.csv");
  CHECK(back.num_locations() == 52);
  CHECK(back.num_features() == 16);
  CHECK(back == ms);

  std::filesystem::remove(dir / "corpus.locations.csv");
  const MeasurementSet no_coords = load_measurements(dir / "corpus.csv");
  CHECK_FALSE(no_coords.coordinates().has_value());
  CHECK(no_coords.values() == ms.values());
}

TEST_CASE("malformed corpus files are rejected with the offending row") {
  TempDir dir("bad");
  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name) << body;
    return dir / name;
  };
  const std::string header = "location_id,estimate_id,feat_0,feat_1\n";
  const auto nan_file = write("nan.csv", header + "0,0,1,2\n0,1,1,2\n1,0,nan,2\n1,1,3,4\n");
  try {
    load_measurements(nan_file);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 4") != std::string::npos);
  }
  CHECK_THROWS_AS(load_measurements(write("ragged.csv", header + "0,0,1,2\n0,1,1,2\n1,0,3,4\n")),
                  DataError);
  CHECK_THROWS_AS(load_measurements(write("cols.csv", header + "0,0,1\n")), DataError);
  CHECK_THROWS_AS(load_measurements(write("hdr.csv", "a,b,c\n0,0,1\n")), DataError);
  CHECK_THROWS_AS(load_measurements(write("dup.csv", header + "0,0,1,2\n0,0,1,2\n0,1,1,2\n")),
                  DataError);
  CHECK_THROWS_AS(load_measurements(dir / "absent.csv"), IoError);
  const MeasurementSet good =
      load_measurements(write("ok.csv", header + "1,1,5,6\n0,0,1,2\n0,1,3,4\n1,0,7,8\n"));
  CHECK(good.feature(1, 1)[0] == 5.0);
}
