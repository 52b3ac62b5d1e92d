#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "freqens/benchmarks.hpp"
#include "freqens/ensemble.hpp"
#include "freqens/rng.hpp"

using namespace freqens;

namespace {

Dataset sine_data(std::size_t n, std::uint64_t seed) {
  Domain d({-1.0}, {1.0});
  Dataset data{d, lhs_sample(d, n, seed), {}};
  for (const auto& p : data.points) data.responses.push_back(std::sin(3.0 * p[0]));
  return data;
}

Dataset camel_data(std::size_t n, std::uint64_t seed) {
  const auto prob = camel2d();
  Dataset data{prob.domain, lhs_sample(prob.domain, n, seed), {}};
  for (const auto& p : data.points) data.responses.push_back(prob(p));
  return data;
}

}  // namespace

TEST_CASE("single candidate is returned unchanged") {
  const std::vector<Architecture> one{{1, {3}}};
  CHECK(select_architecture(sine_data(20, 1), one, {}) == one[0]);
}

TEST_CASE("linear data ties resolve to the smaller network") {
  Domain d({-1.0}, {1.0});
  Dataset data{d, lhs_sample(d, 20, 2), {}};
  for (const auto& p : data.points) data.responses.push_back(2.0 * p[0] + 1.0);
  const std::vector<Architecture> cands{{1, {32}}, {1, {1}}};
  SelectionConfig cfg;
  cfg.k_splits = 3;
  cfg.retries = 2;
  std::vector<ArchitectureScore> scores;
  CHECK(select_architecture(data, cands, cfg, &scores) == cands[1]);
  REQUIRE(scores.size() == 2);
  CHECK(scores[1].score < 1e-6);
  CHECK(scores[0].score < 1e-6);
}

TEST_CASE("sin(3x) prefers 8 hidden units over 1") {
  const std::vector<Architecture> cands{{1, {1}}, {1, {8}}};
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SelectionConfig cfg;
    cfg.k_splits = 3;
    cfg.retries = 3;
    cfg.seed = seed;
    wins += select_architecture(sine_data(30, seed), cands, cfg) == cands[1] ? 1 : 0;
  }
  CHECK(wins >= 8);
}

TEST_CASE("ensemble with one retry per combination") {
  const Dataset data = sine_data(20, 3);
  EnsembleConfig cfg;
  cfg.m = 2;
  cfg.retries = 1;
  cfg.seed = 5;
  const Ensemble ens = prepare_ensemble(data, {1, {4}}, cfg);
  REQUIRE(ens.size() == 2);
  CHECK(ens.components[0].combination_index == 0);
  CHECK(ens.components[1].combination_index == 1);
  CHECK(ens.components[0].params.flatten() != ens.components[1].params.flatten());
}

TEST_CASE("kept component minimizes train + validation error over its retries") {
  const Dataset data = camel_data(30, 4);
  EnsembleConfig cfg;
  cfg.m = 3;
  cfg.retries = 4;
  cfg.seed = 17;
  cfg.threads = 1;
  const Architecture arch{2, {6}};
  const Ensemble ens = prepare_ensemble(data, arch, cfg);

  for (const auto& comp : ens.components) {
    CHECK(comp.params.conforms_to(arch));
    CHECK(comp.train_error >= 0.0);
    CHECK(comp.val_error >= 0.0);
  }
  // retries = 1 reproduces retry 0 of every combination.
  EnsembleConfig single = cfg;
  single.retries = 1;
  const Ensemble first_only = prepare_ensemble(data, arch, single);
  for (std::size_t c = 0; c < 3; ++c)
    CHECK(ens.components[c].error_sum() <= first_only.components[c].error_sum());
}

TEST_CASE("ensemble is identical for serial and threaded training") {
  const Dataset data = camel_data(25, 6);
  EnsembleConfig cfg;
  cfg.m = 4;
  cfg.retries = 3;
  cfg.seed = 9;
  cfg.threads = 1;
  const Ensemble serial = prepare_ensemble(data, {2, {5}}, cfg);
  cfg.threads = 4;
  const Ensemble threaded = prepare_ensemble(data, {2, {5}}, cfg);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(serial.components[i].params.flatten() == threaded.components[i].params.flatten());
    CHECK(serial.components[i].seed == threaded.components[i].seed);
  }
}

TEST_CASE("prediction distributions") {
  const Dataset data = camel_data(30, 8);
  EnsembleConfig cfg;
  cfg.m = 5;
  cfg.retries = 2;
  Ensemble ens = prepare_ensemble(data, {2, {4}}, cfg);

  const Point x{0.4, -1.1};
  const auto dist = predict_distribution(ens, x);
  REQUIRE(dist.values.size() == 5);
  CHECK_FALSE(dist.outside_domain);
  for (std::size_t i = 0; i < 5; ++i) {
    const double z = forward(ens.components[i].params, ens.scaler.scale_input(x));
    CHECK(dist.values[i] == doctest::Approx(ens.scaler.unscale_output(z)).epsilon(1e-13));
  }

  Ensemble reversed = ens;
  std::reverse(reversed.components.begin(), reversed.components.end());
  const auto rdist = predict_distribution(reversed, x);
  for (std::size_t i = 0; i < 5; ++i) CHECK(rdist.values[i] == dist.values[4 - i]);

  Ensemble clones = ens;
  for (auto& c : clones.components) c = ens.components[0];
  const auto same = predict_distribution(clones, x);
  for (double v : same.values) CHECK(v == same.values[0]);

  CHECK(predict_distribution(ens, Point{5.0, 0.0}).outside_domain);
}

TEST_CASE("non-finite component output is reported with its index") {
  const Dataset data = sine_data(12, 2);
  EnsembleConfig cfg;
  cfg.m = 3;
  cfg.retries = 1;
  Ensemble ens = prepare_ensemble(data, {1, {2}}, cfg);
  ens.components[2].params.layers.back().bias[0] = std::numeric_limits<double>::infinity();
  try {
    predict_distribution(ens, Point{0.0});
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("component 2") != std::string::npos);
  }
}

TEST_CASE("ensemble save and load round trip") {
  const Dataset data = camel_data(20, 10);
  EnsembleConfig cfg;
  cfg.m = 3;
  cfg.retries = 2;
  cfg.seed = 4;
  const Ensemble ens = prepare_ensemble(data, {2, {3}}, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "freqens_ensemble_test";
  std::filesystem::remove_all(dir);
  save_ensemble(ens, dir);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "component_002.json"));
  const Ensemble back = load_ensemble(dir);
  CHECK(back.architecture == ens.architecture);
  CHECK(back.config.seed == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.components[i].params.flatten() == ens.components[i].params.flatten());
    CHECK(back.components[i].error_sum() == ens.components[i].error_sum());
  }
  const Point x{1.0, 2.0};
  CHECK(predict_distribution(back, x).values == predict_distribution(ens, x).values);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ensemble config validation") {
  const Dataset data = sine_data(10, 1);
  EnsembleConfig cfg;
  cfg.m = 1;
  CHECK_THROWS_AS(prepare_ensemble(data, {1, {2}}, cfg), std::invalid_argument);
  cfg.m = 2;
  cfg.retries = 0;
  CHECK_THROWS_AS(prepare_ensemble(data, {1, {2}}, cfg), std::invalid_argument);
  cfg.retries = 1;
  CHECK_THROWS_AS(prepare_ensemble(data, {2, {2}}, cfg), std::invalid_argument);
}
