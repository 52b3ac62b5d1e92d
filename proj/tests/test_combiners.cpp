#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "freqens/combiners.hpp"
#include "freqens/rng.hpp"
#include "oracles/core_search_reference.hpp"

using namespace freqens;

namespace {

// Mixture of 1-3 Gaussian-ish clusters plus up to 20% distant outliers.
std::vector<double> random_distribution(Rng& rng, std::size_t m) {
  const std::size_t clusters = 1 + rng.index(3);
  std::vector<double> centers(clusters), spreads(clusters);
  for (std::size_t c = 0; c < clusters; ++c) {
    centers[c] = rng.uniform(-50.0, 50.0);
    spreads[c] = std::pow(10.0, rng.uniform(-3.0, 1.0));
  }
  const auto outliers = static_cast<std::size_t>(std::floor(rng.uniform() * 0.2 * static_cast<double>(m)));
  std::vector<double> v;
  for (std::size_t i = 0; i < m; ++i) {
    if (i < outliers) {
      v.push_back(rng.uniform(-500.0, 500.0));
    } else {
      const std::size_t c = rng.index(clusters);
      double g = 0.0;
      for (int k = 0; k < 6; ++k) g += rng.uniform() - 0.5;
      v.push_back(centers[c] + spreads[c] * g);
    }
  }
  rng.shuffle(std::span<double>(v));
  return v;
}

}  // namespace

TEST_CASE("average combiner") {
  CHECK(combine_average(std::vector<double>{1, 2, 3}) == 2.0);
  CHECK(combine_average(std::vector<double>{4.5, 4.5, 4.5}) == 4.5);
  CHECK(combine_average(std::vector<double>{0, 100}) == 50.0);
  CHECK_THROWS(combine_average(std::vector<double>{}));
}

TEST_CASE("weighted combiner") {
  auto sym = combine_weighted(std::vector<double>{10, 20}, std::vector<double>{1, 1});
  CHECK(sym.weights[0] == doctest::Approx(0.5));
  CHECK(sym.value == doctest::Approx(15.0));

  auto w = combine_weighted(std::vector<double>{10, 20}, std::vector<double>{1, 3});
  CHECK(w.weights[0] == doctest::Approx(3.1 / 4.2).epsilon(1e-12));
  CHECK(w.weights[1] == doctest::Approx(1.1 / 4.2).epsilon(1e-12));
  CHECK(w.value == doctest::Approx(12.619047619047619).epsilon(1e-12));

  auto scaled = combine_weighted(std::vector<double>{10, 20}, std::vector<double>{7, 21});
  CHECK(scaled.weights[0] == doctest::Approx(w.weights[0]).epsilon(1e-12));

  auto zero = combine_weighted(std::vector<double>{1, 2, 3, 6}, std::vector<double>{0, 0, 0, 0});
  CHECK(zero.value == doctest::Approx(3.0));

  CHECK_THROWS(combine_weighted(std::vector<double>{1, 2}, std::vector<double>{1}));
  CHECK_THROWS(combine_weighted(std::vector<double>{1, 2}, std::vector<double>{1, -1}));
}

TEST_CASE("weights are normalized and positive") {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 2 + rng.index(100);
    std::vector<double> y(m), e(m);
    for (std::size_t i = 0; i < m; ++i) {
      y[i] = rng.uniform(-10, 10);
      e[i] = rng.uniform() < 0.1 ? 0.0 : std::pow(10.0, rng.uniform(-8, 2));
    }
    auto w = combine_weighted(y, e);
    double total = 0.0;
    for (double wi : w.weights) {
      CHECK(wi > 0.0);
      total += wi;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("silverman bandwidth") {
  // Values with sample sd exactly 1: +-s for s chosen so sd = 1.
  std::vector<double> v(100);
  const double s = std::sqrt(99.0 / 100.0);
  for (std::size_t i = 0; i < 100; ++i) v[i] = i % 2 ? s : -s;
  CHECK(silverman_bandwidth(v) == doctest::Approx(0.42168460634274996).epsilon(1e-12));
  CHECK(silverman_bandwidth(std::vector<double>{2, 2, 2}) == 0.0);
  std::vector<double> doubled(v);
  for (double& x : doubled) x *= 2;
  CHECK(silverman_bandwidth(doubled) == doctest::Approx(2 * silverman_bandwidth(v)));
}

TEST_CASE("kde density") {
  CHECK(kde_density(std::vector<double>{0.0}, 1.0, 0.0) ==
        doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
  const std::vector<double> sym{-1.3, 1.3};
  for (double x : {0.1, 0.7, 2.5}) CHECK(kde_density(sym, 0.4, x) == doctest::Approx(kde_density(sym, 0.4, -x)));
  CHECK_THROWS(kde_density(sym, 0.0, 0.0));

  // Trapezoid quadrature over +-10h beyond the data.
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v = random_distribution(rng, 10 + rng.index(50));
    const double h = silverman_bandwidth(v);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo - 10 * h, b = *hi + 10 * h;
    const std::size_t n = 200000;
    const double dx = (b - a) / static_cast<double>(n);
    double integral = 0.5 * (kde_density(v, h, a) + kde_density(v, h, b));
    for (std::size_t i = 1; i < n; ++i) integral += kde_density(v, h, a + dx * static_cast<double>(i));
    CHECK(std::abs(integral * dx - 1.0) < 1e-3);
  }
}

TEST_CASE("mode combiner") {
  CHECK(combine_mode(std::vector<double>{3.25, 3.25, 3.25}) == 3.25);
  // Brute-force grid evaluation of the same estimator (numpy).
  CHECK(combine_mode(std::vector<double>{0, 0, 0, 10, 10}) ==
        doctest::Approx(0.5059365995995222).epsilon(1e-12));
}

TEST_CASE("mode resists a distant outlier, the average does not") {
  Rng rng(11);
  std::vector<double> v;
  for (int i = 0; i < 40; ++i) v.push_back(5.0 + rng.uniform(-0.2, 0.2));
  const double before = combine_mode(v);
  double sd = 0.0;
  const double mean = combine_average(v);
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / 39.0);
  v.push_back(*std::min_element(v.begin(), v.end()) - 100.0 * sd);
  const double h = silverman_bandwidth(v);
  CHECK(std::abs(combine_mode(v) - before) < h);
  CHECK(std::abs(combine_average(v) - mean) > 2.0 * sd);
}

TEST_CASE("histogram edges and membership") {
  auto h = build_histogram(std::vector<double>{0.0, 1.0, 2.5, 5.0}, 0.0, 5.0, 4);
  CHECK(h.counts == std::vector<std::size_t>{2, 0, 1, 1});
  CHECK(h.edge(4) == 5.0);
  CHECK(h.bin_of(1.25) == 1);
  CHECK(h.bin_of(5.0) == 3);
}

TEST_CASE("core search hand-traced example") {
  auto r = search_core_predictions(std::vector<double>{0.0, 0.1, 0.2, 5.0}, 0.5);
  CHECK(r.bins_used == 4);
  CHECK(r.core_values == std::vector<double>{0.0, 0.1, 0.2});
  CHECK(r.bin_low == 0.0);
  CHECK(r.bin_high == 1.25);
  CHECK(r.final_value == doctest::Approx(0.1));
  CHECK(r.core_variance == doctest::Approx(0.02 / 3.0));
  CHECK(core_prediction_variance(std::vector<double>{0.0, 0.1, 0.2, 5.0}, 0.5) ==
        doctest::Approx(0.02 / 3.0));
}

TEST_CASE("core search edge cases") {
  auto same = search_core_predictions(std::vector<double>{2.5, 2.5, 2.5, 2.5}, 0.2);
  CHECK(same.core_values.size() == 4);
  CHECK(same.final_value == 2.5);
  CHECK(same.core_variance == 0.0);

  const std::vector<double> v{1.0, 4.0, 4.2, 9.0, -3.0};
  auto all = search_core_predictions(v, 1.0);
  CHECK(all.bins_used == 1);
  CHECK(all.final_value == combine_average(v));

  CHECK_THROWS(search_core_predictions(std::vector<double>{1.0}, 0.2));
  CHECK_THROWS(search_core_predictions(v, 0.0));
  CHECK_THROWS(search_core_predictions(v, 1.5));
  CHECK(required_frequency(50, 0.2) == 10);
  CHECK(required_frequency(100, 0.3) == 30);
  CHECK(required_frequency(7, 0.2) == 2);
}

TEST_CASE("a far outlier outside the core leaves the core variance unchanged") {
  // Traced by hand: the cluster fills [1.125, 1.75) with 8 bins and
  // [0.667, 1.556) with 9 bins once 6.0 stretches the range.
  const std::vector<double> base{1.5, 1.52, 1.48, 1.51, 1.49, 1.53, 3.0, -2.0};
  const auto first = search_core_predictions(base, 0.5);
  const double before = first.core_variance;
  CHECK(first.core_values.size() == 6);
  std::vector<double> more = base;
  more.push_back(6.0);
  auto after = search_core_predictions(more, 0.5);
  CHECK(after.core_values == first.core_values);
  CHECK(after.core_variance == doctest::Approx(before));
}

TEST_CASE("tie between equally full bins prefers the one nearest the median") {
  // Two bins of three values each; the median sits nearer the right group.
  const std::vector<double> v{0.0, 0.05, 0.1, 9.9, 9.95, 10.0, 8.0};
  auto r = search_core_predictions(v, 0.4);
  for (double c : r.core_values) CHECK(c > 5.0);
}

TEST_CASE("core search matches the brute-force reference") {
  Rng rng(2024);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 10 + rng.index(191);
    auto v = random_distribution(rng, m);
    const double criterion = static_cast<double>(1 + rng.index(10)) / 10.0;
    const auto got = search_core_predictions(v, criterion);
    const auto want = oracle::reference_core_search(v, criterion);
    REQUIRE(got.core_indices == want.members);
    CHECK(got.final_value == want.final_value);
    CHECK(got.core_variance == want.variance);
    CHECK(got.bins_used == want.bins);
    CHECK(got.core_values.size() >= required_frequency(m, criterion));
    const auto [lo, hi] = std::minmax_element(got.core_values.begin(), got.core_values.end());
    CHECK(got.final_value >= *lo);
    CHECK(got.final_value <= *hi);
    for (double c : got.core_values) {
      CHECK(c >= got.bin_low);
      CHECK(c <= got.bin_high);
    }
  }
}
