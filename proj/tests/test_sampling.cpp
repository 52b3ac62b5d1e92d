#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"

#include "freqens/rng.hpp"
#include "freqens/sampling.hpp"

using namespace freqens;

namespace {

// Occupancy by direct interval counting, independent of the sampler.
bool latin_occupancy_holds(const std::vector<Point>& pts, const Domain& d) {
  const std::size_t n = pts.size();
  for (std::size_t j = 0; j < d.dim(); ++j) {
    std::vector<int> count(n, 0);
    const double w = d.width(j) / static_cast<double>(n);
    for (const auto& p : pts) {
      for (std::size_t c = 0; c < n; ++c) {
        const double lo = d.lower()[j] + w * static_cast<double>(c);
        const double hi = c + 1 == n ? d.upper()[j] : lo + w;
        if (p[j] >= lo && (p[j] < hi || (c + 1 == n && p[j] <= hi))) {
          ++count[c];
          break;
        }
      }
    }
    if (!std::all_of(count.begin(), count.end(), [](int k) { return k == 1; })) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("domain rejects inverted or mismatched bounds") {
  CHECK_THROWS_AS(Domain({1.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Domain({0.0, 0.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Domain({}, {}), std::invalid_argument);
  Domain d({0.0, -1.0}, {1.0, 1.0});
  CHECK(d.contains(Point{1.0, -1.0}));
  CHECK_FALSE(d.contains(Point{1.5, 0.0}));
  CHECK(d.first_violation(Point{0.5, 2.0}) == 1);
}

TEST_CASE("lhs with two points splits the unit interval") {
  Domain d({0.0}, {1.0});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto pts = lhs_sample(d, 2, seed);
    REQUIRE(pts.size() == 2);
    const double a = std::min(pts[0][0], pts[1][0]);
    const double b = std::max(pts[0][0], pts[1][0]);
    CHECK(a >= 0.0);
    CHECK(a < 0.5);
    CHECK(b >= 0.5);
    CHECK(b < 1.0);
  }
}

TEST_CASE("lhs occupancy on [-3,3]^2 with 50 points") {
  Domain d({-3.0, -3.0}, {3.0, 3.0});
  auto pts = lhs_sample(d, 50, 7);
  REQUIRE(pts.size() == 50);
  CHECK(latin_occupancy_holds(pts, d));
  CHECK(pts == lhs_sample(d, 50, 7));
  CHECK(pts != lhs_sample(d, 50, 8));
}

TEST_CASE("lhs occupancy property over random domains") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng.index(5);
    const std::size_t n = 1 + rng.index(80);
    std::vector<double> lo(dim), hi(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = rng.uniform(-100.0, 100.0);
      hi[j] = lo[j] + rng.uniform(1e-3, 1e4);
    }
    Domain d(lo, hi);
    auto pts = lhs_sample(d, n, static_cast<std::uint64_t>(trial));
    for (const auto& p : pts) REQUIRE(d.contains(p));
    REQUIRE(latin_occupancy_holds(pts, d));
  }
}

TEST_CASE("random split sizes and determinism") {
  auto s = random_split(10, 0.8, 1);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 2);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);

  auto again = random_split(10, 0.8, 1);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);

  auto pair = random_split(2, 0.5, 0);
  CHECK(pair.train.size() == 1);
  CHECK(pair.validation.size() == 1);
  CHECK(pair.train[0] != pair.validation[0]);
}

TEST_CASE("random split rejects empty partitions") {
  CHECK_THROWS_AS(random_split(10, 0.99, 0), std::invalid_argument);
  CHECK_THROWS_AS(random_split(10, 0.01, 0), std::invalid_argument);
  CHECK_THROWS_AS(random_split(10, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(random_split(1, 0.5, 0), std::invalid_argument);
}

TEST_CASE("different seeds give different splits") {
  int distinct = 0;
  const auto base = random_split(20, 0.8, 0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    distinct += random_split(20, 0.8, seed).train != base.train ? 1 : 0;
  CHECK(distinct == 20);
}

TEST_CASE("scaler offsets and constant responses") {
  Domain d({0.0}, {4.0});
  Dataset data{d, {{0.0}, {4.0}}, {0.0, 2.0}};
  Scaler s = fit_scaler(data);
  CHECK(s.output_offset == doctest::Approx(1.0));
  CHECK(s.output_scale == doctest::Approx(1.0));
  CHECK(s.scale_input(Point{0.0})[0] == -1.0);
  CHECK(s.scale_input(Point{4.0})[0] == 1.0);
  CHECK_FALSE(s.constant_response);

  Dataset flat{d, {{1.0}, {2.0}, {3.0}}, {5.0, 5.0, 5.0}};
  Scaler f = fit_scaler(flat);
  CHECK(f.constant_response);
  CHECK(f.output_scale == 1.0);
  CHECK(f.scale_output(5.0) == 0.0);
}

TEST_CASE("scaler round trip is identity") {
  Domain d({-3.0, 100.0, 0.05}, {3.0, 50000.0, 2.0});
  Dataset data{d, uniform_sample(d, 30, 4), {}};
  for (const auto& p : data.points) data.responses.push_back(p[0] * p[1] + p[2]);
  Scaler s = fit_scaler(data);
  double worst = 0.0;
  for (const auto& p : uniform_sample(d, 100, 5)) {
    Point back = s.unscale_input(s.scale_input(p));
    for (std::size_t j = 0; j < p.size(); ++j)
      worst = std::max(worst, std::abs(back[j] - p[j]) / std::max(1.0, std::abs(p[j])));
    const double y = p[0] * p[1];
    worst = std::max(worst, std::abs(s.unscale_output(s.scale_output(y)) - y) / std::max(1.0, std::abs(y)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("dataset csv round trip") {
  Domain d({-1.0, 0.0}, {1.0, 2.0});
  Dataset data{d, lhs_sample(d, 12, 3), {}};
  for (const auto& p : data.points) data.responses.push_back(std::sin(p[0]) + p[1] / 3.0);
  const auto path = std::filesystem::temp_directory_path() / "freqens_dataset_test.csv";
  save_dataset_csv(data, path);
  Dataset back = load_dataset_csv(path, d);
  CHECK(back.points == data.points);
  CHECK(back.responses == data.responses);
  CHECK(load_points_csv(path, 2) == data.points);
  std::filesystem::remove(path);
}

TEST_CASE("dataset validation") {
  Domain d({0.0}, {1.0});
  CHECK_THROWS_AS((Dataset{d, {{0.5}}, {1.0}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((Dataset{d, {{0.5}, {2.0}}, {1.0, 2.0}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((Dataset{d, {{0.5}, {0.2}}, {1.0}}).validate(), std::invalid_argument);
  CHECK_NOTHROW((Dataset{d, {{0.5}, {0.2}}, {1.0, 3.0}}).validate());
}
