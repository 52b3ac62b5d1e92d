#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace freqens {

/// Equal-width histogram over [lower_edge, upper_edge]. Bins are half-open
/// [low, high) except the last, which also holds upper_edge.
struct FrequencyHistogram {
  double lower_edge = 0.0;
  double upper_edge = 0.0;
  std::size_t bin_count = 1;
  std::vector<std::size_t> counts;

  /// Edge b of bin_count + 1; edge(bin_count) is exactly upper_edge.
  double edge(std::size_t b) const;
  /// Bin holding v, for v within [lower_edge, upper_edge].
  std::size_t bin_of(double v) const;
};

FrequencyHistogram build_histogram(std::span<const double> values, double lower, double upper,
                                   std::size_t bin_count);

/// Outcome of the core prediction value search at one query point.
struct CoreResult {
  std::vector<double> core_values;       // in original order
  std::vector<std::size_t> core_indices; // positions within the input values
  double bin_low = 0.0;
  double bin_high = 0.0;
  double final_value = 0.0;
  double core_variance = 0.0;  // population variance of core_values
  std::size_t bins_used = 1;
};

struct WeightedResult {
  double value = 0.0;
  std::vector<double> weights;
};

/// Minimum count the most frequent bin must reach: ceil(criterion * m),
/// with the product rounded to absorb representation error (0.2 * 50 -> 10).
std::size_t required_frequency(std::size_t m, double criterion);

double combine_average(std::span<const double> values);

/// Inverse-error weights w_i ~ 1 / (e_i + 0.05 * mean(e)), normalized to sum
/// to one. Falls back to uniform weights when every e_i is zero.
WeightedResult combine_weighted(std::span<const double> values, std::span<const double> errors);

/// (4 / (3m))^(1/5) times the sample standard deviation; zero for constant input.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian kernel density estimate at x with bandwidth h > 0.
double kde_density(std::span<const double> values, double h, double x);

/// Argmax of the KDE over 1024 grid points spanning [min - 3h, max + 3h].
/// Equal densities resolve to the lower x.
double combine_mode(std::span<const double> values);

/// Frequency-distribution core search. Starts with one bin per value over
/// [min, max] and removes one bin at a time until the most frequent bin holds
/// at least required_frequency(m, criterion) values. Among equally frequent
/// bins, the one whose member mean is closest to the median of all values
/// wins, then the leftmost.
CoreResult search_core_predictions(std::span<const double> values, double criterion);

double core_prediction_variance(std::span<const double> values, double criterion);

/// Population variance of all values.
double prediction_variance(std::span<const double> values);

}  // namespace freqens
