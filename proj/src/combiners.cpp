#include "freqens/combiners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace freqens {

double FrequencyHistogram::edge(std::size_t b) const {
  if (b >= bin_count) return upper_edge;
  return lower_edge +
         (upper_edge - lower_edge) * (static_cast<double>(b) / static_cast<double>(bin_count));
}

std::size_t FrequencyHistogram::bin_of(double v) const {
  const double range = upper_edge - lower_edge;
  std::size_t b = 0;
  if (range > 0.0) {
    const double t = std::floor((v - lower_edge) / range * static_cast<double>(bin_count));
    if (t > 0.0) b = std::min(static_cast<std::size_t>(t), bin_count - 1);
  }
  // The floor estimate can be off by one near an edge; settle against the
  // edges themselves so membership matches [edge(b), edge(b + 1)).
  while (b + 1 < bin_count && v >= edge(b + 1)) ++b;
  while (b > 0 && v < edge(b)) --b;
  return b;
}

FrequencyHistogram build_histogram(std::span<const double> values, double lower, double upper,
                                   std::size_t bin_count) {
  if (bin_count == 0) throw std::invalid_argument("build_histogram: bin_count must be positive");
  if (upper < lower) throw std::invalid_argument("build_histogram: upper < lower");
  FrequencyHistogram h{lower, upper, bin_count, std::vector<std::size_t>(bin_count, 0)};
  for (double v : values) ++h.counts[h.bin_of(v)];
  return h;
}

std::size_t required_frequency(std::size_t m, double criterion) {
  if (!(criterion > 0.0 && criterion <= 1.0))
    throw std::invalid_argument("criterion must lie in (0, 1]");
  const double product = criterion * static_cast<double>(m);
  const auto need = static_cast<std::size_t>(std::ceil(product - 1e-9 * std::max(1.0, product)));
  return std::clamp<std::size_t>(need, 1, m);
}

double combine_average(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("combine_average: no values");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

WeightedResult combine_weighted(std::span<const double> values, std::span<const double> errors) {
  if (values.empty() || values.size() != errors.size())
    throw std::invalid_argument("combine_weighted: values and errors must match and be non-empty");
  for (double e : errors)
    if (!(e >= 0.0) || !std::isfinite(e))
      throw std::invalid_argument("combine_weighted: errors must be finite and non-negative");
  const auto m = values.size();
  const double e_avg = combine_average(errors);
  WeightedResult out;
  out.weights.resize(m);
  if (e_avg == 0.0) {
    std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(m));
  } else {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      out.weights[i] = 1.0 / (errors[i] + 0.05 * e_avg);
      total += out.weights[i];
    }
    for (double& w : out.weights) w /= total;
  }
  for (std::size_t i = 0; i < m; ++i) out.value += out.weights[i] * values[i];
  return out;
}

double silverman_bandwidth(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("silverman_bandwidth: need m >= 2");
  const auto m = static_cast<double>(values.size());
  const double mean = combine_average(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / (m - 1.0));
  return std::pow(4.0 / (3.0 * m), 0.2) * sigma;
}

double kde_density(std::span<const double> values, double h, double x) {
  if (!(h > 0.0)) throw std::invalid_argument("kde_density: bandwidth must be positive");
  if (values.empty()) throw std::invalid_argument("kde_density: no values");
  const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
  double sum = 0.0;
  for (double y : values) {
    const double u = (x - y) / h;
    sum += std::exp(-0.5 * u * u);
  }
  return norm * sum / static_cast<double>(values.size());
}

double combine_mode(std::span<const double> values) {
  const double h = silverman_bandwidth(values);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (h == 0.0) return *lo_it;
  constexpr std::size_t kGrid = 1024;
  const double lo = *lo_it - 3.0 * h;
  const double hi = *hi_it + 3.0 * h;
  double best_x = lo;
  double best_density = -1.0;
  for (std::size_t g = 0; g < kGrid; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(kGrid - 1);
    const double d = kde_density(values, h, x);
    if (d > best_density) {
      best_density = d;
      best_x = x;
    }
  }
  return best_x;
}

namespace {

// Mean clamped into [min, max]; rounding can otherwise put the mean of equal
// values one ulp away from them.
double clamped_mean(std::span<const double> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return std::clamp(combine_average(values), *lo, *hi);
}

double population_variance(std::span<const double> values, double mean) {
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

}  // namespace

double prediction_variance(std::span<const double> values) {
  return population_variance(values, clamped_mean(values));
}

CoreResult search_core_predictions(std::span<const double> values, double criterion) {
  const std::size_t m = values.size();
  if (m < 2) throw std::invalid_argument("search_core_predictions: need m >= 2");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("search_core_predictions: non-finite value");
  const std::size_t need = required_frequency(m, criterion);

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double mean = clamped_mean(values);

  CoreResult result;
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(mean))) {
    result.core_values.assign(values.begin(), values.end());
    result.core_indices.resize(m);
    std::iota(result.core_indices.begin(), result.core_indices.end(), std::size_t{0});
    result.bin_low = lo;
    result.bin_high = hi;
    result.final_value = mean;
    result.core_variance = population_variance(values, mean);
    result.bins_used = 1;
    return result;
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double med = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);

  std::vector<std::size_t> bin_index(m);
  for (std::size_t bins = m; bins >= 1; --bins) {
    FrequencyHistogram hist{lo, hi, bins, std::vector<std::size_t>(bins, 0)};
    for (std::size_t i = 0; i < m; ++i) {
      bin_index[i] = hist.bin_of(values[i]);
      ++hist.counts[bin_index[i]];
    }
    const std::size_t top = *std::max_element(hist.counts.begin(), hist.counts.end());
    if (top < need) continue;

    std::vector<double> sums(bins, 0.0);
    for (std::size_t i = 0; i < m; ++i) sums[bin_index[i]] += values[i];
    std::size_t chosen = bins;
    double chosen_distance = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bins; ++b) {
      if (hist.counts[b] != top) continue;
      const double distance = std::abs(sums[b] / static_cast<double>(top) - med);
      if (distance < chosen_distance) {
        chosen = b;
        chosen_distance = distance;
      }
    }

    for (std::size_t i = 0; i < m; ++i) {
      if (bin_index[i] != chosen) continue;
      result.core_indices.push_back(i);
      result.core_values.push_back(values[i]);
    }
    result.bin_low = hist.edge(chosen);
    result.bin_high = hist.edge(chosen + 1);
    result.final_value = clamped_mean(result.core_values);
    result.core_variance = population_variance(result.core_values, result.final_value);
    result.bins_used = bins;
    return result;
  }
  // bins == 1 always satisfies the criterion, since need <= m.
  throw std::logic_error("search_core_predictions: unreachable");
}

double core_prediction_variance(std::span<const double> values, double criterion) {
  return search_core_predictions(values, criterion).core_variance;
}

}  // namespace freqens
