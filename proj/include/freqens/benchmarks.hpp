#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "freqens/sampling.hpp"

namespace freqens {

/// Analytic test function with its rectangular domain.
struct BenchmarkProblem {
  std::string name;
  Domain domain;
  std::function<double(std::span<const double>)> evaluator;

  /// Throws std::invalid_argument naming the first out-of-domain dimension.
  double operator()(std::span<const double> x) const;
};

/// Six-hump-camel-like 2D function on [-3, 3]^2.
BenchmarkProblem camel2d();
/// Single-block Powell function on [0, 10]^4.
BenchmarkProblem powell4d();
/// Borehole flow rate, inputs ordered (r_w, r, T_u, H_u, T_l, H_l, L, K_w).
BenchmarkProblem borehole8d();

/// Looks up `camel2d`, `powell4d` or `borehole8d`.
BenchmarkProblem benchmark_by_name(const std::string& name);
std::vector<std::string> benchmark_names();

double camel2d_value(double x1, double x2);
double powell4d_value(std::span<const double> x);
double borehole_value(std::span<const double> x);

/// Root-mean-square error divided by the magnitude of the mean truth.
/// Throws std::domain_error when |mean truth| < 1e-12.
double nrmse(std::span<const double> truth, std::span<const double> predictions);

struct RelativeErrors {
  std::vector<double> percent;  // 100 |pred - y| / |y| per retained point
  std::size_t excluded = 0;     // points with |y| <= 1e-12
};

RelativeErrors relative_errors(std::span<const double> truth, std::span<const double> predictions);

double median(std::vector<double> values);

}  // namespace freqens
