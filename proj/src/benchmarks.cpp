#include "freqens/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace freqens {

double BenchmarkProblem::operator()(std::span<const double> x) const {
  if (x.size() != domain.dim())
    throw std::invalid_argument(name + ": expected " + std::to_string(domain.dim()) +
                                " inputs, got " + std::to_string(x.size()));
  const std::size_t bad = domain.first_violation(x);
  if (bad != domain.dim())
    throw std::invalid_argument(name + ": x" + std::to_string(bad + 1) + " = " +
                                std::to_string(x[bad]) + " outside [" +
                                std::to_string(domain.lower()[bad]) + ", " +
                                std::to_string(domain.upper()[bad]) + "]");
  return evaluator(x);
}

double camel2d_value(double x1, double x2) {
  const double x1_2 = x1 * x1;
  return 2.0 * x1_2 - 1.05 * x1_2 * x1_2 + x1_2 * x1_2 * x1_2 / 6.0 + x1 * x2 + x2 * x2;
}

double powell4d_value(std::span<const double> x) {
  const double a = x[0] + 10.0 * x[1];
  const double b = x[2] - x[3];
  const double c = x[1] - 2.0 * x[2];
  const double d = x[0] - x[3];
  return a * a + 5.0 * b * b + std::pow(c, 6) + 10.0 * std::pow(d, 4);
}

double borehole_value(std::span<const double> x) {
  const double rw = x[0], r = x[1], tu = x[2], hu = x[3];
  const double tl = x[4], hl = x[5], len = x[6], kw = x[7];
  const double log_ratio = std::log(r / rw);
  const double denom = log_ratio * (1.0 + 2.0 * len * tu / (log_ratio * rw * rw * kw) + tu / tl);
  return 2.0 * std::numbers::pi * tu * (hu - hl) / denom;
}

BenchmarkProblem camel2d() {
  return {"camel2d", Domain({-3.0, -3.0}, {3.0, 3.0}),
          [](std::span<const double> x) { return camel2d_value(x[0], x[1]); }};
}

BenchmarkProblem powell4d() {
  return {"powell4d", Domain(std::vector<double>(4, 0.0), std::vector<double>(4, 10.0)),
          powell4d_value};
}

BenchmarkProblem borehole8d() {
  return {"borehole8d",
          Domain({0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 1500.0},
                 {2.0, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 2680.0, 30000.0}),
          borehole_value};
}

std::vector<std::string> benchmark_names() { return {"camel2d", "powell4d", "borehole8d"}; }

BenchmarkProblem benchmark_by_name(const std::string& name) {
  if (name == "camel2d") return camel2d();
  if (name == "powell4d") return powell4d();
  if (name == "borehole8d") return borehole8d();
  throw std::invalid_argument("unknown benchmark '" + name +
                              "' (expected camel2d, powell4d or borehole8d)");
}

double nrmse(std::span<const double> truth, std::span<const double> predictions) {
  if (truth.empty() || truth.size() != predictions.size())
    throw std::invalid_argument("nrmse: need equal, non-empty lengths");
  double sum = 0.0, ss = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    sum += truth[k];
    const double e = truth[k] - predictions[k];
    ss += e * e;
  }
  const auto n = static_cast<double>(truth.size());
  const double mean = sum / n;
  if (std::abs(mean) < 1e-12) throw std::domain_error("nrmse: mean of truth is zero");
  return std::sqrt(ss / n) / std::abs(mean);
}

RelativeErrors relative_errors(std::span<const double> truth, std::span<const double> predictions) {
  if (truth.size() != predictions.size())
    throw std::invalid_argument("relative_errors: length mismatch");
  RelativeErrors out;
  out.percent.reserve(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (std::abs(truth[k]) <= 1e-12) {
      ++out.excluded;
      continue;
    }
    out.percent.push_back(100.0 * std::abs(predictions[k] - truth[k]) / std::abs(truth[k]));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace freqens
