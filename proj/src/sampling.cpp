#include "freqens/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "freqens/format.hpp"
#include "freqens/rng.hpp"

namespace freqens {

Domain::Domain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty()) throw std::invalid_argument("Domain: dimension must be positive");
  if (lower_.size() != upper_.size())
    throw std::invalid_argument("Domain: lower and upper bounds differ in length");
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (!(lower_[j] < upper_[j]) || !std::isfinite(lower_[j]) || !std::isfinite(upper_[j]))
      throw std::invalid_argument("Domain: need finite lower < upper in dimension " +
                                  std::to_string(j + 1));
  }
}

std::size_t Domain::first_violation(std::span<const double> x) const {
  if (x.size() != dim()) return 0;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (!(x[j] >= lower_[j] && x[j] <= upper_[j])) return j;
  }
  return dim();
}

bool Domain::contains(std::span<const double> x) const {
  return x.size() == dim() && first_violation(x) == dim();
}

void Dataset::validate() const {
  if (points.size() != responses.size())
    throw std::invalid_argument("Dataset: points and responses differ in length");
  if (points.size() < 2) throw std::invalid_argument("Dataset: need at least 2 samples");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!domain.contains(points[k]))
      throw std::invalid_argument("Dataset: sample " + std::to_string(k) + " outside domain");
    if (!std::isfinite(responses[k]))
      throw std::invalid_argument("Dataset: non-finite response at sample " + std::to_string(k));
  }
}

void Dataset::append(Point x, double y) {
  points.push_back(std::move(x));
  responses.push_back(y);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{domain, {}, {}};
  out.points.reserve(indices.size());
  out.responses.reserve(indices.size());
  for (std::size_t i : indices) out.append(points.at(i), responses.at(i));
  return out;
}

Point Scaler::scale_input(std::span<const double> x) const {
  Point z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - input_offset[j]) / input_scale[j];
  return z;
}

Point Scaler::unscale_input(std::span<const double> z) const {
  Point x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = input_offset[j] + input_scale[j] * z[j];
  return x;
}

namespace {

std::size_t interval_of(double x, double lo, double hi, std::size_t n) {
  double t = (x - lo) / (hi - lo) * static_cast<double>(n);
  if (t <= 0.0) return 0;
  auto k = static_cast<std::size_t>(std::floor(t));
  return std::min(k, n - 1);
}

}  // namespace

std::vector<Point> lhs_sample(const Domain& domain, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("lhs_sample: n must be positive");
  Rng rng(seed);
  std::vector<Point> points(n, Point(domain.dim()));
  for (std::size_t j = 0; j < domain.dim(); ++j) {
    const double lo = domain.lower()[j];
    const double hi = domain.upper()[j];
    std::vector<std::size_t> cells = rng.permutation(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double k = static_cast<double>(cells[i]);
      double x = lo + (hi - lo) * (k + rng.uniform()) / static_cast<double>(n);
      // Rounding can push a draw onto the next interval's edge.
      if (interval_of(x, lo, hi, n) != cells[i]) x = lo + (hi - lo) * (k + 0.5) / static_cast<double>(n);
      points[i][j] = x;
    }
  }
  return points;
}

std::vector<Point> uniform_sample(const Domain& domain, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> points(n, Point(domain.dim()));
  for (auto& p : points)
    for (std::size_t j = 0; j < domain.dim(); ++j)
      p[j] = rng.uniform(domain.lower()[j], domain.upper()[j]);
  return points;
}

SplitIndices random_split(std::size_t n, double train_ratio, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("random_split: need at least 2 samples");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw std::invalid_argument("random_split: train_ratio must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n)
    throw std::invalid_argument("random_split: ratio leaves an empty partition");
  Rng rng(seed);
  std::vector<std::size_t> order = rng.permutation(n);
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

Scaler fit_scaler(const Dataset& dataset) {
  dataset.validate();
  Scaler s;
  const Domain& d = dataset.domain;
  s.input_offset.resize(d.dim());
  s.input_scale.resize(d.dim());
  for (std::size_t j = 0; j < d.dim(); ++j) {
    s.input_offset[j] = 0.5 * (d.lower()[j] + d.upper()[j]);
    s.input_scale[j] = 0.5 * (d.upper()[j] - d.lower()[j]);
  }
  const auto n = static_cast<double>(dataset.size());
  const double mean = std::accumulate(dataset.responses.begin(), dataset.responses.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : dataset.responses) ss += (y - mean) * (y - mean);
  const double sd = std::sqrt(ss / n);
  s.output_offset = mean;
  if (sd < 1e-12) {
    s.output_scale = 1.0;
    s.constant_response = true;
  } else {
    s.output_scale = sd;
  }
  return s;
}

void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t j = 0; j < dataset.domain.dim(); ++j) out << 'x' << j + 1 << ',';
  out << "y\n";
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    for (double v : dataset.points[k]) out << format_double(v) << ',';
    out << format_double(dataset.responses[k]) << '\n';
  }
}

namespace {

std::vector<std::vector<double>> read_numeric_rows(const std::filesystem::path& path,
                                                   std::size_t& columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header row");
  columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": bad number '" + cell + "'");
      }
    }
    if (row.size() != columns)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(columns) + " columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Dataset load_dataset_csv(const std::filesystem::path& path, const Domain& domain) {
  std::size_t columns = 0;
  auto rows = read_numeric_rows(path, columns);
  if (columns != domain.dim() + 1)
    throw std::runtime_error(path.string() + ": expected columns x1..x" +
                             std::to_string(domain.dim()) + ",y");
  Dataset data{domain, {}, {}};
  for (auto& row : rows) {
    double y = row.back();
    row.pop_back();
    data.append(std::move(row), y);
  }
  data.validate();
  return data;
}

std::vector<Point> load_points_csv(const std::filesystem::path& path, std::size_t dim) {
  std::size_t columns = 0;
  auto rows = read_numeric_rows(path, columns);
  if (columns != dim && columns != dim + 1)
    throw std::runtime_error(path.string() + ": expected " + std::to_string(dim) + " input columns");
  for (auto& row : rows) row.resize(dim);
  return rows;
}

}  // namespace freqens
