#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace freqens {

using Point = std::vector<double>;

/// Axis-aligned box [lower, upper] in R^dim.
class Domain {
 public:
  Domain(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double width(std::size_t j) const { return upper_[j] - lower_[j]; }

  bool contains(std::span<const double> x) const;
  /// Index of the first coordinate outside its bounds, or dim() if none.
  std::size_t first_violation(std::span<const double> x) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Input points paired with scalar responses over a domain.
struct Dataset {
  Domain domain;
  std::vector<Point> points;
  std::vector<double> responses;

  std::size_t size() const { return points.size(); }
  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
  void append(Point x, double y);
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Affine maps between physical and network units. Inputs go to [-1, 1]
/// using the domain bounds; outputs are standardized over the dataset.
struct Scaler {
  std::vector<double> input_offset;
  std::vector<double> input_scale;
  double output_offset = 0.0;
  double output_scale = 1.0;
  bool constant_response = false;

  Point scale_input(std::span<const double> x) const;
  Point unscale_input(std::span<const double> z) const;
  double scale_output(double y) const { return (y - output_offset) / output_scale; }
  double unscale_output(double z) const { return output_offset + output_scale * z; }
};

/// Latin hypercube design: each of the n equal-width intervals of every axis
/// holds exactly one coordinate, placed uniformly within its interval.
std::vector<Point> lhs_sample(const Domain& domain, std::size_t n, std::uint64_t seed);

/// n points drawn independently and uniformly over the domain.
std::vector<Point> uniform_sample(const Domain& domain, std::size_t n, std::uint64_t seed);

/// Random train/validation partition with |train| = round(train_ratio * n).
SplitIndices random_split(std::size_t n, double train_ratio, std::uint64_t seed);

Scaler fit_scaler(const Dataset& dataset);

/// CSV with header x1..xd,y and one sample per row.
void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path, const Domain& domain);

/// Reads the x1..xd columns of a CSV with a header row. A trailing y column,
/// if present, is ignored.
std::vector<Point> load_points_csv(const std::filesystem::path& path, std::size_t dim);

}  // namespace freqens
