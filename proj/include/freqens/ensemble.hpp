#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "freqens/mlp.hpp"
#include "freqens/sampling.hpp"

namespace freqens {

/// One trained network, kept as the best of its retries on one split.
struct ComponentModel {
  MlpParameters params;
  double train_error = 0.0;  // MSE in scaled output units
  double val_error = 0.0;
  std::size_t combination_index = 0;
  std::uint64_t seed = 0;  // initialization seed of the kept retry
  bool converged = true;

  double error_sum() const { return train_error + val_error; }
};

struct EnsembleConfig {
  std::size_t m = 50;
  std::size_t retries = 20;
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
  LmConfig lm;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct Ensemble {
  Architecture architecture;
  Scaler scaler;
  Domain domain;
  EnsembleConfig config;
  std::vector<ComponentModel> components;
  /// Combinations where no retry converged; the lowest-error one was kept.
  std::vector<std::size_t> unconverged_combinations;

  std::size_t size() const { return components.size(); }
  /// Per-component train + validation error, for the weighted combiner.
  std::vector<double> component_errors() const;
};

/// The m predictions at one query point, in original response units.
struct PredictionDistribution {
  Point point;
  std::vector<double> values;
  bool outside_domain = false;
};

/// Single-hidden-layer candidates of widths {2, 4, 8, 16, 32}.
std::vector<Architecture> default_candidates(std::size_t input_dim);

struct SelectionConfig {
  std::size_t k_splits = 5;
  std::size_t retries = 5;
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
  LmConfig lm;
  unsigned threads = 0;
};

struct ArchitectureScore {
  Architecture architecture;
  double score = 0.0;  // mean over splits of the best (train + val) error
};

/// Scores every candidate on the same k random splits and returns the one
/// with the lowest mean best-of-retries error. Near-equal scores favour
/// the candidate with fewer parameters.
Architecture select_architecture(const Dataset& dataset, std::span<const Architecture> candidates,
                                 const SelectionConfig& config,
                                 std::vector<ArchitectureScore>* scores = nullptr);

/// Trains m components, each the best of `retries` initializations on its
/// own random train/validation split. Seeds derive from (seed, combination,
/// retry), so the result does not depend on the thread count.
Ensemble prepare_ensemble(const Dataset& dataset, const Architecture& arch,
                          const EnsembleConfig& config);

PredictionDistribution predict_distribution(const Ensemble& ensemble, std::span<const double> x);

/// Predictions for many points at once: row k holds the m values at points[k].
Eigen::MatrixXd predict_matrix(const Ensemble& ensemble, std::span<const Point> points);

/// Directory layout: manifest.json plus component_NNN.json per component.
void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& dir);
Ensemble load_ensemble(const std::filesystem::path& dir);

}  // namespace freqens
