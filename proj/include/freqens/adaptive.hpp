#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "freqens/ensemble.hpp"
#include "freqens/sampling.hpp"

namespace freqens {

enum class Strategy { core_variance, prediction_variance, ilhs };

std::string to_string(Strategy s);
/// Accepts "core_variance", "prediction_variance" or "ilhs".
Strategy strategy_from_string(const std::string& name);

enum class ScoreMode { prediction_variance, core_variance };

/// Candidate points for one acquisition step.
struct Population {
  std::vector<Point> candidates;
  std::uint64_t seed = 0;
  std::string method = "lhs";
};

Population generate_population(const Domain& domain, std::size_t size, std::uint64_t seed);

/// Seed of the population drawn at a (1-based) adaptive iteration.
std::uint64_t population_seed(std::uint64_t loop_seed, std::size_t iteration);

/// Acquisition score per candidate: the variance of all m predictions, or
/// the core prediction variance under `criterion`.
std::vector<double> score_population(const Ensemble& ensemble, const Population& population,
                                     ScoreMode mode, double criterion);

struct Selection {
  std::size_t index = 0;
  Point point;
};

/// Argmax over the finite scores, lowest index on ties. NaN marks a candidate
/// as excluded. Throws when no score is finite.
Selection select_next_sample(std::span<const double> scores, const Population& population);

/// Incremental LHS: regrids every axis into n + 1 intervals for n existing
/// points and draws the new coordinate inside a randomly chosen interval
/// that holds no existing coordinate.
Point ilhs_augment(std::span<const Point> existing, const Domain& domain, std::uint64_t seed);

struct AdaptiveConfig {
  Strategy strategy = Strategy::core_variance;
  std::size_t budget = 20;
  std::size_t population_size = 5000;
  double criterion = 0.2;
  EnsembleConfig ensemble;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdaptiveRecord {
  std::size_t iteration = 0;  // 1-based
  Point point;
  double criterion_value = 0.0;  // NaN for iLHS
  std::size_t n_samples = 0;     // dataset size after adding the point
  double nrmse = 0.0;            // frequency-ensemble NRMSE after retraining
  double median_relative_error = 0.0;  // percent
};

struct AdaptiveHistory {
  Strategy strategy = Strategy::core_variance;
  std::uint64_t seed = 0;
  std::size_t initial_samples = 0;
  double initial_nrmse = 0.0;
  double initial_median_relative_error = 0.0;
  std::vector<AdaptiveRecord> records;
  bool aborted = false;
  std::string error;
};

/// Test points with their true responses, shared across strategies.
struct TestSet {
  std::vector<Point> points;
  std::vector<double> truth;
};

using TrueFunction = std::function<double(std::span<const double>)>;

/// Sequential sampling loop: build the ensemble, pick one point by the
/// configured strategy, evaluate it, append it, retrain and score on the
/// test set. A failing true-function evaluation stops the loop and keeps
/// the records collected so far.
AdaptiveHistory run_adaptive_loop(Dataset dataset, const TrueFunction& truth,
                                  const Architecture& arch, const AdaptiveConfig& config,
                                  const TestSet& test);

/// Frequency-ensemble predictions for a batch of points.
std::vector<double> predict_frequency(const Ensemble& ensemble, std::span<const Point> points,
                                      double criterion);

/// Columns: iteration,n_samples,x1..xd,criterion_value,nrmse. Row 0 carries
/// the initial NRMSE with nan point and criterion fields.
void save_history_csv(const AdaptiveHistory& history, std::size_t dim,
                      const std::filesystem::path& path);

}  // namespace freqens
