#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freqens/adaptive.hpp"
#include "freqens/ensemble.hpp"

namespace freqens {

enum class Method { average, weighted, mode, frequency };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct ExperimentConfig {
  std::string problem = "camel2d";
  std::size_t n_train = 50;
  std::size_t n_test = 500;

  std::size_t m = 50;
  std::size_t retries = 20;
  double train_ratio = 0.8;
  /// Hidden-layer width lists; empty means the default single-layer set.
  std::vector<std::vector<std::size_t>> candidates;
  std::size_t selection_splits = 5;
  std::size_t selection_retries = 5;
  LmConfig lm;

  double criterion = 0.2;
  std::vector<Method> methods{Method::average, Method::weighted, Method::mode, Method::frequency};
  std::vector<double> criteria{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  std::vector<Strategy> strategies{Strategy::core_variance, Strategy::prediction_variance,
                                   Strategy::ilhs};
  std::size_t budget = 20;
  std::size_t population_size = 5000;

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  unsigned threads = 0;
  std::filesystem::path output_dir = "results";
  bool save_ensembles = false;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
  std::vector<Architecture> candidate_architectures(std::size_t input_dim) const;
};

/// Parses a JSON config; missing fields keep their defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

struct ReportRow {
  std::string problem;
  std::string method;     // combiner name or adaptive strategy
  double criterion = 0.0; // NaN when the method has none
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  double nrmse = 0.0;
  double median_relative_error = 0.0;
  double wall_seconds = 0.0;
};

/// Per-test-point predictions of one seed, for box plots.
struct PredictionTable {
  std::uint64_t seed = 0;
  std::vector<Point> points;
  std::vector<double> truth;
  std::vector<Method> methods;
  std::vector<std::vector<double>> predictions;  // [method][point]
};

struct SeedFailure {
  std::uint64_t seed = 0;
  std::string message;
};

struct StudyResult {
  std::vector<ReportRow> rows;
  std::vector<PredictionTable> predictions;
  std::vector<AdaptiveHistory> histories;
  std::vector<SeedFailure> failures;

  bool ok() const { return failures.empty(); }
};

/// Seeded training and test sets for one experiment seed.
struct ProblemData {
  Dataset train;
  TestSet test;
};

ProblemData make_problem_data(const ExperimentConfig& config, std::uint64_t seed);

StudyResult run_method_comparison(const ExperimentConfig& config);
StudyResult run_criterion_sweep(const ExperimentConfig& config);
StudyResult run_adaptive_study(const ExperimentConfig& config);

/// Creates the directory and checks it is writable.
void prepare_output_dir(const std::filesystem::path& dir);

/// Writes summary.csv, timing.csv, config_echo.json and, when present,
/// predictions.csv and adaptive_<strategy>_<seed>.csv. Everything except
/// timing.csv is a deterministic function of the config.
void emit_report(const StudyResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir);

}  // namespace freqens
