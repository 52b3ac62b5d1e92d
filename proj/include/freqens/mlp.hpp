#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freqens/sampling.hpp"

namespace freqens {

/// Fully connected network: tanh hidden layers, one linear output.
struct Architecture {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_layers{8};

  /// Throws std::invalid_argument on zero widths or no hidden layer.
  void validate() const;
  std::size_t parameter_count() const;
  std::string describe() const;  // e.g. "2-8-1"

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_out x fan_in
  Eigen::VectorXd bias;     // fan_out
};

/// Layers in feed-forward order; the last one is the linear output layer.
/// Flattened order is, per layer, the weights row-major and then the bias.
struct MlpParameters {
  std::vector<DenseLayer> layers;

  std::size_t size() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  bool conforms_to(const Architecture& arch) const;
  bool all_finite() const;
};

/// Borrowed training data in network units.
struct DataView {
  std::span<const Point> inputs;
  std::span<const double> targets;

  std::size_t size() const { return inputs.size(); }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
MlpParameters init_parameters(const Architecture& arch, std::uint64_t seed);

/// Throws std::invalid_argument on a wrong-length or non-finite input.
double forward(const MlpParameters& params, std::span<const double> x);

/// Outputs for a batch of inputs, without per-call validation.
Eigen::VectorXd forward_batch(const MlpParameters& params, std::span<const Point> inputs);

/// d(output_k)/d(theta) for every input k; one row per input, one column per
/// flattened parameter. Equal to the residual Jacobian since targets are fixed.
Eigen::MatrixXd jacobian(const MlpParameters& params, std::span<const Point> inputs);

double mean_squared_error(const MlpParameters& params, DataView data);

struct LmConfig {
  std::size_t max_iterations = 1000;
  double initial_damping = 1e-3;
  double damping_decrease = 0.1;
  double damping_increase = 10.0;
  double max_damping = 1e10;
  /// Consecutive iterations without validation improvement before stopping.
  std::size_t max_validation_failures = 6;
  double goal = 0.0;
  double min_gradient = 1e-10;
};

struct TrainReport {
  double final_train_mse = 0.0;
  double final_val_mse = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string stop_reason;
  /// Training MSE after the initial evaluation and after every accepted step.
  std::vector<double> train_loss_history;
};

struct TrainResult {
  MlpParameters params;
  TrainReport report;
};

/// Levenberg-Marquardt on the mean squared error. Returns the parameters with
/// the lowest validation MSE seen during the run, not the last iterate.
TrainResult train_levenberg_marquardt(const Architecture& arch, MlpParameters init,
                                      DataView train, DataView val,
                                      const LmConfig& config = {});

}  // namespace freqens
