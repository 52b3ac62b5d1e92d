#include "freqens/mlp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "freqens/rng.hpp"

namespace freqens {

void Architecture::validate() const {
  if (input_dim == 0) throw std::invalid_argument("Architecture: input_dim must be positive");
  if (hidden_layers.empty())
    throw std::invalid_argument("Architecture: need at least one hidden layer");
  for (std::size_t w : hidden_layers)
    if (w == 0) throw std::invalid_argument("Architecture: hidden widths must be positive");
}

std::size_t Architecture::parameter_count() const {
  std::size_t total = 0;
  std::size_t fan_in = input_dim;
  for (std::size_t w : hidden_layers) {
    total += w * fan_in + w;
    fan_in = w;
  }
  return total + fan_in + 1;
}

std::string Architecture::describe() const {
  std::string s = std::to_string(input_dim);
  for (std::size_t w : hidden_layers) s += "-" + std::to_string(w);
  return s + "-1";
}

std::size_t MlpParameters::size() const {
  std::size_t total = 0;
  for (const auto& l : layers) total += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return total;
}

Eigen::VectorXd MlpParameters::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index pos = 0;
  for (const auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) flat[pos++] = l.weights(i, j);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat[pos++] = l.bias[i];
  }
  return flat;
}

void MlpParameters::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != size())
    throw std::invalid_argument("MlpParameters::assign: length mismatch");
  Eigen::Index pos = 0;
  for (auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) l.weights(i, j) = flat[pos++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = flat[pos++];
  }
}

bool MlpParameters::conforms_to(const Architecture& arch) const {
  if (layers.size() != arch.hidden_layers.size() + 1) return false;
  std::size_t fan_in = arch.input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t fan_out = l < arch.hidden_layers.size() ? arch.hidden_layers[l] : 1;
    const auto& layer = layers[l];
    if (static_cast<std::size_t>(layer.weights.rows()) != fan_out ||
        static_cast<std::size_t>(layer.weights.cols()) != fan_in ||
        static_cast<std::size_t>(layer.bias.size()) != fan_out)
      return false;
    fan_in = fan_out;
  }
  return true;
}

bool MlpParameters::all_finite() const {
  for (const auto& l : layers)
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

MlpParameters init_parameters(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  MlpParameters p;
  std::size_t fan_in = arch.input_dim;
  auto add_layer = [&](std::size_t fan_out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
        layer.weights(i, j) = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (std::size_t w : arch.hidden_layers) add_layer(w);
  add_layer(1);
  return p;
}

namespace {

Eigen::MatrixXd stack_inputs(std::span<const Point> inputs, Eigen::Index dim) {
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t k = 0; k < inputs.size(); ++k)
    for (Eigen::Index j = 0; j < dim; ++j) x(j, static_cast<Eigen::Index>(k)) = inputs[k][j];
  return x;
}

// activations[0] is the input batch; activations[l + 1] is the output of layer l.
std::vector<Eigen::MatrixXd> propagate(const MlpParameters& p, std::span<const Point> inputs) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(p.layers.size() + 1);
  acts.push_back(stack_inputs(inputs, p.layers.front().weights.cols()));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    Eigen::MatrixXd z = layer.weights * acts.back();
    z.colwise() += layer.bias;
    if (l + 1 < p.layers.size()) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

double forward(const MlpParameters& params, std::span<const double> x) {
  const auto dim = static_cast<std::size_t>(params.layers.front().weights.cols());
  if (x.size() != dim)
    throw std::invalid_argument("forward: expected " + std::to_string(dim) + " inputs, got " +
                                std::to_string(x.size()));
  Eigen::VectorXd a(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < dim; ++j) {
    if (!std::isfinite(x[j])) throw std::invalid_argument("forward: non-finite input");
    a[static_cast<Eigen::Index>(j)] = x[j];
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Eigen::VectorXd z = params.layers[l].weights * a + params.layers[l].bias;
    a = l + 1 < params.layers.size() ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return a[0];
}

Eigen::VectorXd forward_batch(const MlpParameters& params, std::span<const Point> inputs) {
  if (inputs.empty()) return {};
  return propagate(params, inputs).back().row(0).transpose();
}

Eigen::MatrixXd jacobian(const MlpParameters& params, std::span<const Point> inputs) {
  if (inputs.empty()) throw std::invalid_argument("jacobian: no inputs");
  const auto acts = propagate(params, inputs);
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd jac(n, static_cast<Eigen::Index>(params.size()));

  std::vector<Eigen::Index> offsets(params.layers.size());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    offsets[l] = pos;
    pos += params.layers[l].weights.size() + params.layers[l].bias.size();
  }

  // delta(i, k): derivative of output k w.r.t. the pre-activation of unit i.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Ones(1, n);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& w = params.layers[l].weights;
    const Eigen::MatrixXd& prev = acts[l];
    Eigen::Index col = offsets[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        jac.col(col++) = (delta.row(i).array() * prev.row(j).array()).transpose();
    for (Eigen::Index i = 0; i < w.rows(); ++i) jac.col(col++) = delta.row(i).transpose();
    if (l > 0) {
      Eigen::MatrixXd back = w.transpose() * delta;
      delta = (back.array() * (1.0 - prev.array().square())).matrix();
    }
  }
  return jac;
}

double mean_squared_error(const MlpParameters& params, DataView data) {
  if (data.size() == 0) throw std::invalid_argument("mean_squared_error: empty data");
  const Eigen::VectorXd out = forward_batch(params, data.inputs);
  double ss = 0.0;
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double r = out[k] - data.targets[static_cast<std::size_t>(k)];
    ss += r * r;
  }
  return ss / static_cast<double>(data.size());
}

namespace {

Eigen::VectorXd residuals(const MlpParameters& p, DataView data) {
  Eigen::VectorXd r = forward_batch(p, data.inputs);
  for (Eigen::Index k = 0; k < r.size(); ++k) r[k] -= data.targets[static_cast<std::size_t>(k)];
  return r;
}

bool constant_targets(DataView train, DataView val, double& value) {
  value = train.targets.front();
  for (double t : train.targets)
    if (t != value) return false;
  for (double t : val.targets)
    if (t != value) return false;
  return true;
}

}  // namespace

TrainResult train_levenberg_marquardt(const Architecture& arch, MlpParameters init,
                                      DataView train, DataView val, const LmConfig& config) {
  if (train.size() == 0 || val.size() == 0)
    throw std::invalid_argument("train_levenberg_marquardt: empty train or validation set");
  if (train.inputs.size() != train.targets.size() || val.inputs.size() != val.targets.size())
    throw std::invalid_argument("train_levenberg_marquardt: inputs and targets differ in length");
  if (!init.conforms_to(arch))
    throw std::invalid_argument("train_levenberg_marquardt: parameters do not match architecture");

  TrainResult result{std::move(init), {}};
  TrainReport& report = result.report;

  double constant = 0.0;
  if (constant_targets(train, val, constant)) {
    auto& out = result.params.layers.back();
    out.weights.setZero();
    out.bias.setConstant(constant);
    report.final_train_mse = 0.0;
    report.final_val_mse = 0.0;
    report.converged = true;
    report.stop_reason = "constant response";
    report.train_loss_history = {0.0};
    return result;
  }

  MlpParameters current = result.params;
  Eigen::VectorXd theta = current.flatten();
  Eigen::VectorXd r = residuals(current, train);
  const auto n_train = static_cast<double>(train.size());
  double train_mse = r.squaredNorm() / n_train;
  double best_val = mean_squared_error(current, val);
  double best_train = train_mse;
  report.train_loss_history.push_back(train_mse);

  double damping = config.initial_damping;
  std::size_t val_failures = 0;
  const auto p = static_cast<Eigen::Index>(theta.size());

  while (true) {
    if (train_mse <= config.goal) {
      report.converged = true;
      report.stop_reason = "goal reached";
      break;
    }
    if (report.iterations >= config.max_iterations) {
      report.stop_reason = "maximum iterations";
      break;
    }
    const Eigen::MatrixXd jac = jacobian(current, train.inputs);
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (2.0 * grad.norm() / n_train < config.min_gradient) {
      report.converged = true;
      report.stop_reason = "minimum gradient";
      break;
    }
    const Eigen::MatrixXd normal = jac.transpose() * jac;

    bool accepted = false;
    while (damping <= config.max_damping) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal().array() += damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd step;
      if (ldlt.info() == Eigen::Success) step = ldlt.solve(grad);
      if (step.size() != p || !step.allFinite()) {
        damping *= config.damping_increase;
        continue;
      }
      Eigen::VectorXd trial_theta = theta - step;
      MlpParameters trial = current;
      trial.assign(trial_theta);
      Eigen::VectorXd trial_r = residuals(trial, train);
      const double trial_mse = trial_r.squaredNorm() / n_train;
      if (std::isfinite(trial_mse) && trial_mse < train_mse) {
        theta = std::move(trial_theta);
        current = std::move(trial);
        r = std::move(trial_r);
        train_mse = trial_mse;
        damping *= config.damping_decrease;
        accepted = true;
        break;
      }
      damping *= config.damping_increase;
    }
    if (!accepted) {
      report.stop_reason = "maximum damping";
      break;
    }
    ++report.iterations;
    report.train_loss_history.push_back(train_mse);

    const double val_mse = mean_squared_error(current, val);
    if (val_mse < best_val) {
      best_val = val_mse;
      best_train = train_mse;
      result.params = current;
      val_failures = 0;
    } else if (++val_failures >= config.max_validation_failures) {
      report.converged = true;
      report.stop_reason = "validation stop";
      break;
    }
  }

  report.final_train_mse = best_train;
  report.final_val_mse = best_val;
  return result;
}

}  // namespace freqens
