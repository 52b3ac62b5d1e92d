#include "freqens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "freqens/parallel.hpp"
#include "freqens/rng.hpp"

namespace freqens {

using nlohmann::json;

void EnsembleConfig::validate() const {
  if (m < 2) throw std::invalid_argument("ensemble: m must be at least 2");
  if (retries < 1) throw std::invalid_argument("ensemble: retries must be at least 1");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw std::invalid_argument("ensemble: train_ratio must lie in (0, 1)");
}

std::vector<double> Ensemble::component_errors() const {
  std::vector<double> e;
  e.reserve(components.size());
  for (const auto& c : components) e.push_back(c.error_sum());
  return e;
}

std::vector<Architecture> default_candidates(std::size_t input_dim) {
  std::vector<Architecture> out;
  for (std::size_t w : {2, 4, 8, 16, 32}) out.push_back({input_dim, {w}});
  return out;
}

namespace {

// Scaled copy of a dataset, ready for training.
struct ScaledData {
  std::vector<Point> inputs;
  std::vector<double> targets;
};

ScaledData scale_dataset(const Dataset& data, const Scaler& scaler) {
  ScaledData s;
  s.inputs.reserve(data.size());
  s.targets.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    s.inputs.push_back(scaler.scale_input(data.points[k]));
    s.targets.push_back(scaler.scale_output(data.responses[k]));
  }
  return s;
}

struct SplitData {
  ScaledData train;
  ScaledData val;
};

SplitData apply_split(const ScaledData& all, const SplitIndices& split) {
  SplitData out;
  for (std::size_t i : split.train) {
    out.train.inputs.push_back(all.inputs[i]);
    out.train.targets.push_back(all.targets[i]);
  }
  for (std::size_t i : split.validation) {
    out.val.inputs.push_back(all.inputs[i]);
    out.val.targets.push_back(all.targets[i]);
  }
  return out;
}

struct TrialOutcome {
  TrainResult result;
  std::uint64_t seed = 0;
  bool failed = false;

  double error_sum() const {
    return failed ? std::numeric_limits<double>::infinity()
                  : result.report.final_train_mse + result.report.final_val_mse;
  }
};

TrialOutcome train_one(const Architecture& arch, const SplitData& split, std::uint64_t seed,
                       const LmConfig& lm) {
  TrialOutcome out;
  out.seed = seed;
  try {
    out.result = train_levenberg_marquardt(
        arch, init_parameters(arch, seed), DataView{split.train.inputs, split.train.targets},
        DataView{split.val.inputs, split.val.targets}, lm);
    out.failed = !out.result.params.all_finite() || !std::isfinite(out.error_sum());
  } catch (const std::exception&) {
    out.failed = true;
  }
  return out;
}

// Seed paths; the tags keep split and initialization streams apart.
constexpr std::uint64_t kSplitTag = 1;
constexpr std::uint64_t kInitTag = 2;

// Scores are MSEs of standardized outputs, so 1e-6 is negligible.
bool nearly_equal(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-3 * std::max(std::abs(a), std::abs(b)) + 1e-6;
}

}  // namespace

Architecture select_architecture(const Dataset& dataset, std::span<const Architecture> candidates,
                                 const SelectionConfig& config,
                                 std::vector<ArchitectureScore>* scores) {
  if (candidates.empty()) throw std::invalid_argument("select_architecture: no candidates");
  if (config.k_splits < 2) throw std::invalid_argument("select_architecture: k_splits must be >= 2");
  if (config.retries < 1) throw std::invalid_argument("select_architecture: retries must be >= 1");
  for (const auto& c : candidates) {
    c.validate();
    if (c.input_dim != dataset.domain.dim())
      throw std::invalid_argument("select_architecture: candidate input_dim mismatch");
  }
  if (candidates.size() == 1) {
    if (scores) scores->assign({{candidates[0], 0.0}});
    return candidates[0];
  }

  const ScaledData all = scale_dataset(dataset, fit_scaler(dataset));
  std::vector<SplitData> splits;
  for (std::size_t k = 0; k < config.k_splits; ++k)
    splits.push_back(apply_split(
        all, random_split(dataset.size(), config.train_ratio,
                          derive_seed(config.seed, {kSplitTag, k}))));

  const std::size_t per_candidate = config.k_splits * config.retries;
  std::vector<double> trial_error(candidates.size() * per_candidate);
  parallel_for(trial_error.size(), config.threads, [&](std::size_t t) {
    const std::size_t c = t / per_candidate;
    const std::size_t k = (t % per_candidate) / config.retries;
    const std::size_t r = t % config.retries;
    trial_error[t] =
        train_one(candidates[c], splits[k], derive_seed(config.seed, {kInitTag, k, r}), config.lm)
            .error_sum();
  });

  std::vector<ArchitectureScore> table;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double total = 0.0;
    for (std::size_t k = 0; k < config.k_splits; ++k) {
      const auto first = trial_error.begin() +
                         static_cast<std::ptrdiff_t>(c * per_candidate + k * config.retries);
      total += *std::min_element(first, first + static_cast<std::ptrdiff_t>(config.retries));
    }
    table.push_back({candidates[c], total / static_cast<double>(config.k_splits)});
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < table.size(); ++c) {
    const double a = table[c].score;
    const double b = table[best].score;
    const bool fewer = table[c].architecture.parameter_count() <
                       table[best].architecture.parameter_count();
    if (nearly_equal(a, b) ? fewer : a < b) best = c;
  }
  if (!std::isfinite(table[best].score))
    throw std::runtime_error("select_architecture: every candidate failed to train");
  if (scores) *scores = std::move(table);
  return candidates[best];
}

Ensemble prepare_ensemble(const Dataset& dataset, const Architecture& arch,
                          const EnsembleConfig& config) {
  config.validate();
  arch.validate();
  if (arch.input_dim != dataset.domain.dim())
    throw std::invalid_argument("prepare_ensemble: architecture input_dim mismatch");
  Ensemble ens{arch, fit_scaler(dataset), dataset.domain, config, {}, {}};
  const ScaledData all = scale_dataset(dataset, ens.scaler);

  std::vector<SplitData> splits;
  splits.reserve(config.m);
  for (std::size_t c = 0; c < config.m; ++c)
    splits.push_back(apply_split(
        all, random_split(dataset.size(), config.train_ratio,
                          derive_seed(config.seed, {kSplitTag, c}))));

  std::vector<TrialOutcome> trials(config.m * config.retries);
  parallel_for(trials.size(), config.threads, [&](std::size_t t) {
    const std::size_t c = t / config.retries;
    const std::size_t r = t % config.retries;
    trials[t] = train_one(arch, splits[c], derive_seed(config.seed, {kInitTag, c, r}), config.lm);
  });

  ens.components.reserve(config.m);
  for (std::size_t c = 0; c < config.m; ++c) {
    std::size_t best = c * config.retries;
    bool any_converged = false;
    for (std::size_t r = 0; r < config.retries; ++r) {
      const std::size_t t = c * config.retries + r;
      if (!trials[t].failed && trials[t].result.report.converged) any_converged = true;
      if (trials[t].error_sum() < trials[best].error_sum()) best = t;
    }
    TrialOutcome& kept = trials[best];
    if (kept.failed)
      throw std::runtime_error("prepare_ensemble: every retry of combination " +
                               std::to_string(c) + " failed");
    if (!any_converged) ens.unconverged_combinations.push_back(c);
    ens.components.push_back({std::move(kept.result.params), kept.result.report.final_train_mse,
                              kept.result.report.final_val_mse, c, kept.seed,
                              kept.result.report.converged});
  }
  return ens;
}

Eigen::MatrixXd predict_matrix(const Ensemble& ensemble, std::span<const Point> points) {
  std::vector<Point> scaled;
  scaled.reserve(points.size());
  for (const auto& p : points) {
    if (p.size() != ensemble.domain.dim())
      throw std::invalid_argument("predict: expected " + std::to_string(ensemble.domain.dim()) +
                                  " inputs");
    for (double v : p)
      if (!std::isfinite(v)) throw std::invalid_argument("predict: non-finite input");
    scaled.push_back(ensemble.scaler.scale_input(p));
  }
  const auto rows = static_cast<Eigen::Index>(points.size());
  const auto cols = static_cast<Eigen::Index>(ensemble.size());
  Eigen::MatrixXd out(rows, cols);
  if (rows == 0) return out;
  for (Eigen::Index i = 0; i < cols; ++i) {
    const auto& comp = ensemble.components[static_cast<std::size_t>(i)];
    Eigen::VectorXd z = forward_batch(comp.params, scaled);
    for (Eigen::Index k = 0; k < rows; ++k) {
      const double y = ensemble.scaler.unscale_output(z[k]);
      if (!std::isfinite(y))
        throw std::runtime_error("predict: component " + std::to_string(i) +
                                 " produced a non-finite output at point " + std::to_string(k));
      out(k, i) = y;
    }
  }
  return out;
}

PredictionDistribution predict_distribution(const Ensemble& ensemble, std::span<const double> x) {
  PredictionDistribution dist;
  dist.point.assign(x.begin(), x.end());
  dist.outside_domain = !ensemble.domain.contains(x);
  const std::vector<Point> one{dist.point};
  const Eigen::MatrixXd row = predict_matrix(ensemble, one);
  dist.values.assign(row.data(), row.data() + row.size());
  return dist;
}

namespace {

json architecture_json(const Architecture& a) {
  return {{"input_dim", a.input_dim}, {"hidden_layers", a.hidden_layers}};
}

Architecture architecture_from(const json& j) {
  Architecture a{j.at("input_dim").get<std::size_t>(),
                 j.at("hidden_layers").get<std::vector<std::size_t>>()};
  a.validate();
  return a;
}

json parameters_json(const MlpParameters& p) {
  json layers = json::array();
  for (const auto& l : p.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) w.push_back(l.weights(i, j));
    layers.push_back({{"rows", l.weights.rows()},
                      {"cols", l.weights.cols()},
                      {"weights", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return layers;
}

MlpParameters parameters_from(const json& layers, const Architecture& arch) {
  MlpParameters p;
  for (const auto& l : layers) {
    const auto rows = l.at("rows").get<Eigen::Index>();
    const auto cols = l.at("cols").get<Eigen::Index>();
    const auto w = l.at("weights").get<std::vector<double>>();
    const auto b = l.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
      throw std::runtime_error("model file: layer shape mismatch");
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) layer.weights(i, j) = w[static_cast<std::size_t>(i * cols + j)];
      layer.bias[i] = b[static_cast<std::size_t>(i)];
    }
    p.layers.push_back(std::move(layer));
  }
  if (!p.conforms_to(arch)) throw std::runtime_error("model file: layers do not match architecture");
  return p;
}

std::string component_file(std::size_t i) {
  std::ostringstream name;
  name << "component_" << std::setw(3) << std::setfill('0') << i << ".json";
  return name.str();
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

}  // namespace

void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = "freqens-ensemble";
  manifest["version"] = 1;
  manifest["config"] = {{"m", ensemble.config.m},
                        {"retries", ensemble.config.retries},
                        {"train_ratio", ensemble.config.train_ratio},
                        {"seed", ensemble.config.seed}};
  manifest["architecture"] = architecture_json(ensemble.architecture);
  manifest["domain"] = {{"lower", ensemble.domain.lower()}, {"upper", ensemble.domain.upper()}};
  const Scaler& s = ensemble.scaler;
  manifest["scaler"] = {{"input_offset", s.input_offset},   {"input_scale", s.input_scale},
                        {"output_offset", s.output_offset}, {"output_scale", s.output_scale},
                        {"constant_response", s.constant_response}};
  manifest["unconverged_combinations"] = ensemble.unconverged_combinations;
  json comps = json::array();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto& c = ensemble.components[i];
    const std::string file = component_file(i);
    comps.push_back({{"file", file},
                     {"combination_index", c.combination_index},
                     {"seed", c.seed},
                     {"train_error", c.train_error},
                     {"val_error", c.val_error},
                     {"converged", c.converged}});
    write_json({{"architecture", architecture_json(ensemble.architecture)},
                {"layers", parameters_json(c.params)},
                {"scaler", "manifest.json"},
                {"seed", c.seed}},
               dir / file);
  }
  manifest["components"] = std::move(comps);
  write_json(manifest, dir / "manifest.json");
}

Ensemble load_ensemble(const std::filesystem::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.value("format", "") != "freqens-ensemble")
    throw std::runtime_error(dir.string() + ": not an ensemble directory");
  const Architecture arch = architecture_from(manifest.at("architecture"));
  Domain domain(manifest.at("domain").at("lower").get<std::vector<double>>(),
                manifest.at("domain").at("upper").get<std::vector<double>>());
  const json& sj = manifest.at("scaler");
  Scaler scaler{sj.at("input_offset").get<std::vector<double>>(),
                sj.at("input_scale").get<std::vector<double>>(),
                sj.at("output_offset").get<double>(), sj.at("output_scale").get<double>(),
                sj.at("constant_response").get<bool>()};
  EnsembleConfig config;
  const json& cj = manifest.at("config");
  config.m = cj.at("m").get<std::size_t>();
  config.retries = cj.at("retries").get<std::size_t>();
  config.train_ratio = cj.at("train_ratio").get<double>();
  config.seed = cj.at("seed").get<std::uint64_t>();

  Ensemble ens{arch, std::move(scaler), std::move(domain), config, {}, {}};
  ens.unconverged_combinations =
      manifest.value("unconverged_combinations", std::vector<std::size_t>{});
  for (const auto& cj2 : manifest.at("components")) {
    const json model = read_json(dir / cj2.at("file").get<std::string>());
    if (architecture_from(model.at("architecture")) != arch)
      throw std::runtime_error("component architecture differs from the manifest");
    ens.components.push_back({parameters_from(model.at("layers"), arch),
                              cj2.at("train_error").get<double>(), cj2.at("val_error").get<double>(),
                              cj2.at("combination_index").get<std::size_t>(),
                              cj2.at("seed").get<std::uint64_t>(), cj2.at("converged").get<bool>()});
  }
  if (ens.components.size() < 2) throw std::runtime_error("ensemble needs at least 2 components");
  return ens;
}

}  // namespace freqens
