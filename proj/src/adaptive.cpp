#include "freqens/adaptive.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "freqens/benchmarks.hpp"
#include "freqens/combiners.hpp"
#include "freqens/format.hpp"
#include "freqens/rng.hpp"

namespace freqens {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::core_variance: return "core_variance";
    case Strategy::prediction_variance: return "prediction_variance";
    case Strategy::ilhs: return "ilhs";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "core_variance") return Strategy::core_variance;
  if (name == "prediction_variance") return Strategy::prediction_variance;
  if (name == "ilhs") return Strategy::ilhs;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected core_variance, prediction_variance or ilhs)");
}

Population generate_population(const Domain& domain, std::size_t size, std::uint64_t seed) {
  if (size == 0) throw std::invalid_argument("generate_population: size must be positive");
  return {lhs_sample(domain, size, seed), seed, "lhs"};
}

std::vector<double> score_population(const Ensemble& ensemble, const Population& population,
                                     ScoreMode mode, double criterion) {
  if (population.candidates.empty())
    throw std::invalid_argument("score_population: empty population");
  Eigen::MatrixXd preds;
  try {
    preds = predict_matrix(ensemble, population.candidates);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("score_population: ") + e.what());
  }
  std::vector<double> scores(population.candidates.size());
  std::vector<double> row(static_cast<std::size_t>(preds.cols()));
  for (std::size_t k = 0; k < scores.size(); ++k) {
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = preds(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
    scores[k] = mode == ScoreMode::core_variance ? core_prediction_variance(row, criterion)
                                                 : prediction_variance(row);
  }
  return scores;
}

Selection select_next_sample(std::span<const double> scores, const Population& population) {
  if (scores.size() != population.candidates.size())
    throw std::invalid_argument("select_next_sample: scores and population differ in length");
  std::size_t best = scores.size();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k])) continue;
    if (best == scores.size() || scores[k] > scores[best]) best = k;
  }
  if (best == scores.size()) throw std::runtime_error("select_next_sample: no finite score");
  return {best, population.candidates[best]};
}

namespace {

std::size_t interval_of(double x, double lo, double hi, std::size_t n) {
  const double t = (x - lo) / (hi - lo) * static_cast<double>(n);
  if (t <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(std::floor(t)), n - 1);
}

}  // namespace

Point ilhs_augment(std::span<const Point> existing, const Domain& domain, std::uint64_t seed) {
  if (existing.empty()) throw std::invalid_argument("ilhs_augment: no existing points");
  for (const auto& p : existing)
    if (!domain.contains(p)) throw std::invalid_argument("ilhs_augment: point outside domain");
  const std::size_t cells = existing.size() + 1;
  Rng rng(seed);
  Point x(domain.dim());
  for (std::size_t j = 0; j < domain.dim(); ++j) {
    const double lo = domain.lower()[j];
    const double hi = domain.upper()[j];
    std::vector<bool> occupied(cells, false);
    for (const auto& p : existing) occupied[interval_of(p[j], lo, hi, cells)] = true;
    std::vector<std::size_t> free;
    for (std::size_t c = 0; c < cells; ++c)
      if (!occupied[c]) free.push_back(c);
    const std::size_t cell = free[rng.index(free.size())];
    const double k = static_cast<double>(cell);
    double v = lo + (hi - lo) * (k + rng.uniform()) / static_cast<double>(cells);
    if (interval_of(v, lo, hi, cells) != cell)
      v = lo + (hi - lo) * (k + 0.5) / static_cast<double>(cells);
    x[j] = v;
  }
  return x;
}

void AdaptiveConfig::validate() const {
  if (budget < 1) throw std::invalid_argument("adaptive: budget must be at least 1");
  if (strategy != Strategy::ilhs && population_size < budget)
    throw std::invalid_argument("adaptive: population_size must be at least the budget");
  if (population_size == 0) throw std::invalid_argument("adaptive: population_size must be positive");
  required_frequency(2, criterion);
  ensemble.validate();
}

std::vector<double> predict_frequency(const Ensemble& ensemble, std::span<const Point> points,
                                      double criterion) {
  const Eigen::MatrixXd preds = predict_matrix(ensemble, points);
  std::vector<double> out(points.size());
  std::vector<double> row(static_cast<std::size_t>(preds.cols()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = preds(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
    out[k] = search_core_predictions(row, criterion).final_value;
  }
  return out;
}

namespace {

constexpr std::uint64_t kEnsembleTag = 11;
constexpr std::uint64_t kPopulationTag = 12;
constexpr std::uint64_t kIlhsTag = 13;

}  // namespace

std::uint64_t population_seed(std::uint64_t loop_seed, std::size_t iteration) {
  return derive_seed(loop_seed, {kPopulationTag, iteration});
}

namespace {

bool already_sampled(const Point& candidate, const Dataset& data, const Scaler& scaler) {
  const Point z = scaler.scale_input(candidate);
  for (const auto& p : data.points) {
    const Point q = scaler.scale_input(p);
    double d2 = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) d2 += (z[j] - q[j]) * (z[j] - q[j]);
    if (std::sqrt(d2) < 1e-9) return true;
  }
  return false;
}

}  // namespace

AdaptiveHistory run_adaptive_loop(Dataset dataset, const TrueFunction& truth,
                                  const Architecture& arch, const AdaptiveConfig& config,
                                  const TestSet& test) {
  config.validate();
  dataset.validate();
  AdaptiveHistory history;
  history.strategy = config.strategy;
  history.seed = config.seed;
  history.initial_samples = dataset.size();

  auto build = [&](std::size_t iteration) {
    EnsembleConfig ec = config.ensemble;
    ec.seed = derive_seed(config.seed, {kEnsembleTag, iteration});
    return prepare_ensemble(dataset, arch, ec);
  };

  auto score = [&](const Ensemble& ens, double& nrmse_out, double& median_out) {
    const std::vector<double> pred = predict_frequency(ens, test.points, config.criterion);
    nrmse_out = nrmse(test.truth, pred);
    const RelativeErrors rel = relative_errors(test.truth, pred);
    median_out = rel.percent.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : median(rel.percent);
  };

  Ensemble ensemble = build(0);
  score(ensemble, history.initial_nrmse, history.initial_median_relative_error);

  for (std::size_t t = 1; t <= config.budget; ++t) {
    AdaptiveRecord rec;
    rec.iteration = t;
    if (config.strategy == Strategy::ilhs) {
      rec.point = ilhs_augment(dataset.points, dataset.domain,
                               derive_seed(config.seed, {kIlhsTag, t}));
      rec.criterion_value = std::numeric_limits<double>::quiet_NaN();
    } else {
      const Population pop = generate_population(dataset.domain, config.population_size,
                                                 population_seed(config.seed, t));
      const ScoreMode mode = config.strategy == Strategy::core_variance
                                 ? ScoreMode::core_variance
                                 : ScoreMode::prediction_variance;
      std::vector<double> scores = score_population(ensemble, pop, mode, config.criterion);
      for (std::size_t k = 0; k < scores.size(); ++k)
        if (already_sampled(pop.candidates[k], dataset, ensemble.scaler))
          scores[k] = std::numeric_limits<double>::quiet_NaN();
      Selection sel = select_next_sample(scores, pop);
      rec.point = std::move(sel.point);
      rec.criterion_value = scores[sel.index];
    }

    double y = 0.0;
    try {
      y = truth(rec.point);
      if (!std::isfinite(y)) throw std::runtime_error("non-finite response");
    } catch (const std::exception& e) {
      history.aborted = true;
      history.error = "true-function evaluation failed at iteration " + std::to_string(t) +
                      ": " + e.what();
      return history;
    }
    dataset.append(rec.point, y);
    ensemble = build(t);
    rec.n_samples = dataset.size();
    score(ensemble, rec.nrmse, rec.median_relative_error);
    history.records.push_back(std::move(rec));
  }
  return history;
}

void save_history_csv(const AdaptiveHistory& history, std::size_t dim,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,n_samples";
  for (std::size_t j = 0; j < dim; ++j) out << ",x" << j + 1;
  out << ",criterion_value,nrmse\n";
  out << "0," << history.initial_samples;
  for (std::size_t j = 0; j < dim; ++j) out << ",nan";
  out << ",nan," << format_double(history.initial_nrmse) << '\n';
  for (const auto& r : history.records) {
    out << r.iteration << ',' << r.n_samples;
    for (double v : r.point) out << ',' << format_double(v);
    out << ',' << format_double(r.criterion_value) << ',' << format_double(r.nrmse) << '\n';
  }
}

}  // namespace freqens
